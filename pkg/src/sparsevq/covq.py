"""Channel-optimized vector quantization trained on reconstructed sources.

The encoder minimizes the channel-expected squared error

    score(x, i) = sum_j P(j|i) ||c_j||^2  -  2 x' sum_j P(j|i) c_j

and the decoder update sets every codevector to the channel-weighted cell
mean of the training vectors.  Both steps minimize the same sampled
objective, so the traced distortion is non-increasing iteration to
iteration.  Codebook growth keeps the original vectors and appends
perturbed copies, which preserves that monotonicity across growth events.

The same machinery trains the measurement-space baseline (quantize y
directly, reconstruct from the decoded codevector): only the vectors fed
in and the domain tag differ.
"""

from dataclasses import dataclass, field

import numpy as np

# Encode passes run in sample chunks sized so one chunk's score block stays
# cache-resident for the argmin scan.  The chunk size depends only on the
# codebook size, never on the data or the machine, so reductions happen in a
# reproducible order on every run.
ENCODE_BLOCK_BYTES = 16 << 20
ENCODE_CHUNK = 1024


def _encode_chunk(size):
    return max(32, min(ENCODE_CHUNK, ENCODE_BLOCK_BYTES // (8 * size)))


class NumericalFailure(RuntimeError):
    """Raised when a training pass produces a non-finite distortion."""


@dataclass
class Codebook:
    """2^rate_bits reproduction vectors in the source or measurement domain."""

    vectors: np.ndarray
    domain: str = "source"

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValueError("codebook must be a 2-d array")
        size = self.vectors.shape[0]
        if size < 1 or size & (size - 1):
            raise ValueError(f"codebook size {size} is not a power of two")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("codebook contains non-finite vectors")
        if self.domain not in ("source", "measurement"):
            raise ValueError(f"unknown domain {self.domain!r}")

    @property
    def size(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def rate_bits(self):
        return int(self.size - 1).bit_length()


@dataclass(frozen=True)
class TrainConfig:
    max_iters: int = 100
    rel_tol: float = 1e-5
    delta_split: float = 1e-3
    n_train: int = 100_000

    def __post_init__(self):
        if self.max_iters < 1 or self.rel_tol < 0 or self.n_train < 1:
            raise ValueError("invalid training configuration")
        if self.delta_split <= 0:
            raise ValueError("delta_split must be positive")


@dataclass
class TrainTrace:
    """Per-iteration distortion with the growth/reseed event positions.

    ``events[i] = t`` records that the codebook grew or had empty cells
    reseeded between trace entries ``t`` and ``t + 1``.
    """

    distortion: np.ndarray
    events: list = field(default_factory=list)
    n_splits: int = 0


def _smeared(codebook, dmc):
    """Channel-expected codevectors and codevector energies per sent index."""
    c = codebook.vectors
    energies = np.einsum("ij,ij->i", c, c)
    if dmc is None or dmc.is_noiseless:
        return c, energies
    return dmc.apply(c), dmc.apply(energies)


def _encode_pass(vectors, exp_c, exp_e):
    """Argmin of the channel-expected score, plus the per-sample best score."""
    n = vectors.shape[0]
    size = exp_c.shape[0]
    indices = np.empty(n, dtype=np.int64)
    best = np.empty(n)
    neg2c_t = np.ascontiguousarray(-2.0 * exp_c.T)
    chunk = _encode_chunk(size)
    buf = np.empty((min(chunk, n), size))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        scores = buf[: stop - start]
        np.dot(vectors[start:stop], neg2c_t, out=scores)
        scores += exp_e[None, :]
        idx = np.argmin(scores, axis=1)
        indices[start:stop] = idx
        best[start:stop] = scores[np.arange(stop - start), idx]
    return indices, best


def covq_encode(x, codebook, dmc, return_scores=False):
    """Encode one vector or a batch against a codebook and channel.

    With a noiseless channel this is exactly nearest-neighbor encoding.
    Ties always resolve to the lowest index.  ``return_scores`` exposes the
    full score table instead of the argmin (used by audits and tests).
    """
    if dmc is not None and codebook.size != dmc.size:
        raise ValueError("codebook and channel alphabet sizes differ")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    if xb.shape[1] != codebook.dim:
        raise ValueError("vector dimension does not match the codebook")
    exp_c, exp_e = _smeared(codebook, dmc)
    if return_scores:
        scores = exp_e[None, :] - 2.0 * (xb @ exp_c.T)
        return scores[0] if single else scores
    indices, _ = _encode_pass(xb, exp_c, exp_e)
    return int(indices[0]) if single else indices


def covq_decoder_update(vectors, indices, dmc, codebook):
    """Channel-weighted centroid update.

    c_j = sum_i P(j|i) S_i / sum_i P(j|i) n_i with S_i, n_i the per-cell
    vector sums and counts from the encoder pass.  Cells that receive no
    mass keep their previous codevector.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    size = codebook.size
    counts = np.bincount(indices, minlength=size).astype(np.float64)
    sums = np.empty((size, vectors.shape[1]))
    for d in range(vectors.shape[1]):
        sums[:, d] = np.bincount(indices, weights=vectors[:, d], minlength=size)
    if dmc is None or dmc.is_noiseless:
        numer, denom = sums, counts
    else:
        numer, denom = dmc.apply_t(sums), dmc.apply_t(counts)
    new = codebook.vectors.copy()
    mass = denom > 0.0
    new[mass] = numer[mass] / denom[mass, None]
    return Codebook(new, codebook.domain)


def split_empty_cells(codebook, usage, delta=1e-3):
    """Reseed never-used encoder indexes by splitting the busiest cells.

    Empty cells claim donors in decreasing-usage order, one donor per empty
    cell per round, and each reseed becomes donor * (1 + round * delta): a
    small scaled copy that lands inside the populated region it splits.
    Keeping the perturbation tiny matters when empties are plentiful (huge
    codebooks on modest training sets) — growing the offset with the empty
    cell's rank instead would strand most reseeds outside the data cloud,
    where they capture nothing and their indexes stay dead.  Returns the
    codebook unchanged when every cell is used.
    """
    usage = np.asarray(usage)
    if usage.shape[0] != codebook.size:
        raise ValueError("usage length does not match the codebook")
    unused = np.flatnonzero(usage == 0)
    if unused.size == 0:
        return codebook
    order = np.argsort(-usage, kind="stable")
    busy = order[usage[order] > 0]
    if busy.size == 0:
        return codebook
    new = codebook.vectors.copy()
    for r, j in enumerate(unused):
        donor = codebook.vectors[busy[r % busy.size]]
        new[j] = donor * (1.0 + (r // busy.size + 1) * delta)
    return Codebook(new, codebook.domain)


@dataclass
class FitResult:
    codebook: Codebook
    trace: TrainTrace
    assignments: np.ndarray  # final-pass encoder index per training vector


def _lloyd(vectors, codebook, dmc, cfg, trace, events, mean_energy):
    """Alternate encode / update passes on a fixed-size codebook.

    Appends one distortion entry per encode pass and stops once the relative
    improvement falls under cfg.rel_tol or after cfg.max_iters update passes.
    The alternation cannot increase the objective, so a measured increase on
    a plain step is floating-point noise, and a measured increase right
    after an empty-cell reseed means the reseed did not help; either way the
    step is rolled back and the previous, better iterate returned (dropping
    the reseed's event record), so recorded distortions never increase.  A
    reseed must consequently pay at least the convergence tolerance to keep
    training alive, which bounds reseed churn when the codebook is much
    larger than the data supports.  The returned codebook is the one
    measured by the last trace entry, so codebook, assignments and trace
    always agree.

    Empty-cell reseeding runs only for noiseless channels (dmc=None here).
    Under a noisy channel an encoder-unused index needs no rescue: its
    codevector still receives decoder mass through the channel weights,
    whereas planting it far from the data would raise every index's
    channel-expected score through those same weights.
    """
    n_splits = 0
    prev = None
    prev_state = None
    fresh_split = False
    updates = 0
    while True:
        exp_c, exp_e = _smeared(codebook, dmc)
        idx, best = _encode_pass(vectors, exp_c, exp_e)
        dist = float(best.mean() + mean_energy)
        if not np.isfinite(dist):
            raise NumericalFailure("non-finite training distortion")
        if prev is not None and dist > prev:
            if fresh_split:
                events.pop()
                n_splits -= 1
            codebook, idx = prev_state
            return codebook, idx, n_splits
        trace.append(dist)
        converged = (prev is not None
                     and (prev - dist <= cfg.rel_tol * abs(prev) or dist == 0.0))
        if converged or updates >= cfg.max_iters:
            return codebook, idx, n_splits
        prev = dist
        prev_state = (codebook, idx)
        fresh_split = False
        usage = np.bincount(idx, minlength=codebook.size)
        codebook = covq_decoder_update(vectors, idx, dmc, codebook)
        updates += 1
        if dmc is None and updates + 1 < cfg.max_iters and (usage == 0).any():
            codebook = split_empty_cells(codebook, usage, cfg.delta_split)
            events.append(len(trace) - 1)
            n_splits += 1
            fresh_split = True


def fit_covq(vectors, rate_bits, dmc, cfg=TrainConfig(), init=None,
             domain="source"):
    """Train a channel-optimized codebook on prepared training vectors.

    Noiseless channels train by codebook growth: starting from the global
    mean, the codebook doubles (original vectors plus 1 + delta copies) and
    is Lloyd-refined at each size.  Noisy channels start from the converged
    noiseless codebook (or the given ``init``) and refine under the
    channel-expected rules; their returned trace covers only the
    final-channel iterations.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] < 1:
        raise ValueError("training vectors must form a non-empty 2-d array")
    if dmc is not None and dmc.rate_bits != rate_bits:
        raise ValueError("channel alphabet does not match the target rate")
    mean_energy = float(np.einsum("ij,ij->i", vectors, vectors).mean())
    noiseless = dmc is None or dmc.is_noiseless

    if init is None:
        base = _grow_noiseless(vectors, rate_bits, cfg, mean_energy, domain)
        if noiseless:
            return base
        init = base.codebook
    if init.size != (1 << rate_bits) or init.dim != vectors.shape[1]:
        raise ValueError("init codebook has the wrong shape")
    trace, events = [], []
    codebook, idx, n_splits = _lloyd(vectors, Codebook(init.vectors.copy(), domain),
                                     None if noiseless else dmc, cfg,
                                     trace, events, mean_energy)
    return FitResult(codebook, TrainTrace(np.asarray(trace), events, n_splits),
                     idx)


def _grow_noiseless(vectors, rate_bits, cfg, mean_energy, domain):
    """Growth ladder: global mean, then double-and-refine up to 2^rate_bits."""
    trace, events = [], []
    total_splits = 0
    codebook = Codebook(vectors.mean(axis=0, keepdims=True), domain)
    target = 1 << rate_bits
    codebook, idx, ns = _lloyd(vectors, codebook, None, cfg, trace, events,
                               mean_energy)
    total_splits += ns
    while codebook.size < target:
        grown = np.vstack([codebook.vectors,
                           codebook.vectors * (1.0 + cfg.delta_split)])
        codebook = Codebook(grown, domain)
        events.append(len(trace) - 1)
        codebook, idx, ns = _lloyd(vectors, codebook, None, cfg, trace, events,
                                   mean_energy)
        total_splits += ns
    return FitResult(codebook, TrainTrace(np.asarray(trace), events, total_splits),
                     idx)


def train_covq(model, spec, dmc, cfg, rng, estimator=None):
    """Generate training data from the model and fit a source-domain codebook.

    Returns (codebook, trace).  The training vectors are the estimator
    outputs for fresh noisy measurements of the sparse source.
    """
    from .harness import pick_estimator, reconstruct_batch
    from .sensing import generate_sources, measure

    x, _ = generate_sources(spec, cfg.n_train, rng)
    y = measure(x, model, rng)
    est = estimator if estimator is not None else pick_estimator(model, spec)
    xt = reconstruct_batch(y, model, spec, est)
    result = fit_covq(xt, dmc.rate_bits, dmc, cfg, domain="source")
    return result.codebook, result.trace


def train_nnc(model, spec, dmc, cfg, rng):
    """Measurement-domain baseline: quantize y itself with the same rules."""
    from .sensing import generate_sources, measure

    x, _ = generate_sources(spec, cfg.n_train, rng)
    y = measure(x, model, rng)
    result = fit_covq(y, dmc.rate_bits, dmc, cfg, domain="measurement")
    return result.codebook, result.trace


# Measurement-domain aliases: identical update rules, different vectors.
nnc_encode = covq_encode
nnc_decoder_update = covq_decoder_update
