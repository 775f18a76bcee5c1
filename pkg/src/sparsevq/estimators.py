"""Sparse reconstruction from noisy measurements, plus scalar Lloyd training.

The exact estimator enumerates every size-k support, weights the per-support
Gaussian posterior means by the support evidence and mixes them.  It is only
viable for small binomial(n, k); the orthogonal matching pursuit surrogate
covers everything else, including noiseless measurements where the exact
posterior degenerates.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MmseConfig:
    """Estimator selection: 'exact' enumeration or the 'omp' surrogate.

    ``max_supports`` caps the enumeration size in exact mode.
    """

    mode: str = "omp"
    max_supports: int = 10 ** 6

    def __post_init__(self):
        if self.mode not in ("exact", "omp"):
            raise ValueError(f"unknown estimator mode {self.mode!r}")
        if self.max_supports < 1:
            raise ValueError("max_supports must be positive")


def support_posteriors(y, model, spec):
    """Per-support posterior weights for measurement batch ``y``.

    Returns ``(supports, weights)`` where ``supports`` is the list of sorted
    index tuples and ``weights`` has shape (n_supports, batch), each column
    summing to 1.  Weights are formed in the log domain with max-subtraction.
    """
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    s2 = model.sigma_w2
    if s2 <= 0.0:
        raise ValueError("exact posterior requires sigma_w2 > 0; use omp")
    supports = list(itertools.combinations(range(spec.n), spec.k))
    log_ev = np.empty((len(supports), y.shape[0]))
    ynorm2 = np.einsum("ij,ij->i", y, y)
    for s_idx, sup in enumerate(supports):
        a = model.phi[:, list(sup)]
        b = np.eye(spec.k) + (a.T @ a) / s2
        sign, logdet_b = np.linalg.slogdet(b)
        z = y @ a  # (batch, k)
        quad = (ynorm2 - np.einsum("ij,ij->i", z, np.linalg.solve(b, z.T).T) / s2) / s2
        log_ev[s_idx] = -0.5 * (quad + logdet_b)
    log_ev -= log_ev.max(axis=0, keepdims=True)
    weights = np.exp(log_ev)
    weights /= weights.sum(axis=0, keepdims=True)
    return supports, weights


def mmse_exact(y, model, spec, cfg=MmseConfig(mode="exact")):
    """Posterior mean of the exactly sparse source given measurements.

    ``y`` may be a single vector or a (batch, m) array; the output matches.
    """
    y = np.asarray(y, dtype=np.float64)
    single = y.ndim == 1
    yb = np.atleast_2d(y)
    if yb.shape[1] != model.m:
        raise ValueError("measurement dimension mismatch")
    if model.sigma_w2 <= 0.0:
        raise ValueError("exact MMSE is undefined at sigma_w2 = 0; use omp")
    n_supports = math.comb(spec.n, spec.k)
    if n_supports > cfg.max_supports:
        raise ValueError(
            f"{n_supports} supports exceed the enumeration cap {cfg.max_supports}"
        )
    supports, weights = support_posteriors(yb, model, spec)
    s2 = model.sigma_w2
    xt = np.zeros((yb.shape[0], spec.n))
    for s_idx, sup in enumerate(supports):
        cols = list(sup)
        if not cols:
            continue
        a = model.phi[:, cols]
        b = np.eye(spec.k) + (a.T @ a) / s2
        mu = np.linalg.solve(b, (yb @ a).T / s2).T  # (batch, k)
        xt[:, cols] += weights[s_idx][:, None] * mu
    return xt[0] if single else xt


def omp(y, phi, k):
    """Orthogonal matching pursuit for one measurement vector."""
    return omp_batch(np.asarray(y, dtype=np.float64)[None, :], phi, k)[0]


def omp_batch(y, phi, k):
    """Vectorized OMP over a (batch, m) array of measurements.

    Each iteration picks the atom with the largest absolute correlation
    (ties go to the lowest column index), then least-squares fits on the
    selected columns.  Rank-deficient fits fall back to the pseudo-inverse
    and are counted in a log warning.
    """
    y = np.asarray(y, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    m, n = phi.shape
    if k > m:
        raise ValueError(f"cannot fit k={k} atoms with m={m} measurements")
    if y.shape[1] != m:
        raise ValueError("measurement dimension mismatch")
    batch = y.shape[0]
    x_hat = np.zeros((batch, n))
    if k == 0 or batch == 0:
        return x_hat
    residual = y.copy()
    chosen = np.zeros((batch, k), dtype=np.int64)
    taken = np.zeros((batch, n), dtype=bool)
    rows = np.arange(batch)
    coef = None
    for t in range(k):
        corr = np.abs(residual @ phi)
        corr[taken] = -1.0
        pick = np.argmax(corr, axis=1)  # first max, so ties go to the lowest index
        chosen[:, t] = pick
        taken[rows, pick] = True
        atoms = phi.T[chosen[:, : t + 1]]            # (batch, t+1, m)
        gram = atoms @ atoms.transpose(0, 2, 1)
        rhs = np.einsum("btm,bm->bt", atoms, y)
        coef = _solve_gram(gram, rhs)
        residual = y - np.einsum("bt,btm->bm", coef, atoms)
    np.put_along_axis(x_hat, chosen, coef, axis=1)
    return x_hat


def _solve_gram(gram, rhs):
    """Batched solve with a pseudo-inverse fallback on singular Grams."""
    dets = np.abs(np.linalg.det(gram))
    bad = dets < 1e-12
    coef = np.empty_like(rhs)
    good = ~bad
    if good.any():
        coef[good] = np.linalg.solve(gram[good], rhs[good][..., None])[..., 0]
    if bad.any():
        logger.warning("pseudo-inverse fallback for %d rank-deficient fits",
                       int(bad.sum()))
        coef[bad] = np.einsum("bij,bj->bi", np.linalg.pinv(gram[bad]), rhs[bad])
    return coef


@dataclass
class ScalarCodebook:
    """Strictly increasing scalar reproduction levels."""

    levels: np.ndarray

    def __post_init__(self):
        self.levels = np.asarray(self.levels, dtype=np.float64)
        if self.levels.ndim != 1 or self.levels.size < 1:
            raise ValueError("levels must be a non-empty 1-d array")
        if np.any(np.diff(self.levels) <= 0.0):
            raise ValueError("levels must be strictly increasing")

    @property
    def thresholds(self):
        return 0.5 * (self.levels[1:] + self.levels[:-1])

    def encode(self, values):
        return np.searchsorted(self.thresholds, np.asarray(values))

    def decode(self, indices):
        return self.levels[np.asarray(indices)]


def lloyd_scalar_gaussian(rate_bits, samples, rel_tol=1e-6, max_iters=500,
                          delta_split=1e-3):
    """Scalar Lloyd training of a 2^rate_bits-level quantizer on samples.

    Initializes at sample quantiles; empty cells are re-seeded next to the
    most populated level.  Returns a ScalarCodebook.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    size = 1 << rate_bits
    if samples.size < 1000 * size:
        raise ValueError(f"need at least {1000 * size} samples for {size} levels")
    levels = np.quantile(samples, (np.arange(size) + 0.5) / size)
    levels = _strictly_increasing(levels)
    prev = None
    for _ in range(max_iters):
        edges = 0.5 * (levels[1:] + levels[:-1])
        idx = np.searchsorted(edges, samples)
        counts = np.bincount(idx, minlength=size)
        sums = np.bincount(idx, weights=samples, minlength=size)
        filled = counts > 0
        levels = levels.copy()
        levels[filled] = sums[filled] / counts[filled]
        empties = np.flatnonzero(~filled)
        if empties.size:
            top = levels[int(np.argmax(counts))]
            for rank, j in enumerate(empties, start=1):
                levels[j] = top * (1.0 + rank * delta_split)
        levels = np.sort(levels)
        levels = _strictly_increasing(levels)
        # distortion of the updated levels under the partition just used;
        # reseeds invalidate the comparison for one iteration
        dist = float(np.mean((samples - levels[idx]) ** 2)) if empties.size == 0 \
            else None
        if dist is not None and prev is not None \
                and prev - dist <= rel_tol * max(prev, 1e-300):
            break
        if dist is not None:
            prev = dist
    return ScalarCodebook(levels)


def _strictly_increasing(levels, eps=1e-12):
    out = levels.copy()
    for i in range(1, out.size):
        if out[i] <= out[i - 1]:
            out[i] = np.nextafter(out[i - 1], np.inf) + eps * max(1.0, abs(out[i - 1]))
    return out
