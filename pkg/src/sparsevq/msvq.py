"""Multi-stage channel-optimized VQ with sequentially trained stages.

Each stage quantizes what earlier stages left behind.  Under a noisy index
channel the stage-l encoder objective

    sum_{j_l} P(j_l|i_l) ||c_{j_l}||^2
    - 2 x' sum_{j_l} P(j_l|i_l) c_{j_l}
    + 2 sum_{t<l} (sum_{j_l} P(j_l|i_l) c_{j_l})' (sum_{j_t} P(j_t|i_t) c_{j_t})

factors exactly into the single-stage objective evaluated on the residual
x - sum_{t<l} E[c_{J_t} | i_t]: the cross-stage inner products collapse
onto the channel-expected codevectors of the frozen earlier stages.  Stage
training therefore reuses the single-stage fit verbatim, which also makes
the one-stage configuration bit-identical to plain channel-optimized VQ.
"""

from dataclasses import dataclass

import numpy as np

from .covq import Codebook, TrainConfig, covq_decoder_update, covq_encode, \
    fit_covq, _smeared


@dataclass
class StagePlan:
    """Stage rates, per-stage channels and (after training) codebooks."""

    stage_rates: list
    stage_channels: list
    stage_codebooks: list = None
    domain: str = "source"

    def __post_init__(self):
        self.stage_rates = [int(r) for r in self.stage_rates]
        if not self.stage_rates:
            raise ValueError("need at least one stage")
        if any(r < 0 for r in self.stage_rates):
            raise ValueError("stage rates must be >= 0")
        if len(self.stage_channels) != len(self.stage_rates):
            raise ValueError("one channel per stage required")
        for r, ch in zip(self.stage_rates, self.stage_channels):
            if ch is not None and ch.rate_bits != r:
                raise ValueError("stage channel does not match the stage rate")
        if self.stage_codebooks is not None:
            if len(self.stage_codebooks) != len(self.stage_rates):
                raise ValueError("one codebook per stage required")

    @property
    def n_stages(self):
        return len(self.stage_rates)

    @property
    def total_rate(self):
        return sum(self.stage_rates)

    @property
    def trained(self):
        return self.stage_codebooks is not None


def encoder_flops(dim, stage_rates):
    """Inner-loop cost of a full multi-stage encode, per input vector.

    Every candidate score costs one dim-length dot product against the
    channel-expected codevector (2*dim - 1 flops), one add for the expected
    energy and one compare: 2*dim + 1 per candidate, and stage l scores
    2^{R_l} candidates.
    """
    return (2 * dim + 1) * sum(2 ** r for r in stage_rates)


def _expected_stage_tables(plan):
    """Channel-expected codevectors for every trained stage."""
    return [_smeared(cb, ch)[0]
            for cb, ch in zip(plan.stage_codebooks, plan.stage_channels)]


def _prior_sum(plan, stage, prior_indices, tables=None):
    """sum_{t<stage} E[c_{J_t} | i_t] per sample, or None for stage 0."""
    if stage == 0:
        return None
    tables = tables if tables is not None else _expected_stage_tables(plan)
    total = None
    for t in range(stage):
        contrib = tables[t][np.asarray(prior_indices[t])]
        total = contrib if total is None else total + contrib
    return total


def msvq_encode_stage(x, plan, stage, prior_indices=(), return_scores=False):
    """Encode stage ``stage`` (0-based) given the sent indices of earlier
    stages.  Accepts one vector or a batch."""
    if not plan.trained:
        raise ValueError("plan has no trained codebooks")
    if not 0 <= stage < plan.n_stages:
        raise ValueError("stage out of range")
    if len(prior_indices) < stage:
        raise ValueError(f"stage {stage} needs {stage} prior index arrays")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    prior = [np.atleast_1d(p) for p in prior_indices[:stage]]
    u = _prior_sum(plan, stage, prior)
    resid = xb if u is None else xb - u
    out = covq_encode(resid if not single else resid[0],
                      plan.stage_codebooks[stage],
                      plan.stage_channels[stage],
                      return_scores=return_scores)
    return out


def msvq_decoder_update_stage(vectors, stage_indices, plan, stage):
    """Stage-l centroid update on the channel-expected residuals.

    ``stage_indices`` holds the sent index arrays for stages 0..stage; the
    earlier stages enter only through their expected codevectors.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    u = _prior_sum(plan, stage, stage_indices)
    resid = vectors if u is None else vectors - u
    return covq_decoder_update(resid, np.asarray(stage_indices[stage]),
                               plan.stage_channels[stage],
                               plan.stage_codebooks[stage])


def msvq_reconstruct(plan, received_indices):
    """Decoder output: sum of the received stage codevectors."""
    if not plan.trained:
        raise ValueError("plan has no trained codebooks")
    total = None
    for cb, j in zip(plan.stage_codebooks, received_indices):
        contrib = cb.vectors[np.asarray(j)]
        total = contrib if total is None else total + contrib
    return total


def fit_msvq(vectors, stage_rates, stage_channels, cfg=TrainConfig(),
             init_codebooks=None, domain="source"):
    """Sequential stage training on prepared vectors.

    Stage l fits a single-stage codebook to the channel-expected residuals
    of stages 0..l-1, whose assignments come from their own final training
    pass.  Returns (StagePlan, [TrainTrace per stage]).
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    plan = StagePlan(list(stage_rates), list(stage_channels), None, domain)
    codebooks, traces, assignments = [], [], []
    resid = vectors
    for stage, (rate, ch) in enumerate(zip(plan.stage_rates, plan.stage_channels)):
        init = init_codebooks[stage] if init_codebooks is not None else None
        result = fit_covq(resid, rate, ch, cfg, init=init, domain=domain)
        codebooks.append(result.codebook)
        traces.append(result.trace)
        assignments.append(result.assignments)
        if stage + 1 < plan.n_stages:
            expected = _smeared(result.codebook, ch)[0]
            resid = resid - expected[result.assignments]
    plan.stage_codebooks = codebooks
    return plan, traces


def train_msvq(model, spec, stage_rates, stage_channels, cfg, rng,
               estimator=None):
    """Generate training data and fit a source-domain multi-stage plan."""
    from .harness import pick_estimator, reconstruct_batch
    from .sensing import generate_sources, measure

    x, _ = generate_sources(spec, cfg.n_train, rng)
    y = measure(x, model, rng)
    est = estimator if estimator is not None else pick_estimator(model, spec)
    xt = reconstruct_batch(y, model, spec, est)
    return fit_msvq(xt, stage_rates, stage_channels, cfg, domain="source")


def train_msnnc(model, spec, stage_rates, stage_channels, cfg, rng):
    """Measurement-domain multi-stage baseline trained directly on y."""
    from .sensing import generate_sources, measure

    x, _ = generate_sources(spec, cfg.n_train, rng)
    y = measure(x, model, rng)
    return fit_msvq(y, stage_rates, stage_channels, cfg, domain="measurement")
