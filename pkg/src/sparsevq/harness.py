"""Experiment harness: deterministic data pipelines, training dispatch,
NMSE evaluation and sweep records.

Random streams derive from (seed, purpose, point content), never from sweep
order, so the same operating point reproduces bit-identically no matter
which axis or position it appears at.  Training itself consumes no
randomness: channel expectations are analytic and the data streams are
fixed, so a sweep is deterministic end to end.
"""

import hashlib
import logging
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .channel import bsc, transmit_batch
from .covq import Codebook, TrainConfig, fit_covq
from .estimators import MmseConfig, mmse_exact, omp_batch
from .msvq import StagePlan, fit_msvq, msvq_encode_stage, msvq_reconstruct
from .sensing import SensingModel, SourceSpec, generate_sensing_matrix, \
    generate_sources, measure
from .ssc import SscCodec, ssc_decode, ssc_encode

logger = logging.getLogger(__name__)

SCHEMES = ("covq-cs", "comsvq-cs", "nnc-cs", "msnnc-cs", "ssc",
           "ssc-ideal-support")
MEASUREMENT_DOMAIN = ("nnc-cs", "msnnc-cs")
MULTISTAGE = ("comsvq-cs", "msnnc-cs")

# Exact posterior enumeration is restricted to small problems.
EXACT_N_MAX = 16


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One operating point, or the template for a sweep.

    ``scheme`` may hold several comma-separated scheme names; sweeps then
    emit one record per scheme per axis value.  ``m`` wins over ``alpha``
    when both are given; ``alpha`` resolves to m = round(alpha * n).
    """

    scheme: str = "covq-cs"
    n: int = 12
    k: int = 2
    m: int = 0
    alpha: float = 0.0
    rate: int = 8
    stage_rates: tuple = ()
    epsilon: float = 0.0
    sigma_w2: float = 0.0
    n_train: int = 100_000
    n_eval: int = 100_000
    seed: int = 0
    estimator: str = "auto"
    max_iters: int = 100
    rel_tol: float = 1e-5
    delta_split: float = 1e-3

    def __post_init__(self):
        for name in self.schemes:
            if name not in SCHEMES:
                raise ConfigError(f"unknown scheme {name!r}")
        if self.n < 1 or not 0 <= self.k <= self.n:
            raise ConfigError("need n >= 1 and 0 <= k <= n")
        if self.m == 0 and self.alpha == 0.0:
            raise ConfigError("one of m or alpha is required")
        m = self.resolved_m
        if not self.k <= m <= self.n:
            raise ConfigError(f"need k <= m <= n, got m={m}")
        if self.rate < 1:
            raise ConfigError("rate must be >= 1")
        if self.stage_rates:
            if any(r < 1 for r in self.stage_rates):
                raise ConfigError("stage rates must be >= 1")
            if sum(self.stage_rates) != self.rate:
                raise ConfigError("stage_rates must sum to rate")
        if not 0.0 <= self.epsilon <= 0.5:
            raise ConfigError("epsilon must lie in [0, 0.5]")
        if self.sigma_w2 < 0.0:
            raise ConfigError("sigma_w2 must be >= 0")
        if self.n_train < 1 or self.n_eval < 1:
            raise ConfigError("n_train and n_eval must be positive")
        if self.estimator not in ("auto", "exact", "omp"):
            raise ConfigError(f"unknown estimator mode {self.estimator!r}")

    @property
    def schemes(self):
        return tuple(s.strip() for s in self.scheme.split(",") if s.strip())

    @property
    def resolved_m(self):
        if self.m:
            return self.m
        return int(round(self.alpha * self.n))

    @property
    def train_config(self):
        return TrainConfig(max_iters=self.max_iters, rel_tol=self.rel_tol,
                           delta_split=self.delta_split, n_train=self.n_train)

    def stage_rates_for(self, scheme):
        """Stage split: explicit rates, or an even two-way split with the
        excess bit on the earlier stage."""
        if scheme not in MULTISTAGE:
            return (self.rate,)
        if self.stage_rates:
            return tuple(self.stage_rates)
        base, extra = divmod(self.rate, 2)
        return (base + extra, base)


@dataclass
class SweepRecord:
    scheme: str
    n: int
    k: int
    m: int
    rate: int
    epsilon: float
    sigma_w2: float
    nmse_db: float
    n_eval: int
    seed: int
    # Wall-clock bookkeeping for runtime budgets; deliberately excluded from
    # COLUMNS so that CSV output is a pure function of config and seed.
    wall_seconds: float

    COLUMNS = ("scheme", "n", "k", "m", "rate", "epsilon", "sigma_w2",
               "nmse_db", "n_eval", "seed")


@dataclass
class EvalStats:
    nmse: float
    nmse_db: float
    std_err: float  # one-sigma Monte-Carlo error of the linear NMSE
    n_eval: int


@dataclass
class TrainedPoint:
    scheme: str
    spec: SourceSpec
    model: SensingModel
    estimator: MmseConfig
    epsilon: float = 0.0
    plan: StagePlan = None
    codec: SscCodec = None
    decode_table: np.ndarray = None  # L=1 measurement-domain reconstructions
    traces: list = None


def derive_rng(seed, *labels):
    """Content-keyed substream: hash the labels, feed the words to a seed
    sequence together with the master seed."""
    text = "|".join(str(item) for item in labels)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i: i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + words))


def _f(x):
    return repr(float(x))


def pick_estimator(model, spec, mode="auto", max_supports=10 ** 6):
    """Estimator selection: exact enumeration when the posterior exists and
    stays small, the matching-pursuit surrogate otherwise."""
    if mode == "omp":
        return MmseConfig(mode="omp", max_supports=max_supports)
    feasible = (model.sigma_w2 > 0.0 and spec.n <= EXACT_N_MAX
                and math.comb(spec.n, spec.k) <= max_supports)
    if mode == "exact":
        if not feasible:
            raise ConfigError("exact estimator infeasible for this point")
        return MmseConfig(mode="exact", max_supports=max_supports)
    return MmseConfig(mode="exact" if feasible else "omp",
                      max_supports=max_supports)


def reconstruct_batch(y, model, spec, est):
    """x-domain estimate for a batch of measurements."""
    if spec.k == 0:
        return np.zeros((np.atleast_2d(y).shape[0], spec.n))
    if est.mode == "exact":
        return mmse_exact(y, model, spec, est)
    return omp_batch(y, model.phi, spec.k)


def _point_model(cfg, cache):
    key = f"phi|{cfg.n}|{cfg.resolved_m}"
    if key not in cache:
        rng = derive_rng(cfg.seed, "phi", cfg.n, cfg.resolved_m)
        cache[key] = generate_sensing_matrix(cfg.n, cfg.resolved_m, rng)
    return SensingModel(cache[key], cfg.sigma_w2)


def _train_vectors(cfg, model, spec, est, cache):
    key = (f"train|{cfg.n}|{cfg.k}|{cfg.resolved_m}|{_f(cfg.sigma_w2)}"
           f"|{cfg.n_train}|{est.mode}")
    if key not in cache:
        rng = derive_rng(cfg.seed, "train", cfg.n, cfg.k, cfg.resolved_m,
                         _f(cfg.sigma_w2), cfg.n_train)
        x, _ = generate_sources(spec, cfg.n_train, rng)
        y = measure(x, model, rng)
        xt = reconstruct_batch(y, model, spec, est)
        cache[key] = (y, xt)
    return cache[key]


def train_point(cfg, scheme=None, cache=None):
    """Train one scheme at one operating point, reusing cached artifacts.

    Noisy-channel codebooks always initialize from the converged noiseless
    codebooks of the same point, which are cached and shared across the
    epsilon axis.
    """
    cache = cache if cache is not None else {}
    scheme = scheme or cfg.schemes[0]
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}")
    spec = SourceSpec(cfg.n, cfg.k)
    model = _point_model(cfg, cache)
    est = pick_estimator(model, spec, cfg.estimator)

    if scheme in ("ssc", "ssc-ideal-support"):
        try:
            codec = SscCodec(cfg.n, cfg.k, cfg.rate)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return TrainedPoint(scheme, spec, model, est, epsilon=cfg.epsilon,
                            codec=codec, traces=[])

    y_train, xt_train = _train_vectors(cfg, model, spec, est, cache)
    domain = "measurement" if scheme in MEASUREMENT_DOMAIN else "source"
    vectors = y_train if domain == "measurement" else xt_train
    rates = cfg.stage_rates_for(scheme)
    tcfg = cfg.train_config

    base_key = (f"base|{domain}|{','.join(map(str, rates))}"
                f"|{cfg.n}|{cfg.k}|{cfg.resolved_m}|{_f(cfg.sigma_w2)}"
                f"|{cfg.n_train}|{est.mode}|{tcfg.max_iters}|{_f(tcfg.rel_tol)}")
    if base_key not in cache:
        channels = [bsc(r, 0.0) for r in rates]
        cache[base_key] = fit_msvq(vectors, rates, channels, tcfg, domain=domain)
    base_plan, base_traces = cache[base_key]

    if cfg.epsilon == 0.0:
        plan, traces = base_plan, base_traces
    else:
        channels = [bsc(r, cfg.epsilon) for r in rates]
        plan, traces = fit_msvq(vectors, rates, channels, tcfg,
                                init_codebooks=base_plan.stage_codebooks,
                                domain=domain)

    table = None
    if domain == "measurement" and len(rates) == 1:
        table = reconstruct_batch(plan.stage_codebooks[0].vectors, model, spec,
                                  est)
    return TrainedPoint(scheme, spec, model, est, epsilon=cfg.epsilon,
                        plan=plan, decode_table=table, traces=traces)


def evaluate_nmse(point, x, y, xt, rng_channel, return_xhat=False):
    """End-to-end NMSE of a trained point on prepared evaluation data.

    ``xt`` is only consulted by source-domain encoders and may be None for
    the measurement-domain schemes.  Channel noise is drawn stage by stage
    in plan order (support first, then coefficients, for the split codec).
    """
    x = np.asarray(x, dtype=np.float64)
    k = point.spec.k
    if point.codec is not None:
        if xt is None:
            raise ValueError("split coding needs the estimator outputs")
        x_hat = _ssc_pipeline(point, xt, rng_channel)
    elif point.plan is not None:
        enc_vectors = y if point.scheme in MEASUREMENT_DOMAIN else xt
        if enc_vectors is None:
            raise ValueError("evaluation vectors missing for this scheme")
        sent = []
        for stage in range(point.plan.n_stages):
            sent.append(msvq_encode_stage(enc_vectors, point.plan, stage, sent))
        received = [transmit_batch(idx, ch, rng_channel)
                    for idx, ch in zip(sent, point.plan.stage_channels)]
        if point.scheme in MEASUREMENT_DOMAIN:
            if point.decode_table is not None and point.plan.n_stages == 1:
                x_hat = point.decode_table[received[0]]
            else:
                y_hat = msvq_reconstruct(point.plan, received)
                x_hat = reconstruct_batch(y_hat, point.model, point.spec,
                                          point.estimator)
        else:
            x_hat = msvq_reconstruct(point.plan, received)
    else:
        raise ValueError("untrained point cannot be evaluated")
    errs = np.einsum("ij,ij->i", x - x_hat, x - x_hat)
    nmse = float(errs.mean() / k)
    se = float(errs.std(ddof=1) / math.sqrt(errs.shape[0]) / k)
    stats = EvalStats(nmse, 10.0 * math.log10(nmse) if nmse > 0 else -math.inf,
                      se, errs.shape[0])
    return (stats, x_hat) if return_xhat else stats


def _ssc_pipeline(point, xt, rng_channel):
    codec = point.codec
    ranks, levels = ssc_encode(xt, codec)
    if point.scheme == "ssc-ideal-support":
        rx_ranks = ranks
    else:
        rx_ranks = transmit_batch(ranks, bsc(codec.support_bits, point.epsilon),
                                  rng_channel)
    rx_levels = np.empty_like(levels)
    for t in range(codec.k):
        rx_levels[:, t] = transmit_batch(levels[:, t],
                                         bsc(codec.coeff_bits[t], point.epsilon),
                                         rng_channel)
    return ssc_decode(rx_ranks, rx_levels, codec)


def eval_point(cfg, point, cache=None):
    """Draw the evaluation streams for a config and score a trained point."""
    cache = cache if cache is not None else {}
    data_key = (f"eval|{cfg.n}|{cfg.k}|{cfg.resolved_m}|{_f(cfg.sigma_w2)}"
                f"|{cfg.n_eval}|{point.estimator.mode}")
    if data_key not in cache:
        rng = derive_rng(cfg.seed, "eval", cfg.n, cfg.k, cfg.resolved_m,
                         _f(cfg.sigma_w2), cfg.n_eval)
        x, _ = generate_sources(point.spec, cfg.n_eval, rng)
        y = measure(x, point.model, rng)
        xt = reconstruct_batch(y, point.model, point.spec, point.estimator)
        cache[data_key] = (x, y, xt)
    x, y, xt = cache[data_key]
    rng_channel = derive_rng(cfg.seed, "chan", point.scheme, cfg.n, cfg.k,
                             cfg.resolved_m, cfg.rate,
                             ",".join(map(str, cfg.stage_rates_for(point.scheme))),
                             _f(cfg.epsilon), _f(cfg.sigma_w2), cfg.n_eval)
    return evaluate_nmse(point, x, y, xt, rng_channel)


def run_point(cfg, scheme=None, cache=None):
    scheme = scheme or cfg.schemes[0]
    cache = cache if cache is not None else {}
    start = time.perf_counter()
    point = train_point(cfg, scheme, cache)
    stats = eval_point(cfg, point, cache)
    wall = time.perf_counter() - start
    record = SweepRecord(scheme=scheme, n=cfg.n, k=cfg.k, m=cfg.resolved_m,
                         rate=cfg.rate, epsilon=cfg.epsilon,
                         sigma_w2=cfg.sigma_w2, nmse_db=stats.nmse_db,
                         n_eval=stats.n_eval, seed=cfg.seed, wall_seconds=wall)
    logger.info("%s n=%d k=%d m=%d rate=%d eps=%g: %.3f dB in %.2fs",
                scheme, cfg.n, cfg.k, cfg.resolved_m, cfg.rate, cfg.epsilon,
                stats.nmse_db, wall)
    return record, point, stats


def run_sweep(cfg, axis, values):
    """One record per (axis value, scheme).  Event order is fixed by the
    value list and the config's scheme order.  A numerical failure at one
    point is logged and the sweep continues with the remaining points."""
    from .covq import NumericalFailure

    if axis not in ("alpha", "m", "rate", "epsilon"):
        raise ConfigError(f"unknown sweep axis {axis!r}")
    records = []
    cache = {}
    for value in values:
        if axis == "alpha":
            point_cfg = replace(cfg, alpha=float(value), m=0)
        elif axis == "m":
            point_cfg = replace(cfg, m=int(value), alpha=0.0)
        elif axis == "rate":
            point_cfg = replace(cfg, rate=int(value))
        else:
            point_cfg = replace(cfg, epsilon=float(value))
        for scheme in cfg.schemes:
            try:
                record, _, _ = run_point(point_cfg, scheme, cache)
            except NumericalFailure as exc:
                logger.error("skipping %s at %s=%s: %s", scheme, axis, value,
                             exc)
                continue
            records.append(record)
    return records
