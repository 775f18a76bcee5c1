"""Command line front end.

Every subcommand takes the experiment description as ``key=value`` pairs
(``n=12 k=2 rate=12 epsilon=0.01 ...``) so runs are copy-pasteable and
self-describing.  Exit codes: 0 success, 1 bad configuration, 2 numerical
failure during training.
"""

import argparse
import dataclasses
import logging
import sys

import numpy as np

from . import serialize
from .bounds import BoundInputs, bound, bound_nmse_db
from .channel import bsc_capacity
from .covq import NumericalFailure
from .harness import (ConfigError, ExperimentConfig, eval_point, run_point,
                      run_sweep, train_point)
from .sensing import generate_sensing_matrix, mutual_coherence

logger = logging.getLogger(__name__)

_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}

_CASTS = {
    int: int,
    float: float,
    str: str,
}


def _cast(name, raw):
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key: {name!r}")
    ftype = _FIELDS[name].type
    try:
        if name == "stage_rates":
            if raw.lower() in ("", "none"):
                return ()
            return tuple(int(tok) for tok in raw.split(",") if tok)
        if ftype in ("int", int):
            return int(raw)
        if ftype in ("float", float):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return raw


def read_config_file(path):
    """key = value lines; blank lines and # comments ignored."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            pairs.append(line)
    return pairs


def parse_config(pairs, config_file=None, **defaults):
    """Build an ExperimentConfig from ``key=value`` strings.  Entries from a
    config file come first, so command-line pairs override them."""
    values = dict(defaults)
    file_pairs = read_config_file(config_file) if config_file else []
    for pair in list(file_pairs) + list(pairs):
        if "=" not in pair:
            raise ConfigError(f"expected key=value, got {pair!r}")
        key, _, raw = pair.partition("=")
        key = key.strip().replace("-", "_")
        values[key] = _cast(key, raw.strip())
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _add_pairs(parser):
    parser.add_argument("pairs", nargs="*", metavar="key=value",
                        help="experiment settings, e.g. n=12 k=2 rate=12")
    parser.add_argument("--config", default=None,
                        help="key = value file; command-line pairs override it")


def _cmd_train(args, scheme):
    cfg = parse_config(args.pairs, args.config)
    cfg = dataclasses.replace(cfg, scheme=scheme)
    point = train_point(cfg)
    if args.out:
        serialize.save_plan(args.out, point.plan,
                            {"scheme": scheme, "seed": cfg.seed})
        print(f"saved {point.plan.n_stages} stage(s) to {args.out}.*")
    for stage, trace in enumerate(point.traces):
        print(f"stage {stage}: {len(trace.distortion)} iterations, "
              f"final distortion {trace.distortion[-1]:.6g}, "
              f"{trace.n_splits} cell splits")
    return 0


def _cmd_eval(args):
    cfg = parse_config(args.pairs, args.config)
    record, point, stats = run_point(cfg)
    print(f"{record.scheme}: nmse = {stats.nmse:.6g} "
          f"({stats.nmse_db:.3f} dB, std err {stats.std_err:.3g}, "
          f"n_eval = {stats.n_eval})")
    if args.out:
        serialize.write_records(args.out, [record])
        print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args):
    values = [float(v) if "." in v or "e" in v.lower() else int(v)
              for v in args.values.split(",")]
    # seed the swept axis so a config without it still validates; run_sweep
    # replaces it point by point anyway
    cfg = parse_config(args.pairs, args.config, **{args.axis: values[0]})
    records = run_sweep(cfg, args.axis, values)
    text = serialize.format_records(records)
    if args.out:
        serialize.write_records(args.out, records)
        print(f"wrote {len(records)} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_bound(args):
    cfg = parse_config(args.pairs, args.config)
    mu = args.mu
    if mu is None and cfg.sigma_w2 > 0:
        phi = generate_sensing_matrix(cfg.n, cfg.resolved_m,
                                      np.random.default_rng(cfg.seed))
        mu = mutual_coherence(phi)
    inputs = BoundInputs(n=cfg.n, k=cfg.k, rate_bits=cfg.rate,
                         capacity=bsc_capacity(cfg.epsilon),
                         sigma_w2=cfg.sigma_w2, mu=mu or 0.0)
    val = bound(inputs)
    print(f"lower bound: mse = {val:.6g}, nmse = {val / cfg.k:.6g} "
          f"({bound_nmse_db(inputs):.3f} dB)")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("n,k,m,rate,epsilon,sigma_w2,mu,bound_mse,bound_nmse_db\n")
            fh.write(f"{cfg.n},{cfg.k},{cfg.resolved_m},{cfg.rate},"
                     f"{cfg.epsilon!r},{cfg.sigma_w2!r},{float(mu or 0.0)!r},"
                     f"{val!r},{bound_nmse_db(inputs)!r}\n")
        print(f"wrote {args.out}")
    return 0


def _cmd_bound_sweep(args):
    values = [float(v) if "." in v or "e" in v.lower() else int(v)
              for v in args.values.split(",")]
    cfg = parse_config(args.pairs, args.config, **{args.axis: values[0]})
    rows = []
    mu = args.mu
    if mu is None and cfg.sigma_w2 > 0:
        phi = generate_sensing_matrix(cfg.n, cfg.resolved_m,
                                      np.random.default_rng(cfg.seed))
        mu = mutual_coherence(phi)
    for v in values:
        # like run_sweep: the swept measurement field must win, so clear the
        # competing one (m overrides alpha when both are set)
        overrides = {args.axis: v}
        if args.axis == "alpha":
            overrides["m"] = 0
        elif args.axis == "m":
            overrides["alpha"] = 0.0
        c = dataclasses.replace(cfg, **overrides)
        inputs = BoundInputs(n=c.n, k=c.k, rate_bits=c.rate,
                             capacity=bsc_capacity(c.epsilon),
                             sigma_w2=c.sigma_w2, mu=mu or 0.0)
        rows.append((c, bound(inputs), bound_nmse_db(inputs)))
    lines = ["n,k,m,rate,epsilon,sigma_w2,mu,bound_mse,bound_nmse_db"]
    for c, val, db in rows:
        lines.append(f"{c.n},{c.k},{c.resolved_m},{c.rate},{c.epsilon!r},"
                     f"{c.sigma_w2!r},{float(mu or 0.0)!r},{val!r},{db!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_coherence(args):
    cfg = parse_config(args.pairs, args.config)
    phi = generate_sensing_matrix(cfg.n, cfg.resolved_m,
                                  np.random.default_rng(cfg.seed))
    print(f"mutual coherence ({cfg.resolved_m}x{cfg.n}, seed {cfg.seed}): "
          f"{mutual_coherence(phi):.6f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparsevq",
        description="vector quantization of compressed measurements")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for scheme, name in [("covq-cs", "train-covq"), ("comsvq-cs", "train-msvq"),
                         ("nnc-cs", "train-nnc"), ("msnnc-cs", "train-msnnc")]:
        p = sub.add_parser(name, help=f"train a {scheme} quantizer")
        _add_pairs(p)
        p.add_argument("--out", help="file prefix for the trained stages")
        p.set_defaults(func=lambda a, s=scheme: _cmd_train(a, s), scheme=scheme)

    p = sub.add_parser("eval", help="train and evaluate one configuration")
    _add_pairs(p)
    p.add_argument("--out", help="write the result row as CSV")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="evaluate along one swept axis")
    _add_pairs(p)
    p.add_argument("--axis", required=True,
                   choices=("alpha", "m", "rate", "epsilon"))
    p.add_argument("--values", required=True,
                   help="comma separated axis values")
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bound", help="analytical distortion lower bound")
    _add_pairs(p)
    p.add_argument("--mu", type=float, default=None,
                   help="mutual coherence (computed from seed if omitted)")
    p.add_argument("--out", help="write the bound row as CSV")
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("bound-sweep", help="bound along one swept axis")
    _add_pairs(p)
    p.add_argument("--axis", required=True,
                   choices=("alpha", "m", "rate", "epsilon"))
    p.add_argument("--values", required=True)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.set_defaults(func=_cmd_bound_sweep)

    p = sub.add_parser("coherence", help="mutual coherence of the seeded matrix")
    _add_pairs(p)
    p.set_defaults(func=_cmd_coherence)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
