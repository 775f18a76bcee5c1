"""File formats for codebooks, matrices, plans and sweep results.

Binary artifacts are a single JSON header line (utf-8, ends with a newline)
followed by the row-major little-endian float64 payload.  The header's
``shape`` field fixes the payload length; everything else is metadata such
as the training seed, rate and channel crossover.
"""

import json
import os

import numpy as np

from .covq import Codebook
from .harness import SweepRecord


def save_array(path, array, meta=None):
    array = np.ascontiguousarray(array, dtype=np.float64)
    header = dict(meta or {})
    header["shape"] = list(array.shape)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(array.astype("<f8").tobytes(order="C"))


def load_array(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        payload = fh.read()
    shape = tuple(header.pop("shape"))
    array = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
    return array, header


def save_codebook(path, codebook, meta=None):
    header = dict(meta or {})
    header.update(domain=codebook.domain, rate_bits=codebook.rate_bits)
    save_array(path, codebook.vectors, header)


def load_codebook(path):
    vectors, header = load_array(path)
    return Codebook(vectors, header.get("domain", "source")), header


def save_plan(prefix, plan, meta=None):
    """Manifest JSON plus one codebook file per stage."""
    manifest = dict(meta or {})
    manifest.update(stage_rates=list(plan.stage_rates), domain=plan.domain,
                    epsilons=[ch.bsc_epsilon for ch in plan.stage_channels],
                    stages=[f"{os.path.basename(prefix)}.stage{i}.cbk"
                            for i in range(plan.n_stages)])
    with open(prefix + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for i, cb in enumerate(plan.stage_codebooks):
        save_codebook(f"{prefix}.stage{i}.cbk", cb,
                      {"stage": i, **(meta or {})})


def load_plan(prefix):
    from .channel import bsc
    from .msvq import StagePlan

    with open(prefix + ".manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    directory = os.path.dirname(prefix)
    codebooks = []
    for name in manifest["stages"]:
        cb, _ = load_codebook(os.path.join(directory, name))
        codebooks.append(cb)
    channels = [bsc(r, e) for r, e in zip(manifest["stage_rates"],
                                          manifest["epsilons"])]
    plan = StagePlan(manifest["stage_rates"], channels, codebooks,
                     manifest.get("domain", "source"))
    return plan, manifest


def save_matrix_csv(path, array):
    array = np.atleast_2d(np.asarray(array, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in array:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_matrix_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def save_dmc_csv(path, dmc):
    save_matrix_csv(path, dmc.matrix)


def format_records(records):
    """CSV text for sweep records: mandatory header, repr-exact floats."""
    lines = [",".join(SweepRecord.COLUMNS)]
    for r in records:
        lines.append(",".join([
            r.scheme, str(r.n), str(r.k), str(r.m), str(r.rate),
            repr(float(r.epsilon)), repr(float(r.sigma_w2)),
            repr(float(r.nmse_db)), str(r.n_eval), str(r.seed),
        ]))
    return "\n".join(lines) + "\n"


def write_records(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_records(records))


def write_trace_csv(path, trace):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iteration,distortion,event\n")
        events = set(trace.events)
        for i, d in enumerate(trace.distortion):
            fh.write(f"{i},{float(d)!r},{int(i in events)}\n")
