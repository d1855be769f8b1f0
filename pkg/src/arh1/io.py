"""Readers and writers for trajectories, estimators and prediction rows.

Floats are written with 17 significant digits so that every double survives
a round trip unchanged.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from arh1.estimators import EstimatedRho
from arh1.model import Trajectory


class FormatError(ValueError):
    """Raised for malformed input files."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name + ".meta.json") if p.suffix != ".csv" else p.with_suffix(".meta.json")


def write_trajectory(path, traj: Trajectory, extra: dict | None = None) -> Path:
    """Write ``t,c0,...`` rows plus a JSON sidecar; returns the sidecar path."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"c{k}" for k in range(traj.d)])
        for t, row in enumerate(traj.samples):
            w.writerow([t] + [fmt(v) for v in row])
    meta = {"seed": traj.seed, "d": traj.d, "n": traj.n, "burn_in": traj.burn_in,
            "model": traj.model_id}
    if extra:
        meta.update(extra)
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return side


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = rows[0]
    if not header or header[0] != "t" or header[1:] != [f"c{k}" for k in range(len(header) - 1)]:
        raise FormatError(f"{path}: header must be t,c0,c1,...")
    try:
        data = np.array([[float(v) for v in r[1:]] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    data = data.reshape(-1, len(header) - 1)
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    return Trajectory(samples=data, seed=meta.get("seed"), burn_in=meta.get("burn_in", 0),
                      model_id=meta.get("model"))


def estimator_to_dict(est: EstimatedRho) -> dict:
    out = {"kind": est.kind, "k_n": est.k, "d": est.d,
           "operator": [float(v) for v in est.operator.ravel()]}
    if est.singular_values is not None:
        out["components"] = [
            {"value": float(est.singular_values[j]),
             "right": [float(v) for v in est.right[:, j]],
             "left": [float(v) for v in est.left[:, j]]}
            for j in range(est.k)
        ]
    if est.meta:
        out["meta"] = est.meta
    return out


def estimator_from_dict(obj: dict) -> EstimatedRho:
    try:
        d = int(obj["d"])
        op = np.asarray(obj["operator"], dtype=float).reshape(d, d)
        kind, k = obj["kind"], int(obj["k_n"])
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"malformed estimator: {exc}") from None
    comps = obj.get("components")
    if comps:
        return EstimatedRho(
            operator=op, kind=kind, k=k,
            singular_values=np.array([c["value"] for c in comps]),
            right=np.array([c["right"] for c in comps]).T,
            left=np.array([c["left"] for c in comps]).T,
            meta=obj.get("meta", {}))
    return EstimatedRho(operator=op, kind=kind, k=k, meta=obj.get("meta", {}))


def write_estimator(path, est: EstimatedRho) -> None:
    # json writes floats with repr, which round-trips exactly
    Path(path).write_text(json.dumps(estimator_to_dict(est), indent=2) + "\n")


def read_estimator(path) -> EstimatedRho:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return estimator_from_dict(obj)


def write_predictions(path, t, sq_err) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "err_h", "err_sq"])
        for ti, e2 in zip(t, sq_err):
            w.writerow([int(ti), fmt(np.sqrt(e2)), fmt(e2)])
