"""JSON formats for instances and approximation reports.

Instance::

    {"n": int, "d": int, "target": [[...]], "factors": [[[...]], ...],
     "meta": {"family": ..., "seed": ..., "params": {...}}}

Report: the fields of :class:`~cpsdapprox.pipeline.ApproxReport`, with the
output representation under ``"output_rep"`` in the instance factor layout.
Floats are written with ``repr`` precision, so load/dump round-trips are
byte-identical.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .pipeline import ApproxReport
from .rep import CpsdInstance, GramRep

FORMAT_VERSION = 1


def _plain(obj):
    """Recursively convert numpy scalars/arrays to JSON-safe Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _encode(obj, level: int) -> str:
    pad = " " * level
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad} {json.dumps(k)}: {_encode(obj[k], level + 1)}' for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if all(not isinstance(x, (dict, list)) for x in obj):
            return json.dumps(obj, allow_nan=False)
        items = [pad + " " + _encode(x, level + 1) for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return json.dumps(obj, allow_nan=False)


def dumps(data: dict) -> str:
    """Deterministic JSON text: sorted keys, one line per innermost list."""
    return _encode(_plain(data), 0) + "\n"


def write_json(data: dict, path) -> None:
    Path(path).write_text(dumps(data), encoding="utf-8")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def instance_to_dict(inst: CpsdInstance) -> dict:
    return {
        "n": inst.n,
        "d": inst.witness.d,
        "target": inst.target,
        "factors": inst.witness.factors,
        "meta": inst.meta,
    }


def instance_from_dict(data: dict) -> CpsdInstance:
    try:
        target = np.array(data["target"], dtype=np.float64)
        factors = np.array(data["factors"], dtype=np.float64)
        n, d = int(data["n"]), int(data["d"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed instance: {exc}") from exc
    if target.shape != (n, n) or factors.shape != (n, d, d):
        raise ValueError(f"instance shapes {target.shape}, {factors.shape} do not match n={n}, d={d}")
    return CpsdInstance(target, GramRep(factors), dict(data.get("meta", {})))


def _metrics_summary(metrics: dict) -> dict:
    out = {}
    for key, value in metrics.items():
        if key == "factors":
            continue
        out[key] = _metrics_summary(value) if isinstance(value, dict) else value
    return out


def report_to_dict(report: ApproxReport, seed: int | None = None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "eps": report.eps,
        "seed": seed,
        "mode": report.mode_used,
        "achieved_error": report.achieved_error,
        "rep_side": report.rep_side,
        "bound_first": report.bound_first,
        "bound_second": report.bound_second,
        "completely_positive": report.completely_positive,
        "output": report.output,
        "output_rep": {"n": report.output_rep.n, "d": report.output_rep.d, "factors": report.output_rep.factors},
        "stage_metrics": _metrics_summary(report.stage_metrics),
    }


def report_from_dict(data: dict) -> dict:
    """Parse a report into arrays; the output representation is left unvalidated for :func:`verify`."""
    try:
        rep = data["output_rep"]
        return {
            "eps": float(data["eps"]),
            "mode": data["mode"],
            "achieved_error": float(data["achieved_error"]),
            "rep_side": int(data["rep_side"]),
            "bound_first": int(data["bound_first"]),
            "bound_second": int(data["bound_second"]),
            "completely_positive": bool(data.get("completely_positive", False)),
            "output": np.array(data["output"], dtype=np.float64),
            "factors": np.array(rep["factors"], dtype=np.float64),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed report: {exc}") from exc
