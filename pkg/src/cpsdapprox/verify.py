"""Independent re-check of a report against its instance, without rerunning the pipeline."""
from __future__ import annotations

import numpy as np

from .linalg import PSD_TOL, SYM_TOL, is_diagonal, is_psd
from .pipeline import rank_bounds
from .rep import WITNESS_TOL, CpsdInstance


def check_report(inst: CpsdInstance, report: dict) -> list[tuple[str, bool, str]]:
    """Run every check and return ``(name, ok, detail)`` triples in a fixed order.

    ``report`` is the parsed form from :func:`cpsdapprox.serialize.report_from_dict`.
    """
    checks = []

    def add(name, ok, detail=""):
        checks.append((name, bool(ok), detail))

    factors = report["factors"]
    output = report["output"]
    eps = report["eps"]

    bad = [i for i, f in enumerate(inst.witness.factors) if not is_psd(f, PSD_TOL)]
    shape_ok = factors.ndim == 3 and factors.shape[0] == inst.n and factors.shape[1] == factors.shape[2]
    if shape_ok:
        for i, f in enumerate(factors):
            scale = max(1.0, float(np.max(np.abs(f))))
            if np.max(np.abs(f - f.T)) > SYM_TOL * scale or not is_psd(f, PSD_TOL):
                bad.append(i)
    add("witness not psd", shape_ok and not bad, f"factors {sorted(set(bad))}" if bad else "")

    if output.shape != inst.target.shape:
        add("error bound violated", False, f"output shape {output.shape} != {inst.target.shape}")
    else:
        err = float(np.max(np.abs(output - inst.target)))
        add("error bound violated", err < eps, f"max entrywise error {err:.6g} vs eps {eps:.6g}")

    if shape_ok:
        flat = factors.reshape(factors.shape[0], -1)
        g = flat @ flat.T
        scale = max(1.0, float(np.max(np.abs(output)))) if output.size else 1.0
        mismatch = float(np.max(np.abs(g - output))) if g.shape == output.shape else np.inf
        add("gram mismatch", mismatch <= WITNESS_TOL * scale, f"max |gram(rep) - output| = {mismatch:.3e}")
    else:
        add("gram mismatch", False, "output representation has the wrong shape")

    first, second = rank_bounds(inst.n, inst.ell, inst.big_l, eps)
    add("bounds mismatch", (first, second) == (report["bound_first"], report["bound_second"]),
        f"recomputed ({first}, {second})")

    side = factors.shape[1] if shape_ok else -1
    bound = first if report["mode"] == "stage1_only" else second
    add("side bound violated", side == report["rep_side"] and 0 < side <= bound,
        f"side {side}, reported {report['rep_side']}, bound {bound}")

    if report["completely_positive"]:
        add("not completely positive", shape_ok and all(is_diagonal(f) for f in factors))
    return checks


def first_failure(checks) -> tuple[str, str] | None:
    for name, ok, detail in checks:
        if not ok:
            return name, detail
    return None
