"""Two-stage low-cpsd-rank approximation of a cpsd matrix from a Gram witness.

Stage 1 replaces every witness factor by a trace-preserving low-rank
approximation; stage 2 projects the eigenvectors of all stage-1 factors with a
verified random projection. Either stage-1 alone (followed by witness
compression) or both stages together give an entrywise ``eps``-close cpsd
matrix whose witness side obeys the corresponding rank bound.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .caratheodory import DEFAULT_RETRIES, CarathResult, ceil_int, low_rank_psd_approx
from .exceptions import BoundViolationError, EpsilonRangeError
from .jl import jl_dimension, jl_project
from .linalg import RANK_TOL, clip_eigenvalues, rank_cutoff, sym_eig
from .rep import CpsdInstance, GramRep, compress_rep, gram

log = logging.getLogger(__name__)

MODES = ("stage1_only", "stage2_full", "auto")


def epsilon1(big_l: float, eps: float) -> float:
    """Per-factor Frobenius accuracy giving an entrywise error of ``eps / 2``.

    Solves ``2 e sqrt(L) + e^2 = eps / 2`` for ``e > 0``.
    """
    if big_l <= 0 or eps <= 0:
        raise EpsilonRangeError(f"need L > 0 and eps > 0, got L={big_l}, eps={eps}")
    x = eps / (2 * big_l)
    # sqrt(1+x) - 1 written without cancellation
    return math.sqrt(big_l) * x / (math.sqrt(1 + x) + 1)


def epsilon2(ell: float, eps: float) -> float:
    """Projection distortion solving ``(6 e + 9 e^2) ell^2 = eps / 2`` for ``e > 0``."""
    if ell <= 0 or eps <= 0:
        raise EpsilonRangeError(f"need ell > 0 and eps > 0, got ell={ell}, eps={eps}")
    x = eps / (2 * ell**2)
    return x / (3 * (math.sqrt(1 + x) + 1))


def sqrt_ineq_check(x: float) -> bool:
    """``sqrt(1+x) <= 1 + x/2 - x^2/9``, valid on ``[0, 1/4]``."""
    if not 0 <= x <= 0.25:
        raise ValueError(f"x must lie in [0, 1/4], got {x}")
    return math.sqrt(1 + x) <= 1 + x / 2 - x * x / 9


def check_eps_range(ell: float, big_l: float, eps: float) -> None:
    limit = 0.5 * min(ell**2, big_l)
    if 0 < eps < limit:
        return
    msg = f"eps={eps} outside (0, {limit:.6g}) = (0, min(ell^2, L)/2) for ell={ell:.6g}, L={big_l:.6g}"
    if math.isclose(ell, big_l, rel_tol=1e-12) and 0 < eps < 0.5 * big_l**2:
        msg += "; the looser range (0, L^2/2) for projection witnesses is not used, the general range applies"
    raise EpsilonRangeError(msg)


def rank_bounds(n: int, ell: float, big_l: float, eps: float) -> tuple[int, int]:
    """The two witness-side bounds: ``n*ceil(9 L ell^2 / (2 eps^2))`` and
    ``ceil((6 ell)^4 ln(n*ceil(18 L ell^2/eps^2) + 1) / eps^2)``."""
    if n < 1 or eps <= 0 or ell < 0 or big_l < 0:
        raise EpsilonRangeError(f"invalid bound parameters n={n}, ell={ell}, L={big_l}, eps={eps}")
    first = n * ceil_int(9 * big_l * ell**2 / (2 * eps**2))
    m = ceil_int(18 * big_l * ell**2 / eps**2)
    second = ceil_int((6 * ell) ** 4 * math.log(n * m + 1) / eps**2)
    return first, second


@dataclass
class ApproxParams:
    eps: float
    mode: str = "auto"
    cp_mode: bool = False
    seed: int = 0
    strategy: str = "auto"
    carath_retries: int = DEFAULT_RETRIES
    jl_retries: int = 64
    threads: int | None = None
    rank_tol: float = RANK_TOL

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.eps > 0:
            raise EpsilonRangeError(f"eps must be positive, got {self.eps}")


@dataclass
class ApproxReport:
    output: np.ndarray
    output_rep: GramRep
    achieved_error: float
    rep_side: int
    bound_first: int
    bound_second: int
    eps: float
    mode_used: str
    completely_positive: bool = False
    stage_metrics: dict = field(default_factory=dict)


def _seeds(seed: int):
    stage1, stage2 = np.random.SeedSequence(seed).spawn(2)
    return stage1, stage2


def _max_entry_error(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def stage1_accuracy(big_l: float, eps_budget: float) -> float:
    """Per-factor Frobenius accuracy for an entrywise budget: ``sqrt(L)(sqrt(1 + budget/L) - 1)``."""
    return epsilon1(big_l, 2 * eps_budget)


def stage1(inst: CpsdInstance, eps_budget: float, params: ApproxParams, seed_seq=None):
    """Replace each witness factor by a trace-preserving low-rank approximation.

    Returns the new representation and a metrics dict; ``metrics["factors"]``
    holds the per-factor :class:`CarathResult` (atoms and weights included).
    The entrywise error against the target is verified to stay within
    ``eps_budget``.
    """
    e1 = stage1_accuracy(inst.big_l, eps_budget)
    if seed_seq is None:
        seed_seq = _seeds(params.seed)[0]
    child_seeds = seed_seq.spawn(inst.n)

    def run(i):
        return low_rank_psd_approx(
            inst.witness[i], e1, strategy=params.strategy,
            retry_budget=params.carath_retries, rng_seed=child_seeds[i],
        )

    workers = params.threads or os.cpu_count() or 1
    if workers > 1 and inst.n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results: list[CarathResult] = list(pool.map(run, range(inst.n)))
    else:
        results = [run(i) for i in range(inst.n)]

    rep = GramRep(np.stack([r.approx for r in results]))
    err = _max_entry_error(gram(rep), inst.target)
    rank_cap = ceil_int(inst.ell**2 / e1**2)
    supports = [r.support_size for r in results]
    if max(supports) > rank_cap:
        raise BoundViolationError(f"stage 1 used {max(supports)} atoms, cap is {rank_cap}")
    if err > eps_budget:
        raise BoundViolationError(f"stage 1 entrywise error {err:.3e} exceeds budget {eps_budget:.3e}")
    metrics = {
        "eps_budget": eps_budget,
        "eps1": e1,
        "rank_cap": rank_cap,
        "support_sizes": supports,
        "factor_errors": [r.achieved_error for r in results],
        "strategies": [r.strategy_used for r in results],
        "retries": [r.retries for r in results],
        "entry_error": err,
        "factors": results,
    }
    return rep, metrics


def _eigen_points(rep: GramRep, tol: float):
    """Unit eigenvectors (rows), owning factor index and eigenvalue for every factor."""
    vecs, owners, lams = [], [], []
    for i, f in enumerate(rep.factors):
        eig = sym_eig(f)
        values = clip_eigenvalues(eig.values)
        keep = values > rank_cutoff(eig.values, tol)
        vecs.append(eig.vectors[:, keep].T)
        owners.extend([i] * int(keep.sum()))
        lams.extend(values[keep].tolist())
    return np.vstack(vecs), np.array(owners, dtype=int), np.array(lams)


def stage2(rep1: GramRep, inst: CpsdInstance, eps_budget: float, params: ApproxParams, seed_seq=None):
    """Project all eigenvectors of the stage-1 factors and rebuild the factors.

    The distortion is ``epsilon2(ell, 2 * eps_budget)``; each factor becomes
    ``sum_k lambda_k (Q u_k)(Q u_k)^t``. The entrywise change of the Gram
    matrix is verified against ``eps_budget``.
    """
    e2 = epsilon2(inst.ell, 2 * eps_budget)
    if seed_seq is None:
        seed_seq = _seeds(params.seed)[1]
    rep2, info = project_rep(rep1, e2, params.jl_retries, np.random.default_rng(seed_seq), params.rank_tol)
    metrics = {"eps_budget": eps_budget, "eps2": e2, **info}
    err = _max_entry_error(gram(rep2), gram(rep1))
    metrics["entry_error"] = err
    if err > eps_budget:
        raise BoundViolationError(f"stage 2 entrywise change {err:.3e} exceeds budget {eps_budget:.3e}")
    return rep2, metrics


def project_rep(rep: GramRep, distortion: float, retry_budget: int, rng, tol: float = RANK_TOL):
    """Rebuild every factor from projected eigenvectors: ``sum_k lambda_k (Q u_k)(Q u_k)^t``.

    ``Q`` satisfies the pairwise contract of :func:`~cpsdapprox.jl.jl_project`
    on the unit eigenvectors of all factors, which bounds each Gram entry change
    by ``(6 e + 9 e^2) tr(A_i) tr(A_j)`` for distortion ``e``.
    """
    points, owners, lams = _eigen_points(rep, tol)
    if points.shape[0] == 0:
        info = {"points": 0, "r": rep.d, "side": rep.d, "identity": True, "retries": 0, "max_violation_ratio": 0.0}
        return GramRep(np.zeros_like(rep.factors)), info
    jl = jl_project(points, distortion, retry_budget=retry_budget, rng_seed=rng)
    side = jl.projected.shape[1]
    factors = np.zeros((rep.n, side, side))
    for i in range(rep.n):
        sel = owners == i
        v = jl.projected[sel]
        factors[i] = (v.T * lams[sel]) @ v
    info = {
        "points": int(points.shape[0]), "r": jl.target_dim, "side": side, "identity": jl.identity,
        "retries": jl.retries, "max_violation_ratio": jl.max_violation_ratio,
    }
    return GramRep(factors), info


def _resolve_mode(params: ApproxParams, first: int, second: int) -> str:
    if params.mode != "auto":
        return params.mode
    return "stage1_only" if first <= second else "stage2_full"


def _finish(inst, rep, params, mode, first, second, metrics, cp=False) -> ApproxReport:
    rep_c = compress_rep(rep, params.rank_tol)
    output = gram(rep_c)
    err = _max_entry_error(output, inst.target)
    metrics["side_before_compression"] = rep.d
    if not err < params.eps:
        raise BoundViolationError(f"achieved entrywise error {err:.3e} is not below eps={params.eps}")
    bound = first if mode == "stage1_only" else second
    if rep_c.d > bound:
        raise BoundViolationError(f"witness side {rep_c.d} exceeds the {mode} bound {bound}")
    return ApproxReport(
        output=output, output_rep=rep_c, achieved_error=err, rep_side=rep_c.d,
        bound_first=first, bound_second=second, eps=params.eps, mode_used=mode,
        completely_positive=cp and rep_c.is_diagonal(), stage_metrics=metrics,
    )


def approximate(inst: CpsdInstance, params: ApproxParams) -> ApproxReport:
    """Entrywise ``eps``-close cpsd matrix with a small explicit witness.

    ``stage1_only`` spends the full budget on stage 1 and compresses the
    witness; ``stage2_full`` splits it evenly between the stages; ``auto``
    picks whichever mode has the smaller proved bound (stage 1 on ties).
    """
    if params.cp_mode:
        return approximate_cp(inst, params)
    check_eps_range(inst.ell, inst.big_l, params.eps)
    first, second = rank_bounds(inst.n, inst.ell, inst.big_l, params.eps)
    mode = _resolve_mode(params, first, second)
    s1_seed, s2_seed = _seeds(params.seed)
    metrics = {"ell": inst.ell, "L": inst.big_l, "n": inst.n}
    if mode == "stage1_only":
        rep, m1 = stage1(inst, params.eps, params, s1_seed)
        metrics["stage1"] = m1
        _check_first_chain(inst, params.eps, m1)
        return _finish(inst, rep, params, mode, first, second, metrics)
    rep1, m1 = stage1(inst, params.eps / 2, params, s1_seed)
    rep2, m2 = stage2(rep1, inst, params.eps / 2, params, s2_seed)
    m = ceil_int(inst.ell**2 / m1["eps1"] ** 2)
    jl_r = jl_dimension(inst.n * m, m2["eps2"])
    if jl_r > second:
        raise BoundViolationError(f"projection dimension {jl_r} exceeds the second bound {second}")
    metrics.update(stage1=m1, stage2=m2, m=m, r_bound=jl_r)
    return _finish(inst, rep2, params, mode, first, second, metrics)


def _check_first_chain(inst: CpsdInstance, eps: float, m1: dict) -> None:
    # ceil(ell^2/e1^2) <= ceil(9 L ell^2/(2 eps^2)) is only guaranteed for eps/L up to about 0.257
    per_factor = ceil_int(9 * inst.big_l * inst.ell**2 / (2 * eps**2))
    m1["per_factor_bound"] = per_factor
    m1["per_factor_chain_holds"] = m1["rank_cap"] <= per_factor
    if not m1["per_factor_chain_holds"]:
        log.info(
            "per-factor atom cap %d exceeds ceil(9 L ell^2/(2 eps^2)) = %d at eps/L = %.3f; "
            "the witness side is checked directly instead", m1["rank_cap"], per_factor, eps / inst.big_l,
        )


def approximate_cp(inst: CpsdInstance, params: ApproxParams) -> ApproxReport:
    """Stage-1 approximation of a diagonal witness; the result stays diagonal.

    Eigen-atoms of diagonal matrices are standard basis vectors, so every
    output factor is diagonal and the output matrix is completely positive.
    Only ``eps > 0`` is required; the bound check is still enforced.
    """
    if not inst.witness.is_diagonal():
        raise ValueError("completely positive mode needs a witness of diagonal factors")
    first, second = rank_bounds(inst.n, inst.ell, inst.big_l, params.eps)
    metrics = {"ell": inst.ell, "L": inst.big_l, "n": inst.n}
    limit = 0.5 * min(inst.ell**2, inst.big_l)
    metrics["in_valid_range"] = params.eps < limit
    if params.eps >= limit:
        log.warning("eps=%g is outside (0, %g); stage-1 accuracy is still verified", params.eps, limit)
    rep, m1 = stage1(inst, params.eps, params, _seeds(params.seed)[0])
    metrics["stage1"] = m1
    _check_first_chain(inst, params.eps, m1)
    if not rep.is_diagonal():
        raise BoundViolationError("stage 1 broke diagonal structure")
    return _finish(inst, rep, params, "stage1_only", first, second, metrics, cp=True)


def crossover_n(eps: float, ell: float = 1.0, big_l: float = 1.0) -> int:
    """Smallest ``n`` whose second bound is below ``n``.

    ``n - second(n)`` is convex in ``n``, so once positive it stays positive and
    the crossing can be found by doubling followed by bisection.
    """
    if eps <= 0 or ell <= 0 or big_l <= 0:
        raise EpsilonRangeError(f"need positive eps, ell, L; got {eps}, {ell}, {big_l}")

    def below(n):
        return rank_bounds(n, ell, big_l, eps)[1] < n

    if below(1):
        return 1
    lo, hi = 1, 2
    while not below(hi):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi
