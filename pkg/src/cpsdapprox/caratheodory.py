"""Trace-preserving low-rank psd approximation by convex combinations of rank-one atoms.

Every atom is ``t * v v^t`` with ``t = tr(a)`` and ``||v|| = 1``, so any convex
combination keeps the trace. With ``k = ceil(t^2 / eps^2)`` atoms the
approximation error can always be pushed below ``eps``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NotPsdError, RetryExhaustedError
from .linalg import (
    PSD_TOL,
    RANK_TOL,
    clip_eigenvalues,
    frobenius,
    is_psd,
    rank_cutoff,
    sym_eig,
)

log = logging.getLogger(__name__)

STRATEGIES = ("auto", "sampling", "greedy")
DEFAULT_RETRIES = 64
_ORTHO_TOL = 1e-8


def ceil_int(x: float, rel: float = 1e-12) -> int:
    """Ceiling that ignores floating noise just above an integer (e.g. 9/(2*0.3**2))."""
    nearest = round(x)
    if abs(x - nearest) <= rel * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


def carath_bound(trace: float, eps: float) -> int:
    """Number of atoms sufficient for an ``eps``-close combination: ``ceil(trace^2/eps^2)``."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if trace < 0:
        raise ValueError(f"trace must be nonnegative, got {trace}")
    if trace == 0:
        return 0
    return ceil_int(trace**2 / eps**2)


@dataclass
class CarathResult:
    approx: np.ndarray
    support_size: int
    achieved_error: float
    strategy_used: str
    retries: int
    # convex weights and unit atom vectors (columns); approx = trace * sum_s w_s v_s v_s^t
    weights: np.ndarray
    atoms: np.ndarray
    trace: float
    history: list = field(default_factory=list)


def _combine(trace: float, weights: np.ndarray, atoms: np.ndarray) -> np.ndarray:
    b = trace * (atoms * weights) @ atoms.T
    return (b + b.T) / 2


def _project_simplex(y: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of ``y`` onto ``{x >= 0, sum(x) = total}``."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, len(y) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(y - theta, 0.0)


def _result(a, trace, weights, atoms, strategy, retries) -> CarathResult:
    keep = weights > 0
    weights, atoms = weights[keep], atoms[:, keep]
    approx = _combine(trace, weights, atoms)
    return CarathResult(
        approx=approx,
        support_size=int(weights.size),
        achieved_error=frobenius(a - approx),
        strategy_used=strategy,
        retries=retries,
        weights=weights,
        atoms=atoms,
        trace=trace,
    )


def greedy_combination(a, trace: float, eps: float, k: int) -> CarathResult:
    """Fully-corrective Frank-Wolfe over the trace-``trace`` spectraplex.

    Each step adds the atom ``trace * v v^t`` for the top eigenvector ``v`` of the
    residual ``a - x`` (the negative gradient of ``||a - x||^2 / 2``), then
    re-optimizes all weights over the active atoms. With orthonormal atoms the
    re-optimization is a simplex projection; otherwise an exact line search on
    the new atom is used. Stops at error ``< eps`` or ``k`` atoms, and always
    places at least one atom so the trace is kept.
    """
    d = a.shape[0]
    atoms = np.zeros((d, 0))
    weights = np.zeros(0)
    x = np.zeros_like(a)
    err = np.inf  # the empty combination has the wrong trace, so one atom is always placed
    history = []
    while atoms.shape[1] < k and err >= eps:
        v = sym_eig(a - x).vectors[:, 0]
        atoms = np.column_stack([atoms, v])
        gram_atoms = atoms.T @ atoms
        if np.max(np.abs(gram_atoms - np.eye(atoms.shape[1]))) < _ORTHO_TOL:
            rayleigh = np.sum(atoms * (a @ atoms), axis=0)
            new_w = _project_simplex(rayleigh, trace) / trace
        else:
            direction = trace * np.outer(v, v) - x
            denom = float(np.vdot(direction, direction))
            gamma = 1.0 if denom == 0 else min(1.0, max(0.0, float(np.vdot(a - x, direction)) / denom))
            if atoms.shape[1] == 1:
                gamma = 1.0
            new_w = np.append((1 - gamma) * weights, gamma)
        new_x = _combine(trace, new_w, atoms)
        new_err = frobenius(a - new_x)
        if new_err > err and atoms.shape[1] > 1:
            # keep the error sequence monotone; drop the unhelpful atom
            atoms = atoms[:, :-1]
            break
        weights, x, err = new_w, new_x, new_err
        history.append(err)
    res = _result(a, trace, weights, atoms, "greedy", 0)
    res.history = history
    return res


def low_rank_psd_approx(
    a,
    eps: float,
    strategy: str = "auto",
    retry_budget: int = DEFAULT_RETRIES,
    rng_seed=0,
) -> CarathResult:
    """Trace-preserving psd ``b`` with ``||a - b||_F < eps`` and at most ``ceil(tr(a)^2/eps^2)`` atoms.

    Parameters
    ----------
    a : array_like
        Positive semidefinite matrix.
    eps : float
        Frobenius accuracy, strictly positive.
    strategy : {"auto", "sampling", "greedy"}
        ``sampling`` draws ``k`` eigen-atoms i.i.d. with probability
        ``lambda_j / tr(a)`` and averages them, retrying with fresh randomness;
        ``greedy`` runs deterministic Frank-Wolfe; ``auto`` samples first and
        falls back to greedy when the budget is spent.
    retry_budget : int
        Number of sampling attempts.
    rng_seed : int, SeedSequence or Generator
        Source of randomness for the sampling strategy.

    When the rank of ``a`` does not exceed the atom budget, ``a`` itself (as the
    convex combination of its eigen-atoms) is returned with strategy ``exact``.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    a = np.asarray(a, dtype=np.float64)
    a = (a + a.T) / 2
    if not is_psd(a, PSD_TOL):
        raise NotPsdError("input matrix is not positive semidefinite")
    trace = float(np.trace(a))
    d = a.shape[0]
    if trace <= 0:
        return CarathResult(np.zeros_like(a), 0, frobenius(a), "exact", 0, np.zeros(0), np.zeros((d, 0)), 0.0)

    k = carath_bound(trace, eps)
    eig = sym_eig(a)
    values = clip_eigenvalues(eig.values)
    keep = values > rank_cutoff(eig.values, RANK_TOL)
    values, vectors = values[keep], eig.vectors[:, keep]
    probs = values / values.sum()

    if values.size <= k:
        res = _result(a, trace, probs, vectors, "exact", 0)
        if res.achieved_error < eps:
            return res

    best = None
    if strategy in ("auto", "sampling"):
        rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
        for attempt in range(retry_budget):
            counts = np.bincount(rng.choice(probs.size, size=k, p=probs), minlength=probs.size)
            res = _result(a, trace, counts / k, vectors, "sampling", attempt)
            if res.achieved_error < eps:
                return res
            if best is None or res.achieved_error < best.achieved_error:
                best = res
        if best is not None:
            best.retries = retry_budget
            log.debug("sampling missed eps=%g after %d draws (best %.3e)", eps, retry_budget, best.achieved_error)
        if strategy == "sampling":
            raise RetryExhaustedError(
                f"sampling did not reach error < {eps} within {retry_budget} attempts", best=best
            )

    res = greedy_combination(a, trace, eps, k)
    res.retries = retry_budget if strategy == "auto" else 0
    if res.achieved_error < eps:
        return res
    if best is None or res.achieved_error < best.achieved_error:
        best = res
    raise RetryExhaustedError(
        f"no combination of {k} atoms reached error < {eps} (best {best.achieved_error:.4g})", best=best
    )
