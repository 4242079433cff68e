"""Gaussian random projection with a verified pairwise inner-product contract.

For points ``x_1..x_m`` and ``0 < eps < 1`` the projection ``Q`` into
``r = ceil(8 ln(m+1) / eps^2)`` dimensions must satisfy, for every pair
including ``i == j``::

    |x_i.x_j - (Q x_i).(Q x_j)| <= eps * (|x_i|^2 + |x_j|^2 - x_i.x_j)

Draws are checked against this inequality and redrawn until it holds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .caratheodory import ceil_int
from .exceptions import RetryExhaustedError

DEFAULT_RETRIES = 64
_CHUNK_ROWS = 1024


@dataclass(frozen=True, eq=False)
class PointSet:
    """``m`` points of dimension ``d``, stored as the rows of an ``(m, d)`` array."""

    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"points must form a non-empty (m, d) array, got shape {p.shape}")
        object.__setattr__(self, "points", p)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)


@dataclass
class JlResult:
    target_dim: int
    projected: np.ndarray
    max_violation_ratio: float
    retries: int
    identity: bool = False


def jl_dimension(m: int, eps: float) -> int:
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if m < 1:
        raise ValueError(f"need at least one point, got m={m}")
    return ceil_int(8.0 * math.log(m + 1) / eps**2)


def _as_points(pts) -> np.ndarray:
    return pts.points if isinstance(pts, PointSet) else PointSet(pts).points


def verify_jl(pts, result, eps: float):
    """Check the pairwise inequality for every ordered pair.

    ``result`` may be a :class:`JlResult` or the projected ``(m, r)`` array.
    Returns ``(ok, (i, j, lhs, rhs))`` where the pair is the one with the largest
    ``lhs / rhs`` ratio (``0/0`` counts as ratio 0).
    """
    x = _as_points(pts)
    y = np.asarray(getattr(result, "projected", result), dtype=np.float64)
    if y.shape[0] != x.shape[0]:
        raise ValueError(f"{x.shape[0]} points but {y.shape[0]} projections")
    gx = x @ x.T
    gy = y @ y.T
    sq = np.diag(gx)
    lhs = np.abs(gx - gy)
    rhs = eps * (sq[:, None] + sq[None, :] - gx)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lhs == 0, 0.0, lhs / rhs)
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    ok = bool(np.all(lhs <= rhs))
    return ok, (int(i), int(j), float(lhs[i, j]), float(rhs[i, j]))


def _violation_ratio(pts, projected, eps) -> float:
    _, (_, _, lhs, rhs) = verify_jl(pts, projected, eps)
    if lhs == 0:
        return 0.0
    return lhs / rhs if rhs > 0 else math.inf


def gaussian_project(x: np.ndarray, r: int, rng: np.random.Generator) -> np.ndarray:
    """Rows of ``x`` mapped by ``Q = G / sqrt(r)``, ``G`` i.i.d. standard normal ``r x d``.

    ``Q`` is generated in row blocks so that it is never held in memory at once.
    """
    out = np.empty((x.shape[0], r))
    for start in range(0, r, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, r)
        block = rng.standard_normal((stop - start, x.shape[1]))
        out[:, start:stop] = x @ block.T
    return out / math.sqrt(r)


def jl_project(pts, eps: float, retry_budget: int = DEFAULT_RETRIES, rng_seed=0) -> JlResult:
    """Project the points to ``jl_dimension(m, eps)`` dimensions and verify every pair.

    If the ambient dimension already fits (``d <= r``) the identity map is used.
    Raises :class:`RetryExhaustedError` carrying the best draw when no draw in
    the budget satisfies the inequality.
    """
    x = _as_points(pts)
    m, d = x.shape
    r = jl_dimension(m, eps)
    if d <= r:
        return JlResult(r, x.copy(), 0.0, 0, identity=True)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    best = None
    for attempt in range(retry_budget):
        y = gaussian_project(x, r, rng)
        ratio = _violation_ratio(x, y, eps)
        res = JlResult(r, y, ratio, attempt)
        if ratio <= 1.0 and verify_jl(x, y, eps)[0]:
            return res
        if best is None or ratio < best.max_violation_ratio:
            best = res
    if best is None:
        raise RetryExhaustedError(f"retry budget {retry_budget} allows no projection draw")
    best.retries = retry_budget
    raise RetryExhaustedError(
        f"no projection to {r} dimensions met the distortion bound in {retry_budget} draws "
        f"(best violation ratio {best.max_violation_ratio:.4g})",
        best=best,
    )
