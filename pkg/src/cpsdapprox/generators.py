"""Instance families: identity, orthogonal projections, the geometric cp family and random witnesses."""
from __future__ import annotations

import numpy as np

from .rep import CpsdInstance, GramRep

FAMILIES = ("identity", "projection", "cp_geometric", "random_psd", "random_diagonal")


def identity_instance(n: int) -> CpsdInstance:
    """``I_n`` with the elementary witness ``E_11, ..., E_nn``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    factors = np.zeros((n, n, n))
    factors[np.arange(n), np.arange(n), np.arange(n)] = 1.0
    return CpsdInstance(np.eye(n), GramRep(factors), {"family": "identity", "params": {"n": n}})


def _orthonormal(g: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(g)
    q, _ = np.linalg.qr(q)  # second pass re-orthogonalizes
    return q


def projection_instance(n: int, d: int, ranks, seed: int = 0, disjoint: bool = False) -> CpsdInstance:
    """Witness of orthogonal projections onto random subspaces of the given ranks.

    With ``disjoint=True`` the subspaces are mutually orthogonal (needs
    ``sum(ranks) <= d``), so ``M`` is the diagonal matrix of the ranks.
    """
    ranks = [int(r) for r in ranks]
    if len(ranks) != n:
        raise ValueError(f"need {n} ranks, got {len(ranks)}")
    if any(not 1 <= r <= d for r in ranks):
        raise ValueError(f"ranks must lie in [1, {d}], got {ranks}")
    if disjoint and sum(ranks) > d:
        raise ValueError(f"disjoint subspaces need sum(ranks) <= d, got {sum(ranks)} > {d}")
    rng = np.random.default_rng(seed)
    if disjoint:
        basis = _orthonormal(rng.standard_normal((d, sum(ranks))))
        offsets = np.cumsum([0] + ranks)
        blocks = [basis[:, offsets[i]:offsets[i + 1]] for i in range(n)]
    else:
        blocks = [_orthonormal(rng.standard_normal((d, r))) for r in ranks]
    factors = np.empty((n, d, d))
    for i, q in enumerate(blocks):
        p = q @ q.T
        factors[i] = (p + p.T) / 2
    meta = {"family": "projection", "seed": seed,
            "params": {"n": n, "d": d, "ranks": ranks, "disjoint": disjoint}}
    return CpsdInstance.from_witness(GramRep(factors), meta)


def cp_geometric_matrix(n: int, q: float, c=None, dvec=None) -> np.ndarray:
    """The ``n^2 x 2n`` matrix ``V = (b (x) C | D (x) a)`` with ``a = b = (1-q)(1, q, ..., q^(n-1))``.

    ``C = diag(c)`` and ``D = diag(dvec)`` default to identities.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    a = (1 - q) * q ** np.arange(n)
    c = np.ones(n) if c is None else np.asarray(c, dtype=np.float64)
    dvec = np.ones(n) if dvec is None else np.asarray(dvec, dtype=np.float64)
    if c.shape != (n,) or dvec.shape != (n,) or np.any(c <= 0) or np.any(dvec <= 0):
        raise ValueError("c and d must be strictly positive vectors of length n")
    left = np.kron(a[:, None], np.diag(c))
    right = np.kron(np.diag(dvec), a[:, None])
    return np.hstack([left, right])


def cp_geometric_instance(n: int, q: float, c=None, dvec=None) -> CpsdInstance:
    """Completely positive ``V^t V`` of size ``2n`` with diagonal witness factors ``diag(v_i)``."""
    v = cp_geometric_matrix(n, q, c, dvec)
    factors = np.stack([np.diag(col) for col in v.T])
    meta = {"family": "cp_geometric", "params": {"n": n, "q": q}}
    return CpsdInstance.from_witness(GramRep(factors), meta)


def random_psd_instance(n: int, d: int, inner_dim: int, seed: int = 0) -> CpsdInstance:
    """Factors ``W_i W_i^t / d`` with Gaussian ``d x inner_dim`` matrices ``W_i``."""
    if min(n, d, inner_dim) < 1:
        raise ValueError("n, d and inner_dim must all be >= 1")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((n, d, inner_dim)) / np.sqrt(d)
    factors = w @ w.transpose(0, 2, 1)
    meta = {"family": "random_psd", "seed": seed, "params": {"n": n, "d": d, "inner_dim": inner_dim}}
    return CpsdInstance.from_witness(GramRep(factors), meta)


def random_diagonal_instance(n: int, d: int, seed: int = 0, density: float = 0.5) -> CpsdInstance:
    """Diagonal witness with sparse nonnegative exponential entries (a cp instance)."""
    if min(n, d) < 1:
        raise ValueError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    diag = rng.exponential(size=(n, d)) * (rng.random((n, d)) < density)
    # every factor needs some mass
    empty = ~diag.any(axis=1)
    diag[empty, rng.integers(d, size=int(empty.sum()))] = 1.0
    factors = np.stack([np.diag(x) for x in diag])
    meta = {"family": "random_diagonal", "seed": seed, "params": {"n": n, "d": d, "density": density}}
    return CpsdInstance.from_witness(GramRep(factors), meta)


def generate(family: str, n: int, d: int | None = None, q: float | None = None, seed: int = 0,
             inner_dim: int | None = None, ranks=None) -> CpsdInstance:
    """Dispatch on a family name, validating the family-specific parameters."""
    if family == "identity":
        return identity_instance(n)
    if family == "cp_geometric":
        if q is None:
            raise ValueError("cp_geometric needs q")
        return cp_geometric_instance(n, q)
    if d is None:
        raise ValueError(f"{family} needs d")
    if family == "projection":
        return projection_instance(n, d, ranks if ranks is not None else [1] * n, seed)
    if family == "random_psd":
        return random_psd_instance(n, d, inner_dim or d, seed)
    if family == "random_diagonal":
        return random_diagonal_instance(n, d, seed)
    raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
