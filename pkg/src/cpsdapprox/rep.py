"""Gram representations by psd matrices, cpsd instances and witness compression."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import CompressionError, DimensionError, NotPsdError
from .linalg import (
    PSD_TOL,
    RANK_TOL,
    SYM_TOL,
    as_sym,
    block_diag_sum,
    is_diagonal,
    is_psd,
    numerical_rank,
    rank_cutoff,
    sym_eig,
)

WITNESS_TOL = 1e-8
COMPRESS_RESIDUAL_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class GramRep:
    """Ordered list of ``n`` symmetric ``d x d`` factors, stored as an ``(n, d, d)`` array.

    Construction checks shape and symmetry only; positive semidefiniteness is
    checked by :meth:`require_psd` so that a corrupted witness can still be
    loaded and diagnosed.
    """

    factors: np.ndarray

    def __post_init__(self):
        f = np.array(self.factors, dtype=np.float64)
        if f.ndim != 3 or f.shape[1] != f.shape[2] or f.shape[0] < 1 or f.shape[1] < 1:
            raise DimensionError(f"factors must have shape (n, d, d) with n, d >= 1, got {f.shape}")
        f = np.stack([as_sym(x) for x in f])
        f.flags.writeable = False
        object.__setattr__(self, "factors", f)

    @classmethod
    def from_list(cls, factors) -> "GramRep":
        return cls(np.stack([np.asarray(x, dtype=np.float64) for x in factors]))

    @property
    def n(self) -> int:
        return self.factors.shape[0]

    @property
    def d(self) -> int:
        return self.factors.shape[1]

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.factors)

    def __getitem__(self, i):
        return self.factors[i]

    @property
    def traces(self) -> np.ndarray:
        return np.trace(self.factors, axis1=1, axis2=2)

    def psd_flags(self, tol: float = PSD_TOL) -> list[bool]:
        return [is_psd(f, tol) for f in self.factors]

    def require_psd(self, tol: float = PSD_TOL) -> None:
        for i, ok in enumerate(self.psd_flags(tol)):
            if not ok:
                raise NotPsdError(f"factor {i} is not positive semidefinite")

    def is_diagonal(self) -> bool:
        return all(is_diagonal(f) for f in self.factors)


def gram(rep: GramRep) -> np.ndarray:
    """Matrix of pairwise trace inner products of the factors."""
    flat = rep.factors.reshape(rep.n, -1)
    g = flat @ flat.T
    return (g + g.T) / 2


def rep_side(rep: GramRep) -> int:
    return rep.d


def gram_rank_of_rep(rep: GramRep, tol: float = RANK_TOL) -> int:
    """Largest numerical rank among the factors."""
    return max(numerical_rank(f, tol) for f in rep.factors)


def compress_rep(rep: GramRep, tol: float = RANK_TOL) -> GramRep:
    """Rotate into the eigenbasis of the factor sum and keep its range.

    The output has side ``rank(sum of factors)`` and the same Gram matrix: the
    rotation preserves trace inner products, and every psd factor vanishes
    outside the range of the (psd) sum.
    """
    total = rep.factors.sum(axis=0)
    eig = sym_eig(total)
    r = int(np.count_nonzero(np.abs(eig.values) > rank_cutoff(eig.values, tol)))
    if r == 0:
        return GramRep(np.zeros((rep.n, 1, 1)))
    basis = eig.vectors[:, :r]
    out = basis.T @ rep.factors @ basis
    proj = basis @ basis.T
    for i, f in enumerate(rep.factors):
        residual = np.linalg.norm(f - proj @ f @ proj)
        if residual > COMPRESS_RESIDUAL_TOL * np.linalg.norm(f):
            raise CompressionError(
                f"factor {i} keeps mass {residual:.3e} outside the retained subspace; "
                "rank tolerance is too coarse for this representation"
            )
    return GramRep(out)


@dataclass(frozen=True, eq=False)
class CpsdInstance:
    """Target matrix ``M`` with a witness representation ``gram(witness) == M``.

    ``ell`` (largest factor trace) depends on the witness and is never derived
    from ``M`` alone; ``big_l`` is the largest diagonal entry of ``M``.
    """

    target: np.ndarray
    witness: GramRep
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = as_sym(self.target)
        t.flags.writeable = False
        object.__setattr__(self, "target", t)
        if t.shape[0] != self.witness.n:
            raise DimensionError(f"target is {t.shape[0]}x{t.shape[0]} but witness has {self.witness.n} factors")
        scale = max(1.0, float(np.max(np.abs(t))))
        mismatch = float(np.max(np.abs(gram(self.witness) - t)))
        if mismatch > WITNESS_TOL * scale:
            raise DimensionError(f"witness Gram matrix differs from target by {mismatch:.3e}")
        if float(t.min()) < -SYM_TOL * scale:
            raise NotPsdError("target has negative entries, so it cannot be completely positive semidefinite")

    @classmethod
    def from_witness(cls, witness: GramRep, meta: dict | None = None) -> "CpsdInstance":
        return cls(gram(witness), witness, dict(meta or {}))

    @property
    def n(self) -> int:
        return self.witness.n

    @cached_property
    def ell(self) -> float:
        return float(self.witness.traces.max())

    @cached_property
    def big_l(self) -> float:
        return float(np.diag(self.target).max())


def instance_scale(inst: CpsdInstance, lam: float) -> CpsdInstance:
    if lam < 0:
        raise ValueError(f"scale factor must be nonnegative, got {lam}")
    witness = GramRep(math.sqrt(lam) * inst.witness.factors)
    return CpsdInstance(lam * inst.target, witness, dict(inst.meta))


def instance_add(a: CpsdInstance, b: CpsdInstance) -> CpsdInstance:
    if a.n != b.n:
        raise DimensionError(f"cannot add instances of sizes {a.n} and {b.n}")
    factors = np.stack([block_diag_sum(x, y) for x, y in zip(a.witness, b.witness)])
    return CpsdInstance(a.target + b.target, GramRep(factors))
