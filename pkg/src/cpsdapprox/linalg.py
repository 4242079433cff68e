"""Dense symmetric linear algebra primitives.

Symmetric matrices are plain ``numpy`` float64 arrays; :func:`as_sym` is the
validating constructor used at module boundaries.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .exceptions import ConvergenceError, DimensionError

SYM_TOL = 1e-10
PSD_TOL = 1e-9
RANK_TOL = 1e-9
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class EigenDecomp(NamedTuple):
    """Eigenvalues sorted descending and matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


def as_sym(a, tol: float = SYM_TOL) -> np.ndarray:
    """Validate ``a`` as a real symmetric matrix and return an exactly symmetric copy."""
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > tol * scale:
        raise DimensionError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    return (a + a.T) / 2


def trace_inner(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.vdot(a, b))


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64)))


def is_diagonal(a) -> bool:
    a = np.asarray(a)
    return not np.any(a[~np.eye(a.shape[0], dtype=bool)])


def _sort_desc(values: np.ndarray, vectors: np.ndarray) -> EigenDecomp:
    # stable sort on -values keeps ties in original index order
    order = np.argsort(-values, kind="stable")
    vectors = vectors[:, order]
    # fix the sign so the largest-magnitude entry of each vector is positive
    if vectors.size:
        pivots = np.argmax(np.abs(vectors), axis=0)
        signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
        signs[signs == 0] = 1.0
        vectors = vectors * signs
    return EigenDecomp(values[order], vectors)


def jacobi_eig(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomp:
    """Cyclic Jacobi eigendecomposition.

    Sweeps over all (p, q) pairs in row order until the off-diagonal Frobenius
    mass drops below ``tol * ||a||_F``. Raises :class:`ConvergenceError` when the
    sweep budget is exhausted.
    """
    a = np.array(a, dtype=np.float64)
    d = a.shape[0]
    v = np.eye(d)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return _sort_desc(np.zeros(d), v)
    off = math.sqrt(max(norm**2 - float(np.sum(np.diag(a) ** 2)), 0.0))
    for _ in range(max_sweeps):
        if off < tol * norm:
            return _sort_desc(np.diag(a).copy(), v)
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :]
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
    raise ConvergenceError(
        f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal residual {off:.3e})",
        residual=off,
    )


def sym_eig(a, tol: float = JACOBI_TOL, method: str = "lapack") -> EigenDecomp:
    """Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.

    Diagonal input always yields standard basis vectors, so diagonal structure
    survives every downstream step. ``method`` selects LAPACK (``eigh``) or the
    pure cyclic Jacobi solver; both return sign-normalized vectors.
    """
    a = np.asarray(a, dtype=np.float64)
    if is_diagonal(a):
        return _sort_desc(np.diag(a).copy(), np.eye(a.shape[0]))
    if method == "jacobi":
        return jacobi_eig(a, tol=tol)
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    values, vectors = np.linalg.eigh((a + a.T) / 2)
    return _sort_desc(values, vectors)


def _eigvals(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if is_diagonal(a):
        return np.diag(a).copy()
    return np.linalg.eigvalsh((a + a.T) / 2)


def is_psd(a, tol: float = PSD_TOL) -> bool:
    values = _eigvals(a)
    return bool(values.min() >= -tol * max(1.0, float(np.max(np.abs(values)))))


def rank_cutoff(values: np.ndarray, tol: float = RANK_TOL) -> float:
    return tol * max(1.0, float(np.max(np.abs(values)))) if values.size else 0.0


def numerical_rank(a, tol: float = RANK_TOL) -> int:
    values = _eigvals(a)
    return int(np.count_nonzero(np.abs(values) > rank_cutoff(values, tol)))


def clip_eigenvalues(values: np.ndarray) -> np.ndarray:
    """Clip the small negative eigenvalues a psd-tested matrix may carry."""
    return np.clip(values, 0.0, None)


def block_diag_sum(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.zeros((a.shape[0] + b.shape[0],) * 2)
    out[: a.shape[0], : a.shape[0]] = a
    out[a.shape[0] :, a.shape[0] :] = b
    return out


def as_hermitian(m, tol: float = SYM_TOL) -> np.ndarray:
    m = np.array(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    if float(np.max(np.abs(m - m.conj().T))) > tol * scale:
        raise DimensionError("matrix is not Hermitian")
    return (m + m.conj().T) / 2


def hermitian_embed(m) -> np.ndarray:
    """Real symmetric 2d x 2d image of a Hermitian d x d matrix.

    The map is linear, isometric for the real trace inner product and sends
    psd matrices to psd matrices.
    """
    m = as_hermitian(m)
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]]) / math.sqrt(2.0)
