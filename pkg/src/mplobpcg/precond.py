"""Cholesky-based preconditioners T = Pi L^{-H} L^{-1} Pi^H.

The factor lives in its build precision; :func:`apply` rounds the residual
block to that precision, runs both triangular solves there and hands the
result back in the caller's precision.
"""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass

import numpy as np

from .dense import TriMode, adjoint, dense_cholesky, small_herm_eig, spectral_norm_estimate, tri_solve
from .errors import DimensionMismatch, NotPositiveDefinite
from .precision import Precision, U_LOWER, to_precision
from .sparse import CsrMatrix, SparseChol, rcm_ordering, sparse_cholesky, sparse_tri_solve


class PrecondKind(enum.Enum):
    DENSE_CHOL = "dense_chol"
    SPARSE_CHOL = "sparse_chol"
    EXACT_INVERSE_SHADOW = "exact_inverse_shadow"
    IDENTITY = "identity"


@dataclass(frozen=True)
class Preconditioner:
    kind: PrecondKind
    factor: object
    precision: Precision
    shift_applied: float = 0.0
    perm: np.ndarray | None = None

    @property
    def n(self) -> int:
        if self.kind is PrecondKind.SPARSE_CHOL:
            return self.factor.n
        if self.kind is PrecondKind.IDENTITY:
            return int(self.factor)
        return self.factor.shape[0]

    def permuted(self) -> "Preconditioner":
        """The same factor, acting on the system ``Pi^H A Pi`` instead of A."""
        return dataclasses.replace(self, perm=None)

    def __call__(self, R):
        return apply(self, R)


def _norm_estimate(A) -> float:
    n = A.shape[0]
    return spectral_norm_estimate(A, n)


def _factor(A, precision: Precision, perm):
    Ap = to_precision(A, precision)
    if isinstance(A, CsrMatrix):
        return sparse_cholesky(Ap, perm)
    return dense_cholesky(Ap)


def build(A, precision: Precision = Precision.LOWER, reorder: bool = True) -> Preconditioner:
    """Cholesky preconditioner of A computed in ``precision``.

    Sparse inputs are reordered by reverse Cuthill-McKee first (disable with
    ``reorder=False``).  A lower-precision breakdown is retried once with
    ``10 u_l ||A||_est`` added to the diagonal; the shift is recorded.
    """
    precision = Precision(precision)
    sparse = isinstance(A, CsrMatrix)
    if not sparse:
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch("A must be square")
    perm = rcm_ordering(A) if sparse and reorder else None
    kind = PrecondKind.SPARSE_CHOL if sparse else PrecondKind.DENSE_CHOL
    shift = 0.0
    try:
        F = _factor(A, precision, perm)
    except NotPositiveDefinite:
        if precision is not Precision.LOWER:
            raise
        shift = 10 * U_LOWER * _norm_estimate(A)
        shifted = A.shift_diagonal(shift) if sparse else A + shift * np.eye(A.shape[0])
        F = _factor(shifted, precision, perm)
    if sparse:
        perm = F.perm
    return Preconditioner(kind, F, precision, shift, perm)


def exact_inverse_shadow(A) -> Preconditioner:
    """Working-precision A^{-1} formed densely from its eigendecomposition."""
    M = A.todense() if isinstance(A, CsrMatrix) else np.asarray(A)
    M = to_precision(M, Precision.WORKING)
    w, V = small_herm_eig(M)
    if w[0] <= 0:
        raise NotPositiveDefinite(0, "A has a non-positive eigenvalue")
    Ainv = (V / w[None, :]) @ adjoint(V)
    return Preconditioner(PrecondKind.EXACT_INVERSE_SHADOW, (Ainv + adjoint(Ainv)) / 2, Precision.WORKING)


def identity(n: int) -> Preconditioner:
    return Preconditioner(PrecondKind.IDENTITY, int(n), Precision.WORKING)


def _dense_chain(L, B):
    def chain(Z):
        return tri_solve(L, tri_solve(L, Z, TriMode.FORWARD), TriMode.BACKWARD_ADJOINT)

    if np.iscomplexobj(B) and not np.iscomplexobj(L):
        return chain(np.ascontiguousarray(B.real)) + 1j * chain(np.ascontiguousarray(B.imag))
    return chain(B)


def apply(P: Preconditioner, R):
    """T R with all solve arithmetic in the build precision.

    The result carries R's precision, so a working-precision residual comes
    back as ``working(f_T(lower(R)))``.
    """
    R = np.asarray(R)
    if R.shape[0] != P.n:
        raise DimensionMismatch(f"R has {R.shape[0]} rows, preconditioner is order {P.n}")
    out_prec = Precision.of(R)
    if P.kind is PrecondKind.IDENTITY:
        return to_precision(to_precision(R, P.precision), out_prec)
    Rb = to_precision(R, P.precision)
    if P.kind is PrecondKind.EXACT_INVERSE_SHADOW:
        W = P.factor @ Rb
    elif P.kind is PrecondKind.SPARSE_CHOL:
        W = sparse_tri_solve(P.factor, Rb, apply_perm=P.perm is not None)
    else:
        W = _dense_chain(P.factor, Rb)
    return to_precision(W, out_prec)


def densify(P: Preconditioner, dtype=np.float64):
    """T as an explicit n-by-n matrix (small problems only)."""
    return apply(P, np.eye(P.n, dtype=dtype))


__all__ = [
    "PrecondKind",
    "Preconditioner",
    "SparseChol",
    "apply",
    "build",
    "densify",
    "exact_inverse_shadow",
    "identity",
]
