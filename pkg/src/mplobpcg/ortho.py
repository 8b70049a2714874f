"""QR factorizations and block projection.

Every factorization returns R with a real positive diagonal; Q columns are
rescaled accordingly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dense import TriMode, adjoint, dense_cholesky, hermitian_part, tri_solve
from .errors import DimensionMismatch, NotPositiveDefinite, RankDeficient
from .precision import Precision, to_lower, to_working


@dataclass
class QrFactors:
    Q: np.ndarray
    R: np.ndarray

    def __iter__(self):
        yield self.Q
        yield self.R


def _positive_diagonal(Q, R):
    d = np.diagonal(R)
    mag = np.abs(d)
    s = np.ones_like(d)
    nz = mag > 0
    s[nz] = d[nz] / mag[nz]
    return Q * s[None, :], R * np.conj(s)[:, None]


def householder_qr(A) -> QrFactors:
    """Householder QR in A's precision with Q formed explicitly.

    Raises :class:`RankDeficient` when a diagonal entry of R is zero,
    subnormal or non-finite.
    """
    A = np.asarray(A)
    Precision.of(A)
    rows, cols = A.shape
    if rows < cols:
        raise DimensionMismatch("householder_qr needs rows >= cols")
    Q, R = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diagonal(R))
    bad = ~np.isfinite(diag) | (diag < np.finfo(R.real.dtype).tiny)
    if np.any(bad):
        raise RankDeficient(f"column {int(np.argmax(bad))} is numerically zero")
    return QrFactors(*_positive_diagonal(Q, R))


def cholesky_qr(V) -> QrFactors:
    """Q = V L^{-H}, R = L^H from the Cholesky factor of the Gram matrix.

    Orthogonality degrades like cond(V)^2 * u.  Raises
    :class:`~mplobpcg.errors.NotPositiveDefinite` when V^H V is not
    numerically positive definite: either a pivot is non-positive or some
    ``L_jj^2 <= rows * u * max_i G_ii``, i.e. below the rounding error
    committed while forming the Gram matrix.
    """
    V = np.asarray(V)
    G = hermitian_part(adjoint(V) @ V)
    L = dense_cholesky(G)
    u = Precision.of(V).unit_roundoff
    gd = np.real(np.diagonal(G))
    ld = np.real(np.diagonal(L)) ** 2
    weak = ld <= V.shape[0] * u * gd.max()
    if np.any(weak):
        raise NotPositiveDefinite(int(np.argmax(weak)), "Gram matrix is numerically singular")
    U = adjoint(L)
    return QrFactors(tri_solve(U, V, TriMode.UPPER_INVERSE_RIGHT), U)


def mixed_qr(A) -> QrFactors:
    """Working-precision QR seeded by a binary32 Householder factorization.

    The lower-precision R is used as a right preconditioner; one Cholesky-QR
    pass on the preconditioned block restores working-precision
    orthogonality.  Steps:

    1. ``lower(A) = Q_l R_l`` (Householder, binary32)
    2. ``V = A working(R_l)^{-1}`` (right triangular solve)
    3. ``V^H V = L L^H``
    4. ``Q = V L^{-H}``, ``R = L^H working(R_l)``
    """
    A = np.asarray(A)
    if Precision.of(A) is not Precision.WORKING:
        raise TypeError("mixed_qr expects a working-precision input")
    _, R_low = householder_qr(to_lower(A))
    R_low = to_working(R_low)
    V = tri_solve(R_low, A, TriMode.UPPER_INVERSE_RIGHT)
    Q, U = cholesky_qr(V)
    return QrFactors(Q, np.triu(U @ R_low))


def block_project_out(W, B, passes: int = 2):
    """Apply ``W <- W - B (B^H W)`` ``passes`` times; B has orthonormal columns."""
    W = np.array(W, copy=True)
    if B is None or B.shape[1] == 0:
        return W
    if B.shape[0] != W.shape[0]:
        raise DimensionMismatch("W and B must have the same number of rows")
    Bh = adjoint(B)
    for _ in range(passes):
        W -= B @ (Bh @ W)
    return W
