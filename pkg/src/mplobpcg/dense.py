"""Dense kernels used by every solver stage.

Matrices are plain numpy arrays; the dtype carries both the field
(real/complex) and the precision tag (see :mod:`mplobpcg.precision`).
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import _backend
from .errors import (
    DimensionMismatch,
    NoConvergence,
    NotOrthonormalWarning,
    NotPositiveDefinite,
    PrecisionMismatch,
    RankDeficientBasis,
    SingularTriangular,
    ZeroVector,
)
from .precision import Precision

TOL_ORTH = 1e-10
TOL_EIG = 1e-12
SWEEPS_PER_ROW = 30


def _check_precision(*arrays):
    tags = {Precision.of(a) for a in arrays}
    if len(tags) > 1:
        raise PrecisionMismatch("operands carry different precision tags")
    return tags.pop()


def adjoint(M):
    return M.conj().T


def hermitian_part(M):
    """(M + M^H)/2; exactly Hermitian by construction."""
    return (M + adjoint(M)) / 2


def is_hermitian(M, u=None) -> bool:
    u = Precision.of(M).unit_roundoff if u is None else u
    scale = np.max(np.abs(M)) if M.size else 0.0
    return np.linalg.norm(M - adjoint(M)) <= 8 * u * M.shape[0] * scale


def apply_operator(A, X):
    """A @ X for dense arrays, sparse matrices (``matmat``) or callables."""
    if isinstance(A, np.ndarray):
        return A @ X
    if hasattr(A, "matmat"):
        return A.matmat(X)
    return A(X)


def herm_product(A, X):
    """Return A X in the operands' precision."""
    A = np.asarray(A)
    X = np.asarray(X)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("A must be square")
    if A.shape[1] != X.shape[0]:
        raise DimensionMismatch(f"A is {A.shape}, X has {X.shape[0]} rows")
    _check_precision(A, X)
    return A @ X


def rayleigh_quotient(A, x) -> float:
    """(x^H A x)/(x^H x), real even for complex Hermitian A."""
    x = np.asarray(x).reshape(-1)
    xx = np.real(np.vdot(x, x))
    if xx == 0:
        raise ZeroVector("Rayleigh quotient of the zero vector")
    Ax = apply_operator(A, x[:, None])[:, 0]
    return float(np.real(np.vdot(x, Ax)) / xx)


def block_rayleigh(A, X):
    """Theta = X^H A X, Hermitian m-by-m.

    Warns with :class:`NotOrthonormalWarning` when X^H X deviates from the
    identity by more than ``TOL_ORTH``; the product is formed regardless.
    """
    X = np.asarray(X)
    if X.shape[0] != A.shape[0]:
        raise DimensionMismatch("X rows must match A")
    m = X.shape[1]
    err = np.linalg.norm(adjoint(X) @ X - np.eye(m))
    tol = TOL_ORTH if Precision.of(X) is Precision.WORKING else 1e3 * np.sqrt(m) * Precision.LOWER.unit_roundoff
    if err > tol:
        warnings.warn(f"X is not orthonormal (||X^H X - I||_F = {err:.2e})", NotOrthonormalWarning, stacklevel=2)
    return hermitian_part(adjoint(X) @ apply_operator(A, X))


def dense_cholesky(A):
    """Lower-triangular L with A = L L^H, computed in A's precision.

    Raises :class:`NotPositiveDefinite` with the zero-based index of the
    first non-positive pivot.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("A must be square")
    Precision.of(A)
    if A.shape[0] == 0:
        return A.copy()
    (potrf,) = sla.get_lapack_funcs(("potrf",), (A,))
    L, info = potrf(A, lower=True, clean=True, overwrite_a=False)
    if info > 0:
        raise NotPositiveDefinite(info - 1)
    if info < 0:
        raise ValueError(f"potrf: illegal argument {-info}")
    if not np.all(np.isfinite(np.diagonal(L))):
        raise NotPositiveDefinite(int(np.argmin(np.isfinite(np.diagonal(L)))))
    return L


class TriMode(enum.Enum):
    FORWARD = "forward"                          # solve L X = B
    BACKWARD_ADJOINT = "backward_adjoint"        # solve L^H X = B
    UPPER_INVERSE_RIGHT = "upper_inverse_right"  # X = B U^{-1}


def tri_solve(T, B, mode: TriMode):
    """Triangular solves in the operands' precision; never forms an inverse."""
    T = np.asarray(T)
    B = np.asarray(B)
    mode = TriMode(mode)
    n = T.shape[0]
    diag = np.abs(np.diagonal(T))
    if np.any(diag < np.finfo(T.real.dtype).tiny) or not np.all(np.isfinite(diag)):
        raise SingularTriangular("zero or subnormal diagonal entry")
    if mode is TriMode.UPPER_INVERSE_RIGHT:
        if B.shape[-1] != n:
            raise DimensionMismatch("B columns must match U")
        X = sla.solve_triangular(T, B.T, lower=False, trans="T", check_finite=False)
        return np.ascontiguousarray(X.T)
    if B.shape[0] != n:
        raise DimensionMismatch("B rows must match L")
    trans = 0 if mode is TriMode.FORWARD else 2
    return sla.solve_triangular(T, B, lower=True, trans=trans, check_finite=False)


@dataclass
class EigDecomposition:
    values: np.ndarray
    vectors: np.ndarray

    def __iter__(self):
        yield self.values
        yield self.vectors


def small_herm_eig(M) -> EigDecomposition:
    """Full eigendecomposition of a small Hermitian matrix.

    Householder tridiagonalization followed by implicit-shift QL.  The
    input is Hermitian-symmetrized first.  Runs in M's precision.
    """
    M = np.asarray(M)
    prec = Precision.of(M)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise DimensionMismatch("M must be square")
    rdt = prec.real_dtype
    if n == 0:
        return EigDecomposition(np.zeros(0, rdt), M.copy())
    T = np.ascontiguousarray(hermitian_part(M))
    Q = _backend.kernels.householder_tridiag(T)
    d = np.array(np.real(np.diagonal(T)), dtype=rdt, order="C", copy=True)
    sub = np.diagonal(T, -1)
    e = np.zeros(n, dtype=rdt)
    if np.iscomplexobj(T):
        mag = np.abs(sub)
        unit = np.ones(n - 1, dtype=T.dtype)
        nz = mag > 0
        unit[nz] = sub[nz] / mag[nz]
        phases = np.concatenate(([T.dtype.type(1)], np.cumprod(unit)))
        Q = Q * phases[None, :]
        e[: n - 1] = mag
    else:
        e[: n - 1] = sub
    Z = np.eye(n, dtype=rdt)
    eps = rdt.type(np.finfo(rdt).eps)
    status = _backend.kernels.tql2(d, e, Z, eps, SWEEPS_PER_ROW * n)
    if status < 0:
        raise NoConvergence(f"QL iteration exceeded {SWEEPS_PER_ROW * n} sweeps")
    order = np.argsort(d, kind="stable")
    return EigDecomposition(d[order], (Q @ Z)[:, order])


def rayleigh_ritz(S, A, m: int, AS=None):
    """Ritz pairs for the m smallest eigenvalues of S^H A S y = lambda S^H S y.

    Reduces to a standard problem through the Cholesky factor of the Gram
    matrix.  Returns ``(C, D)`` with ``C^H (S^H S) C = I``.
    """
    S = np.asarray(S)
    if AS is None:
        AS = apply_operator(A, S)
    G = hermitian_part(adjoint(S) @ S)
    H = hermitian_part(adjoint(S) @ AS)
    try:
        L = dense_cholesky(G)
    except NotPositiveDefinite as exc:
        raise RankDeficientBasis(f"Gram matrix not positive definite at {exc.index}") from exc
    Y = tri_solve(L, H, TriMode.FORWARD)
    Ht = hermitian_part(tri_solve(L, adjoint(Y), TriMode.FORWARD))
    D, Z = small_herm_eig(Ht)
    C = tri_solve(L, Z[:, :m], TriMode.BACKWARD_ADJOINT)
    return C, D[:m]


def spectral_norm_estimate(apply_A, n: int, sketch_rows: int = 8, seed: int = 0) -> float:
    """Sketched estimate ||Omega A||_F / ||Omega||_F of ||A||_2.

    ``Omega`` is a seeded standard Gaussian ``sketch_rows``-by-``n`` matrix.
    ``apply_A`` may be a matrix or a callable acting on an n-by-k block;
    A is assumed Hermitian, so ``||Omega A||_F = ||A Omega^T||_F``.
    """
    if sketch_rows < 1:
        raise ValueError("sketch_rows must be positive")
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((sketch_rows, n))
    if callable(apply_A) and not isinstance(apply_A, np.ndarray) and not hasattr(apply_A, "matmat"):
        AO = apply_A(omega.T)
    else:
        AO = apply_operator(apply_A, omega.T.astype(_sketch_dtype(apply_A)))
    return float(np.linalg.norm(AO) / np.linalg.norm(omega))


def _sketch_dtype(A):
    dt = np.dtype(A.dtype)
    return np.float32 if dt in (np.float32, np.complex64) else np.float64
