"""Test-matrix generators: 2D Laplacian and kernel matrices."""
from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .dense import dense_cholesky
from .errors import NotPositiveDefinite
from .precision import U_WORKING
from .sparse import CsrMatrix


def gen_laplace2d(nx: int, ny: int) -> CsrMatrix:
    """5-point Dirichlet Laplacian on an nx-by-ny grid (4 on the diagonal)."""
    if nx < 1 or ny < 1:
        raise ValueError("grid dimensions must be positive")
    n = nx * ny
    idx = np.arange(n).reshape(ny, nx)
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [np.full(n, 4.0)]
    for a, b in ((idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])):
        a, b = a.ravel(), b.ravel()
        rows += [a, b]
        cols += [b, a]
        vals += [np.full(len(a), -1.0)] * 2
    return CsrMatrix.from_coo(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), n)


def laplace2d_eigenvalues(nx: int, ny: int):
    """All eigenvalues of :func:`gen_laplace2d`, ascending."""
    i = np.arange(1, nx + 1)
    j = np.arange(1, ny + 1)
    a = 4 * np.sin(i * np.pi / (2 * (nx + 1))) ** 2
    b = 4 * np.sin(j * np.pi / (2 * (ny + 1))) ** 2
    return np.sort((a[:, None] + b[None, :]).ravel())


def _gaussian(X, Y=None):
    if Y is None:
        return squareform(np.exp(-pdist(X) / 2), checks=False) + np.eye(len(X))
    return np.exp(-cdist(X, Y) / 2)


def _polynomial(X, Y=None):
    if Y is None:
        G = X @ X.T
        G = np.triu(G) + np.triu(G, 1).T
        return (G + 1) ** 3
    return (X @ Y.T + 1) ** 3


KERNELS = {"gaussian": _gaussian, "polynomial": _polynomial}


def gen_kernel(kind: str, n: int, seed: int = 0, complex_mode: bool = False):
    """Kernel matrix over n seeded uniform points in R^n.

    Returns ``(K, shift)`` where ``shift`` is the diagonal regularization
    that was needed for a working-precision Cholesky to succeed (0.0 when
    none was).  Complex mode builds
    ``k(x_i,x_j) + k(y_i,y_j) + i (k(x_i,y_j) - k(y_i,x_j))``, which is
    Hermitian entry-for-entry.
    """
    if n < 1:
        raise ValueError("n must be positive")
    kern = KERNELS[kind]
    rng = np.random.default_rng(seed)
    X = rng.random((n, n))
    if complex_mode:
        Y = rng.random((n, n))
        B = kern(X, Y)
        K = (kern(X) + kern(Y)) + 1j * (B - B.T)
    else:
        K = kern(X)
    shift = 0.0
    try:
        dense_cholesky(K)
    except NotPositiveDefinite:
        shift = 10 * n * U_WORKING * float(np.linalg.norm(K))
        K = K + shift * np.eye(n)
        dense_cholesky(K)
    return K, shift
