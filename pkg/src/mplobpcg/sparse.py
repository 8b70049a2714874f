"""CSR Hermitian storage, ordering and sparse Cholesky."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DimensionMismatch, NotPositiveDefinite, PrecisionMismatch, PrecisionOverflow, SingularTriangular
from .precision import Precision, to_lower, to_working

INDEX = np.int64


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Square CSR matrix with the full (both triangles) Hermitian pattern."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indptr", np.ascontiguousarray(self.indptr, dtype=INDEX))
        object.__setattr__(self, "indices", np.ascontiguousarray(self.indices, dtype=INDEX))
        object.__setattr__(self, "data", np.ascontiguousarray(self.data))

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def precision(self) -> Precision:
        return Precision.of(self.data)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.data)

    @classmethod
    def from_coo(cls, rows, cols, vals, n: int, dtype=None) -> "CsrMatrix":
        """Assemble from triplets; duplicates are summed, columns sorted."""
        rows = np.asarray(rows, dtype=INDEX)
        cols = np.asarray(cols, dtype=INDEX)
        vals = np.asarray(vals, dtype=dtype)
        if len(rows) and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
            raise DimensionMismatch("triplet index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            key = rows * n + cols
            first = np.concatenate(([True], key[1:] != key[:-1]))
            starts = np.flatnonzero(first)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        indptr = np.zeros(n + 1, dtype=INDEX)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(indptr, cols, vals)

    @classmethod
    def from_dense(cls, M) -> "CsrMatrix":
        M = np.asarray(M)
        rows, cols = np.nonzero(M)
        return cls.from_coo(rows, cols, M[rows, cols], M.shape[0], dtype=M.dtype)

    @classmethod
    def identity(cls, n: int, dtype=np.float64) -> "CsrMatrix":
        return cls(np.arange(n + 1), np.arange(n), np.ones(n, dtype=dtype))

    def row_ids(self):
        return np.repeat(np.arange(self.n, dtype=INDEX), np.diff(self.indptr))

    def todense(self):
        M = np.zeros(self.shape, dtype=self.dtype)
        M[self.row_ids(), self.indices] = self.data
        return M

    def astype(self, dtype) -> "CsrMatrix":
        return CsrMatrix(self.indptr, self.indices, self.data.astype(dtype))

    def to_lower(self) -> "CsrMatrix":
        return CsrMatrix(self.indptr, self.indices, to_lower(self.data))

    def to_working(self) -> "CsrMatrix":
        return CsrMatrix(self.indptr, self.indices, to_working(self.data))

    def diagonal(self):
        d = np.zeros(self.n, dtype=self.dtype)
        rows = self.row_ids()
        on = rows == self.indices
        d[rows[on]] = self.data[on]
        return d

    def shift_diagonal(self, delta) -> "CsrMatrix":
        """A + delta I (diagonal entries are added to the pattern if absent)."""
        rows = np.concatenate((self.row_ids(), np.arange(self.n)))
        cols = np.concatenate((self.indices, np.arange(self.n)))
        vals = np.concatenate((self.data, np.full(self.n, delta, dtype=self.dtype)))
        return CsrMatrix.from_coo(rows, cols, vals, self.n, dtype=self.dtype)

    def permute(self, perm) -> "CsrMatrix":
        """Symmetric permutation B = Pi^H A Pi, i.e. B[i, j] = A[perm[i], perm[j]]."""
        perm = np.asarray(perm, dtype=INDEX)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(self.n, dtype=INDEX)
        return CsrMatrix.from_coo(inv[self.row_ids()], inv[self.indices], self.data, self.n, dtype=self.dtype)

    def is_hermitian(self) -> bool:
        rows = self.row_ids()
        T = CsrMatrix.from_coo(self.indices, rows, np.conj(self.data), self.n, dtype=self.dtype)
        return (np.array_equal(T.indptr, self.indptr) and np.array_equal(T.indices, self.indices)
                and np.array_equal(T.data, self.data))

    def validate(self):
        ip = self.indptr
        if ip[0] != 0 or np.any(np.diff(ip) < 0) or ip[-1] != len(self.indices):
            raise ValueError("malformed row pointer")
        for i in range(self.n):
            c = self.indices[ip[i]:ip[i + 1]]
            if np.any(np.diff(c) <= 0):
                raise ValueError(f"row {i}: column indices not strictly increasing")
        if not self.is_hermitian():
            raise ValueError("pattern/values are not Hermitian")

    def matmat(self, X):
        return spmv_block(self, X)

    def __matmul__(self, X):
        X = np.asarray(X)
        if X.ndim == 1:
            return spmv_block(self, X[:, None])[:, 0]
        return spmv_block(self, X)


def _split_complex(fn, X, dtype):
    # real operator applied to a complex block
    re = fn(np.ascontiguousarray(X.real, dtype=dtype))
    im = fn(np.ascontiguousarray(X.imag, dtype=dtype))
    return re + 1j * im


def spmv_block(A: CsrMatrix, X):
    """A X for CSR A and dense block X (deterministic row-wise sums)."""
    X = np.asarray(X)
    if X.shape[0] != A.n:
        raise DimensionMismatch(f"A is {A.n}x{A.n}, X has {X.shape[0]} rows")
    if Precision.of(X) is not A.precision:
        raise PrecisionMismatch("A and X carry different precision tags")
    squeeze = X.ndim == 1
    X2 = X[:, None] if squeeze else X
    k = _backend.kernels
    if np.iscomplexobj(X2) and not A.is_complex:
        Y = _split_complex(lambda Z: k.csr_matmat(A.indptr, A.indices, A.data, Z), X2, A.dtype)
    else:
        Y = k.csr_matmat(A.indptr, A.indices, A.data, np.ascontiguousarray(X2, dtype=A.dtype))
    return Y[:, 0] if squeeze else Y


def rcm_ordering(A: CsrMatrix):
    """Reverse Cuthill-McKee permutation of a symmetric pattern.

    Each connected component starts from its minimum-degree vertex (lowest
    index on ties); neighbours are visited by ascending (degree, index).
    Components are reversed individually and kept in discovery order, so a
    pattern without edges yields the identity.
    """
    n = A.n
    rows = A.row_ids()
    off = rows != A.indices
    deg = np.bincount(rows[off], minlength=n)
    adj = [None] * n
    ip, idx = A.indptr, A.indices
    for i in range(n):
        nb = idx[ip[i]:ip[i + 1]]
        nb = nb[nb != i]
        adj[i] = nb[np.lexsort((nb, deg[nb]))].tolist()
    visited = np.zeros(n, dtype=bool)
    by_degree = np.lexsort((np.arange(n), deg)).tolist()
    perm = []
    cursor = 0
    while len(perm) < n:
        while visited[by_degree[cursor]]:
            cursor += 1
        start = by_degree[cursor]
        visited[start] = True
        comp = [start]
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if not visited[w]:
                    visited[w] = True
                    comp.append(w)
                    queue.append(w)
        perm.extend(reversed(comp))
    return np.asarray(perm, dtype=INDEX)


def bandwidth(A: CsrMatrix) -> int:
    if A.nnz == 0:
        return 0
    return int(np.max(np.abs(A.row_ids() - A.indices)))


@dataclass(frozen=True, eq=False)
class Symbolic:
    parent: np.ndarray
    colptr: np.ndarray

    @property
    def nnz_L(self) -> int:
        return int(self.colptr[-1])


def symbolic_cholesky(C: CsrMatrix) -> Symbolic:
    """Elimination tree and column pointers of L for an already-permuted C."""
    k = _backend.kernels
    parent = k.etree(C.indptr, C.indices)
    counts = k.chol_colcounts(C.indptr, C.indices, parent)
    colptr = np.zeros(C.n + 1, dtype=INDEX)
    np.cumsum(counts, out=colptr[1:])
    return Symbolic(parent, colptr)


@dataclass(frozen=True, eq=False)
class SparseChol:
    """Pi^H A Pi = L L^H with L stored column-wise (diagonal first)."""

    perm: np.ndarray
    colptr: np.ndarray
    rowind: np.ndarray
    values: np.ndarray
    etree: np.ndarray

    @property
    def n(self) -> int:
        return len(self.colptr) - 1

    @property
    def nnz_L(self) -> int:
        return int(self.colptr[-1])

    @property
    def precision(self) -> Precision:
        return Precision.of(self.values)

    @property
    def L(self) -> CsrMatrix:
        cols = np.repeat(np.arange(self.n, dtype=INDEX), np.diff(self.colptr))
        return CsrMatrix.from_coo(self.rowind, cols, self.values, self.n, dtype=self.values.dtype)

    def diagonal(self):
        return self.values[self.colptr[:-1]]


def sparse_cholesky(A: CsrMatrix, perm=None) -> SparseChol:
    """Up-looking sparse Cholesky of Pi^H A Pi in A's precision.

    Reads the lower triangle of the permuted matrix.  Raises
    :class:`NotPositiveDefinite` (index in the permuted ordering) or
    :class:`PrecisionOverflow` when binary32 arithmetic overflows.
    """
    n = A.n
    perm = np.arange(n, dtype=INDEX) if perm is None else np.asarray(perm, dtype=INDEX)
    if len(perm) != n or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError("perm is not a permutation of 0..n-1")
    C = A.permute(perm)
    sym = symbolic_cholesky(C)
    with np.errstate(over="ignore", invalid="ignore"):
        Li, Lx, status = _backend.kernels.chol_numeric(C.indptr, C.indices, C.data, sym.parent, sym.colptr)
    if status >= 0:
        if not np.all(np.isfinite(Lx[: sym.colptr[status]])) and A.precision is Precision.LOWER:
            raise PrecisionOverflow(f"binary32 overflow before pivot {status}")
        raise NotPositiveDefinite(status, f"non-positive pivot at permuted row {status} "
                                          f"(original row {int(perm[status])})")
    if not np.all(np.isfinite(Lx)):
        raise PrecisionOverflow("non-finite entry in the Cholesky factor")
    return SparseChol(perm, sym.colptr, Li, Lx, sym.parent)


def sparse_tri_solve(F: SparseChol, B, apply_perm: bool = True):
    """Pi L^{-H} L^{-1} Pi^H B (or L^{-H} L^{-1} B without the permutation)."""
    B = np.asarray(B)
    if B.shape[0] != F.n:
        raise DimensionMismatch("B rows must match the factor")
    if np.any(np.abs(F.diagonal()) < np.finfo(F.values.real.dtype).tiny):
        raise SingularTriangular("zero or subnormal pivot in L")
    squeeze = B.ndim == 1
    B2 = B[:, None] if squeeze else B
    if apply_perm:
        B2 = B2[F.perm]
    k = _backend.kernels

    def chain(Z):
        Z = np.array(Z, dtype=F.values.dtype, order="C", copy=True)
        Z = k.csc_lower_solve(F.colptr, F.rowind, F.values, Z, False)
        return k.csc_lower_solve(F.colptr, F.rowind, F.values, Z, True)

    if np.iscomplexobj(B2) and not np.iscomplexobj(F.values):
        Y = _split_complex(chain, B2, F.values.dtype)
    else:
        Y = chain(B2)
    if apply_perm:
        out = np.empty_like(Y)
        out[F.perm] = Y
        Y = out
    return Y[:, 0] if squeeze else Y
