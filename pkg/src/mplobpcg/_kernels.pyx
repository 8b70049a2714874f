# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Every kernel here has a numpy twin in ``_kernels_py`` with the same
signature; ``_backend`` picks one at import time.  All arithmetic runs in
the dtype of the operands (binary32 stays binary32).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot, hypotf

cnp.import_array()

ctypedef cnp.int64_t idx_t

ctypedef float complex cfloat
ctypedef double complex cdouble

ctypedef fused scalar:
    float
    double
    cfloat
    cdouble

ctypedef fused floating:
    float
    double


cdef inline scalar _conj(scalar x) noexcept nogil:
    if scalar is float or scalar is double:
        return x
    else:
        return x.conjugate()


cdef inline double _re(scalar x) noexcept nogil:
    # widening only; exact
    if scalar is float or scalar is double:
        return x
    else:
        return x.real


cdef inline double _absval(scalar x) noexcept nogil:
    if scalar is float:
        return fabs(x)
    elif scalar is double:
        return fabs(x)
    elif scalar is cfloat:
        return hypotf(x.real, x.imag)
    else:
        return hypot(x.real, x.imag)


# ---------------------------------------------------------------- sparse

def csr_matmat(const idx_t[::1] indptr, const idx_t[::1] indices,
               scalar[::1] data, scalar[:, ::1] X):
    """Y = A @ X for CSR A; row-wise left-to-right accumulation."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t m = X.shape[1]
    cdef Py_ssize_t i, j, c
    cdef idx_t p
    cdef scalar a
    if scalar is float:
        dt = np.float32
    elif scalar is double:
        dt = np.float64
    elif scalar is cfloat:
        dt = np.complex64
    else:
        dt = np.complex128
    Y_arr = np.zeros((n, m), dtype=dt)
    cdef scalar[:, ::1] Y = Y_arr
    with nogil:
        for i in range(n):
            for p in range(indptr[i], indptr[i + 1]):
                a = data[p]
                j = indices[p]
                for c in range(m):
                    Y[i, c] = Y[i, c] + a * X[j, c]
    return Y_arr


def csc_lower_solve(const idx_t[::1] Lp, const idx_t[::1] Li, scalar[::1] Lx,
                    scalar[:, ::1] B, bint adjoint):
    """Solve L Y = B (or L^H Y = B) in place; L in CSC, diagonal first."""
    cdef Py_ssize_t n = Lp.shape[0] - 1
    cdef Py_ssize_t m = B.shape[1]
    cdef Py_ssize_t j, c, i
    cdef idx_t p
    cdef scalar piv, lij
    with nogil:
        if not adjoint:
            for j in range(n):
                piv = Lx[Lp[j]]
                for c in range(m):
                    B[j, c] = B[j, c] / piv
                for p in range(Lp[j] + 1, Lp[j + 1]):
                    i = Li[p]
                    lij = Lx[p]
                    for c in range(m):
                        B[i, c] = B[i, c] - lij * B[j, c]
        else:
            for j in range(n - 1, -1, -1):
                for p in range(Lp[j] + 1, Lp[j + 1]):
                    i = Li[p]
                    lij = _conj(Lx[p])
                    for c in range(m):
                        B[j, c] = B[j, c] - lij * B[i, c]
                piv = _conj(Lx[Lp[j]])
                for c in range(m):
                    B[j, c] = B[j, c] / piv
    return np.asarray(B)


def etree(const idx_t[::1] indptr, const idx_t[::1] indices):
    """Elimination tree of a symmetric pattern (CSR, full storage)."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    parent_arr = np.full(n, -1, dtype=np.int64)
    ancestor_arr = np.full(n, -1, dtype=np.int64)
    cdef idx_t[::1] parent = parent_arr
    cdef idx_t[::1] ancestor = ancestor_arr
    cdef Py_ssize_t k
    cdef idx_t p, i, inext
    with nogil:
        for k in range(n):
            for p in range(indptr[k], indptr[k + 1]):
                i = indices[p]
                while i != -1 and i < k:
                    inext = ancestor[i]
                    ancestor[i] = k
                    if inext == -1:
                        parent[i] = k
                    i = inext
    return parent_arr


cdef Py_ssize_t _ereach(const idx_t[::1] indptr, const idx_t[::1] indices,
                        Py_ssize_t k, idx_t[::1] parent, idx_t[::1] s,
                        idx_t[::1] mark) noexcept nogil:
    # Pattern of row k of L (excluding the diagonal) in s[top:n],
    # topologically ordered; mark[i] == k flags visited nodes.
    cdef Py_ssize_t n = parent.shape[0]
    cdef Py_ssize_t top = n, length
    cdef idx_t p, i
    mark[k] = k
    for p in range(indptr[k], indptr[k + 1]):
        i = indices[p]
        if i >= k:
            continue
        length = 0
        while mark[i] != k:
            s[length] = i
            length += 1
            mark[i] = k
            i = parent[i]
        while length > 0:
            top -= 1
            length -= 1
            s[top] = s[length]
    return top


def chol_colcounts(const idx_t[::1] indptr, const idx_t[::1] indices,
                   idx_t[::1] parent):
    """Column counts of L (diagonal included) by row-subtree traversal."""
    cdef Py_ssize_t n = parent.shape[0]
    counts_arr = np.ones(n, dtype=np.int64)
    cdef idx_t[::1] counts = counts_arr
    s_arr = np.empty(n, dtype=np.int64)
    mark_arr = np.full(n, -1, dtype=np.int64)
    cdef idx_t[::1] s = s_arr
    cdef idx_t[::1] mark = mark_arr
    cdef Py_ssize_t k, top, t
    with nogil:
        for k in range(n):
            top = _ereach(indptr, indices, k, parent, s, mark)
            for t in range(top, n):
                counts[s[t]] += 1
    return counts_arr


def chol_numeric(const idx_t[::1] indptr, const idx_t[::1] indices,
                 scalar[::1] data, idx_t[::1] parent, const idx_t[::1] Lp):
    """Up-looking Cholesky C = L L^H, L returned in CSC (diagonal first).

    Returns ``(Li, Lx, status)``; ``status`` is -1 on success or the index
    of the first non-positive pivot.
    """
    cdef Py_ssize_t n = parent.shape[0]
    cdef Py_ssize_t nnz = Lp[n]
    if scalar is float:
        dt = np.float32
    elif scalar is double:
        dt = np.float64
    elif scalar is cfloat:
        dt = np.complex64
    else:
        dt = np.complex128
    Li_arr = np.zeros(nnz, dtype=np.int64)
    Lx_arr = np.zeros(nnz, dtype=dt)
    x_arr = np.zeros(n, dtype=dt)
    c_arr = np.asarray(Lp)[:n].copy()
    s_arr = np.empty(n, dtype=np.int64)
    mark_arr = np.full(n, -1, dtype=np.int64)
    cdef idx_t[::1] Li = Li_arr
    cdef scalar[::1] Lx = Lx_arr
    cdef scalar[::1] x = x_arr
    cdef idx_t[::1] c = c_arr
    cdef idx_t[::1] s = s_arr
    cdef idx_t[::1] mark = mark_arr
    cdef Py_ssize_t k, top, t
    cdef idx_t p, j, q
    cdef scalar d, lkj
    cdef double piv
    cdef Py_ssize_t status = -1
    with nogil:
        for k in range(n):
            top = _ereach(indptr, indices, k, parent, s, mark)
            d = 0
            for p in range(indptr[k], indptr[k + 1]):
                j = indices[p]
                if j < k:
                    x[j] = _conj(data[p])
                elif j == k:
                    d = data[p]
            for t in range(top, n):
                j = s[t]
                lkj = x[j] / Lx[Lp[j]]
                x[j] = 0
                for q in range(Lp[j] + 1, c[j]):
                    x[Li[q]] = x[Li[q]] - Lx[q] * lkj
                d = d - lkj * _conj(lkj)
                q = c[j]
                c[j] += 1
                Li[q] = k
                Lx[q] = _conj(lkj)
            piv = _re(d)
            if not piv > 0:
                status = k
                break
            q = c[k]
            c[k] += 1
            Li[q] = k
            Lx[q] = <scalar> sqrt(piv)
    return Li_arr, Lx_arr, status


# ---------------------------------------------------------------- dense

def householder_tridiag(scalar[:, ::1] A):
    """Reduce Hermitian A (overwritten) to tridiagonal T = Q^H A Q.

    Returns Q.  Columns already in tridiagonal form are skipped, so
    diagonal and tridiagonal inputs pass through with Q = I.
    """
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t k, i, j, ln
    cdef scalar x0, alpha, phase, kk, tmp
    cdef scalar sig
    cdef double tail, xnorm, ax0, vnorm
    if scalar is float:
        dt = np.float32
    elif scalar is double:
        dt = np.float64
    elif scalar is cfloat:
        dt = np.complex64
    else:
        dt = np.complex128
    Q_arr = np.eye(n, dtype=dt)
    v_arr = np.zeros(n, dtype=dt)
    p_arr = np.zeros(n, dtype=dt)
    cdef scalar[:, ::1] Q = Q_arr
    cdef scalar[::1] v = v_arr
    cdef scalar[::1] pv = p_arr
    with nogil:
        for k in range(n - 2):
            sig = 0
            for i in range(k + 2, n):
                sig = sig + A[i, k] * _conj(A[i, k])
            tail = _re(sig)
            if tail == 0:
                continue
            x0 = A[k + 1, k]
            sig = sig + x0 * _conj(x0)
            xnorm = sqrt(_re(sig))
            ax0 = _absval(x0)
            if ax0 == 0:
                phase = 1
            else:
                phase = x0 / <scalar> ax0
            alpha = -phase * <scalar> xnorm
            # v = x - alpha e1, normalized
            for i in range(k + 1, n):
                v[i] = A[i, k]
            v[k + 1] = x0 - alpha
            sig = 0
            for i in range(k + 1, n):
                sig = sig + v[i] * _conj(v[i])
            vnorm = sqrt(_re(sig))
            for i in range(k + 1, n):
                v[i] = v[i] / <scalar> vnorm
            # p = A22 v
            for i in range(k + 1, n):
                tmp = 0
                for j in range(k + 1, n):
                    tmp = tmp + A[i, j] * v[j]
                pv[i] = tmp
            kk = 0
            for i in range(k + 1, n):
                kk = kk + _conj(v[i]) * pv[i]
            kk = <scalar> _re(kk)
            for i in range(k + 1, n):
                pv[i] = pv[i] - kk * v[i]
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    A[i, j] = A[i, j] - 2 * (v[i] * _conj(pv[j]) + pv[i] * _conj(v[j]))
            A[k + 1, k] = alpha
            A[k, k + 1] = _conj(alpha)
            for i in range(k + 2, n):
                A[i, k] = 0
                A[k, i] = 0
            # Q[:, k+1:] -= 2 (Q v) v^H
            for i in range(n):
                tmp = 0
                for j in range(k + 1, n):
                    tmp = tmp + Q[i, j] * v[j]
                tmp = 2 * tmp
                for j in range(k + 1, n):
                    Q[i, j] = Q[i, j] - tmp * _conj(v[j])
    return Q_arr


cdef inline floating _hypot(floating a, floating b) noexcept nogil:
    if floating is float:
        return hypotf(a, b)
    else:
        return hypot(a, b)


def tql2(floating[::1] d, floating[::1] e, floating[:, ::1] Z, floating eps,
         Py_ssize_t max_sweeps):
    """Implicit-shift QL on a real symmetric tridiagonal matrix.

    ``d`` holds the diagonal, ``e[i]`` the (i+1, i) entry with ``e[n-1]``
    ignored.  Rotations are accumulated into ``Z``.  Returns the number of
    QL sweeps performed, or -1 once ``max_sweeps`` is exceeded.
    """
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t l, m, i, k, sweeps = 0
    cdef bint failed = False
    cdef floating f = 0, tst1 = 0, g, p, r, dl1, h, c, c2, c3, el1, s, s2, tmp
    if n == 0:
        return 0
    e[n - 1] = 0
    with nogil:
        for l in range(n):
            tmp = fabs(d[l]) + fabs(e[l])
            if tmp > tst1:
                tst1 = tmp
            m = l
            while m < n:
                if fabs(e[m]) <= eps * tst1:
                    break
                m += 1
            if m > l:
                while True:
                    sweeps += 1
                    if sweeps > max_sweeps:
                        failed = True
                        break
                    g = d[l]
                    p = (d[l + 1] - g) / (2 * e[l])
                    r = _hypot(p, <floating> 1)
                    if p < 0:
                        r = -r
                    d[l] = e[l] / (p + r)
                    d[l + 1] = e[l] * (p + r)
                    dl1 = d[l + 1]
                    h = g - d[l]
                    for i in range(l + 2, n):
                        d[i] = d[i] - h
                    f = f + h
                    p = d[m]
                    c = 1
                    c2 = c
                    c3 = c
                    el1 = e[l + 1]
                    s = 0
                    s2 = 0
                    for i in range(m - 1, l - 1, -1):
                        c3 = c2
                        c2 = c
                        s2 = s
                        g = c * e[i]
                        h = c * p
                        r = _hypot(p, e[i])
                        e[i + 1] = s * r
                        s = e[i] / r
                        c = p / r
                        p = c * d[i] - s * g
                        d[i + 1] = h + s * (c * g + s * d[i])
                        for k in range(n):
                            h = Z[k, i + 1]
                            Z[k, i + 1] = s * Z[k, i] + c * h
                            Z[k, i] = c * Z[k, i] - s * h
                    p = -s * s2 * c3 * el1 * e[l] / dl1
                    e[l] = s * p
                    d[l] = c * p
                    if not fabs(e[l]) > eps * tst1:
                        break
                if failed:
                    break
            d[l] = d[l] + f
            e[l] = 0
    return -1 if failed else sweeps
