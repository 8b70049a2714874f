"""Pure numpy implementations of the compiled kernels.

Signatures and results match ``_kernels``; scalar recurrences use numpy
scalars so binary32 inputs are processed in binary32.
"""
import numpy as np


def csr_matmat(indptr, indices, data, X):
    n = len(indptr) - 1
    Y = np.zeros((n, X.shape[1]), dtype=data.dtype)
    if len(data) == 0:
        return Y
    contrib = data[:, None] * X[indices]
    nonempty = np.flatnonzero(np.diff(indptr))
    if len(nonempty):
        Y[nonempty] = np.add.reduceat(contrib, indptr[nonempty], axis=0)
    return Y


def csc_lower_solve(Lp, Li, Lx, B, adjoint):
    n = len(Lp) - 1
    if not adjoint:
        for j in range(n):
            p0, p1 = Lp[j], Lp[j + 1]
            B[j] /= Lx[p0]
            if p1 > p0 + 1:
                B[Li[p0 + 1:p1]] -= Lx[p0 + 1:p1, None] * B[j]
    else:
        Lc = np.conj(Lx)
        for j in range(n - 1, -1, -1):
            p0, p1 = Lp[j], Lp[j + 1]
            if p1 > p0 + 1:
                B[j] -= Lc[p0 + 1:p1] @ B[Li[p0 + 1:p1]]
            B[j] /= Lc[p0]
    return B


def etree(indptr, indices):
    n = len(indptr) - 1
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = [-1] * n
    for k in range(n):
        for i in indices[indptr[k]:indptr[k + 1]].tolist():
            while i != -1 and i < k:
                inext = ancestor[i]
                ancestor[i] = k
                if inext == -1:
                    parent[i] = k
                i = inext
    return parent


def _ereach(indptr, indices, k, parent, mark):
    # row pattern of L(k, :k) in topological order
    mark[k] = k
    out = []
    for i in indices[indptr[k]:indptr[k + 1]].tolist():
        if i >= k:
            continue
        path = []
        while mark[i] != k:
            path.append(i)
            mark[i] = k
            i = parent[i]
        out[:0] = path
    return out


def chol_colcounts(indptr, indices, parent):
    n = len(parent)
    counts = np.ones(n, dtype=np.int64)
    mark = [-1] * n
    par = parent.tolist()
    for k in range(n):
        for j in _ereach(indptr, indices, k, par, mark):
            counts[j] += 1
    return counts


def chol_numeric(indptr, indices, data, parent, Lp):
    n = len(parent)
    dt = data.dtype
    Li = np.zeros(Lp[n], dtype=np.int64)
    Lx = np.zeros(Lp[n], dtype=dt)
    x = np.zeros(n, dtype=dt)
    c = Lp[:n].copy()
    mark = [-1] * n
    par = parent.tolist()
    zero = dt.type(0)
    for k in range(n):
        reach = _ereach(indptr, indices, k, par, mark)
        d = zero
        for p in range(indptr[k], indptr[k + 1]):
            j = indices[p]
            if j < k:
                x[j] = np.conj(data[p])
            elif j == k:
                d = data[p]
        for j in reach:
            lkj = x[j] / Lx[Lp[j]]
            x[j] = zero
            q0, q1 = Lp[j] + 1, c[j]
            if q1 > q0:
                x[Li[q0:q1]] -= Lx[q0:q1] * lkj
            d = d - lkj * np.conj(lkj)
            q = c[j]
            c[j] += 1
            Li[q] = k
            Lx[q] = np.conj(lkj)
        piv = np.real(d)
        if not piv > 0:
            return Li, Lx, k
        q = c[k]
        c[k] += 1
        Li[q] = k
        Lx[q] = np.sqrt(piv)
    return Li, Lx, -1


def householder_tridiag(A):
    n = A.shape[0]
    Q = np.eye(n, dtype=A.dtype)
    two = A.real.dtype.type(2)
    for k in range(n - 2):
        x = A[k + 1:, k].copy()
        tail = np.real(np.vdot(x[1:], x[1:]))
        if tail == 0:
            continue
        x0 = x[0]
        xnorm = np.sqrt(np.real(np.vdot(x, x)))
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 != 0 else A.dtype.type(1)
        alpha = -phase * xnorm
        v = x
        v[0] = x0 - alpha
        v /= np.sqrt(np.real(np.vdot(v, v)))
        A22 = A[k + 1:, k + 1:]
        p = A22 @ v
        kk = np.real(np.vdot(v, p))
        p -= kk * v
        A22 -= two * (np.outer(v, p.conj()) + np.outer(p, v.conj()))
        A[k + 1, k] = alpha
        A[k, k + 1] = np.conj(alpha)
        A[k + 2:, k] = 0
        A[k, k + 2:] = 0
        Qv = Q[:, k + 1:] @ v
        Q[:, k + 1:] -= np.outer(two * Qv, v.conj())
    return Q


def tql2(d, e, Z, eps, max_sweeps):
    n = len(d)
    if n == 0:
        return 0
    t = d.dtype.type
    one, two = t(1), t(2)
    e[n - 1] = 0
    f = t(0)
    tst1 = t(0)
    sweeps = 0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n:
            if abs(e[m]) <= eps * tst1:
                break
            m += 1
        if m > l:
            while True:
                sweeps += 1
                if sweeps > max_sweeps:
                    return -1
                g = d[l]
                p = (d[l + 1] - g) / (two * e[l])
                r = np.hypot(p, one)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                d[l + 2:] -= h
                f = f + h
                p = d[m]
                c = c2 = c3 = one
                el1 = e[l + 1]
                s = s2 = t(0)
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = np.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    zi1 = Z[:, i + 1].copy()
                    Z[:, i + 1] = s * Z[:, i] + c * zi1
                    Z[:, i] = c * Z[:, i] - s * zi1
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if not abs(e[l]) > eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0
    return sweeps
