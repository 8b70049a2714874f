"""PINVIT and LOBPCG for the smallest eigenpairs of a Hermitian positive
definite matrix, with binary32 preconditioning and a two-stage
binary32/binary64 LOBPCG driver.
"""
from __future__ import annotations

import enum
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import precond as pc
from .dense import (
    adjoint,
    apply_operator,
    dense_cholesky,
    hermitian_part,
    small_herm_eig,
    spectral_norm_estimate,
    tri_solve,
    TriMode,
)
from .errors import ConfigError, NotPositiveDefinite, RankCollapse, RankDeficient
from .ortho import block_project_out, householder_qr, mixed_qr
from .precision import Precision, to_precision, to_working
from .sparse import CsrMatrix

ORTH_GUARD = {Precision.WORKING: 1e-10, Precision.LOWER: 1e-4}


class Variant(enum.Enum):
    DLOBPCG_DCHOL = "dlobpcg-dchol"
    DLOBPCG_SCHOL = "dlobpcg-schol"
    MPLOBPCG_SCHOL = "mplobpcg-schol"
    PINVIT = "pinvit"


@dataclass
class SolverConfig:
    k: int
    m: int | None = None
    maxit: int = 2000
    tol: float = 1e-12
    lower_tol: float = 5e-6
    seed: int = 0
    variant: Variant = Variant.MPLOBPCG_SCHOL
    sketch_rows: int = 8

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.m is None:
            self.m = math.ceil(1.5 * self.k)
        if self.m < self.k:
            raise ConfigError(f"block size m={self.m} is smaller than k={self.k}")
        if not 0 < self.tol < self.lower_tol < 1:
            raise ConfigError("need 0 < tol < lower_tol < 1")
        if self.maxit < 1:
            raise ConfigError("maxit must be positive")
        if self.sketch_rows < 1:
            raise ConfigError("sketch_rows must be positive")

    def validate(self, n: int):
        if 3 * self.m > n:
            raise ConfigError(f"block size m={self.m} too large for n={n} (need 3m <= n)")


@dataclass
class IterationRecord:
    stage: str
    iteration: int
    theta: list
    residuals: list
    n_c: int
    events: list = field(default_factory=list)

    def to_dict(self):
        return {
            "stage": self.stage,
            "iteration": self.iteration,
            "theta": self.theta,
            "residuals": self.residuals,
            "n_c": self.n_c,
            "events": self.events,
        }


@dataclass
class EigResult:
    theta: np.ndarray
    X: np.ndarray
    residual_norms: np.ndarray
    iterations_lower: int = 0
    iterations_working: int = 0
    history: list = field(default_factory=list)
    converged: bool = False
    timings: dict = field(default_factory=dict)
    norm_estimate: float = 0.0
    shift: float = 0.0

    @property
    def iterations(self) -> int:
        return self.iterations_lower + self.iterations_working

    @property
    def events(self):
        return [(r.stage, r.iteration, e) for r in self.history for e in r.events]


class _Clock:
    def __init__(self, timings=None):
        self.t = timings if timings is not None else {}

    @contextmanager
    def __call__(self, key):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.t[key] = self.t.get(key, 0.0) + time.perf_counter() - t0


def converged_count(A_norm_est, X, theta, R, tol) -> int:
    """Length of the leading run of columns with
    ``||r_j|| <= tol (||A||_est + |theta_j|) ||x_j||``."""
    rn = np.linalg.norm(R, axis=0).astype(np.float64)
    xn = np.linalg.norm(X, axis=0).astype(np.float64)
    ok = rn <= tol * (A_norm_est + np.abs(np.asarray(theta, dtype=np.float64))) * xn
    bad = np.flatnonzero(~ok)
    return int(bad[0]) if bad.size else int(ok.size)


def hl_update(S, C, D, m: int, G=None):
    """Next X, P blocks and Ritz values from the projected eigenvectors C.

    ``X = S C(:,1:m)``.  P is the part of ``span(S C(:,m+1:))`` needed to
    represent the previous X block: the coefficients of the old X in the
    Ritz basis, ``(C^H G)(m+1:, 1:m)`` with ``G = S^H S`` (identity when S is
    orthonormal), are orthonormalized into V and ``P = S C(:,m+1:) V``.
    Returns ``(X, P, theta, V, fallback)``; ``fallback`` is True when V had
    to default to identity columns.
    """
    s = C.shape[0]
    X = S @ C[:, :m]
    theta = np.asarray(D[:m])
    rest = s - m
    if rest == 0:
        return X, S[:, :0], theta, C[:0, :0], False
    coeff = adjoint(C) @ G[:, :m] if G is not None else adjoint(C[:m, :])
    M = coeff[m:, :]
    width = min(rest, m)
    fallback = False
    try:
        if rest >= m:
            V = householder_qr(M).Q
        else:
            V = np.eye(rest, dtype=C.dtype)
    except RankDeficient:
        V = np.eye(rest, width, dtype=C.dtype)
        fallback = True
    P = S @ (C[:, m:] @ V)
    return X, P, theta, V, fallback


def _operator_in(A, precision: Precision):
    if isinstance(A, CsrMatrix):
        return A if A.precision is precision else to_precision(A, precision)
    if isinstance(A, np.ndarray):
        return A if Precision.of(A) is precision else to_precision(A, precision)
    return A


def _orth_error(Q, B=None):
    err = np.linalg.norm(adjoint(Q) @ Q - np.eye(Q.shape[1]))
    if B is not None and B.shape[1]:
        err = max(err, np.linalg.norm(adjoint(B) @ Q))
    return float(err)


def _column_normalize(W):
    nrm = np.linalg.norm(W, axis=0)
    keep = nrm > np.finfo(W.real.dtype).tiny * 1e3
    W = W[:, keep] / nrm[keep][None, :]
    return W


def _independent_columns(W, precision):
    """Indices of a numerically independent subset of W's columns."""
    _, R, piv = sla.qr(W, mode="economic", pivoting=True)
    d = np.abs(np.diagonal(R))
    if d.size == 0 or d[0] == 0:
        return np.zeros(0, dtype=int)
    rank = int(np.sum(d > 10 * W.shape[0] * precision.unit_roundoff * d[0]))
    return np.sort(piv[:rank])


def orthonormalize(W, B, qr, precision, events=None):
    """Orthonormal basis for W projected out of span(B).

    Projects twice, factorizes with ``qr`` and checks the result against the
    precision's guard.  On failure it re-projects once; columns that remain
    numerically dependent are dropped.
    """
    events = events if events is not None else []
    guard = ORTH_GUARD[precision]
    W = _column_normalize(block_project_out(W, B, 2))
    if W.shape[1] == 0:
        events.append("w-empty")
        return W
    for _ in range(2):
        try:
            Q = qr(W).Q
        except (RankDeficient, NotPositiveDefinite):
            events.append("qr-fallback")
            try:
                Q = householder_qr(W).Q
            except RankDeficient:
                Q = None
        if Q is not None and _orth_error(Q, B) <= guard:
            return Q
        events.append("reorth")
        W = _column_normalize(block_project_out(W if Q is None else Q, B, 2))
    keep = _independent_columns(W, precision)
    events.append(f"drop-{W.shape[1] - len(keep)}")
    if len(keep) == 0:
        return W[:, :0]
    W = block_project_out(W[:, keep], B, 2)
    return householder_qr(W).Q


def _stage_qr(precision, ortho):
    if ortho is not None:
        return ortho
    return householder_qr if precision is Precision.LOWER else mixed_qr


def _generalized_eig(G, H):
    """Eigenpairs of H y = lambda G y through the Cholesky factor of G."""
    L = dense_cholesky(G)
    Y = tri_solve(L, H, TriMode.FORWARD)
    D, Z = small_herm_eig(hermitian_part(tri_solve(L, adjoint(Y), TriMode.FORWARD)))
    return D, tri_solve(L, Z, TriMode.BACKWARD_ADJOINT)


def _ritz_rotate(A_op, X, clock):
    """Diagonalize X^H A X and rotate X (and A X) into the Ritz basis."""
    with clock("matvec"):
        AX = apply_operator(A_op, X)
    with clock("eig"):
        D, Z = small_herm_eig(hermitian_part(adjoint(X) @ AX))
    return X @ Z, AX @ Z, D


def _record(history, stage, it, theta, R, nc, events):
    history.append(IterationRecord(stage, it, [float(t) for t in theta],
                                   [float(r) for r in np.linalg.norm(R, axis=0)], nc, list(events)))


def _finish(X, theta, R, k, history, converged, clock, norm_est, stage, iters):
    res = EigResult(
        theta=np.asarray(theta[:k], dtype=np.float64),
        X=X[:, :k],
        residual_norms=np.linalg.norm(R[:, :k], axis=0).astype(np.float64),
        history=history,
        converged=converged,
        timings=clock.t,
        norm_estimate=norm_est,
    )
    if stage == "lower":
        res.iterations_lower = iters
    else:
        res.iterations_working = iters
    res.block = X
    res.block_theta = np.asarray(theta)
    return res


def lobpcg_stage(A, X0, cfg: SolverConfig, P: pc.Preconditioner, precision=Precision.WORKING,
                 stage_tol=None, norm_est=None, ortho=None, history=None, timings=None,
                 callback=None) -> EigResult:
    """One LOBPCG run with every block operation in ``precision``.

    The preconditioner is applied in its own build precision.  ``ortho``
    overrides the factorization used for X0 and W (default: binary32
    Householder for the lower stage, mixed QR for the working stage).
    ``callback(record, X, R)`` runs after every convergence test.
    """
    precision = Precision(precision)
    stage = "lower" if precision is Precision.LOWER else "working"
    tol = cfg.tol if stage_tol is None else stage_tol
    clock = _Clock(timings)
    history = [] if history is None else history
    A_op = _operator_in(A, precision)
    n = A_op.shape[0]
    if norm_est is None:
        norm_est = spectral_norm_estimate(A, n, cfg.sketch_rows, cfg.seed)
    qr = _stage_qr(precision, ortho)
    m, k = X0.shape[1], cfg.k
    events = []
    X = to_precision(np.asarray(X0), precision)
    with clock("ortho"):
        X = orthonormalize(X, None, qr, precision, events)
    if X.shape[1] < m:
        raise RankCollapse("initial block is rank deficient")
    X, AX, theta = _ritz_rotate(A_op, X, clock)
    theta = theta[:m]
    Pb = X[:, :0]
    AP = AX[:, :0]
    converged = False
    it = 0
    R = AX - X * theta[None, :]
    for it in range(1, cfg.maxit + 1):
        if it > 1:
            with clock("matvec"):
                AX = apply_operator(A_op, X)
        R = AX - X * theta[None, :].astype(X.real.dtype)
        nc = converged_count(norm_est, X, theta, R, tol)
        _record(history, stage, it, theta, R, nc, events)
        events = []
        if callback is not None:
            callback(history[-1], X, R)
        if nc >= k:
            converged = True
            break
        if it == cfg.maxit:
            break
        with clock("precond"):
            W = pc.apply(P, R)
        B = np.hstack((X, Pb))
        with clock("ortho"):
            W = orthonormalize(W, B, qr, precision, events)
        if W.shape[1] == 0 and Pb.shape[1] == 0:
            raise RankCollapse("search directions collapsed to zero")
        with clock("matvec"):
            AW = apply_operator(A_op, W)
        S = np.hstack((X, Pb, W))
        AS = np.hstack((AX, AP, AW))
        with clock("eig"):
            G = hermitian_part(adjoint(S) @ S)
            Ap = hermitian_part(adjoint(S) @ AS)
            if np.linalg.norm(G - np.eye(G.shape[0])) <= ORTH_GUARD[precision]:
                D, C = small_herm_eig(Ap)
                Guse = None
            else:
                events.append("gram-rr")
                D, C = _generalized_eig(G, Ap)
                Guse = G
        X, Pb, theta, V, fallback = hl_update(S, C, D, m, Guse)
        if fallback:
            events.append("hl-identity")
        AP = AS @ (C[:, m:] @ V)
    return _finish(X, theta, R, k, history, converged, clock, norm_est, stage, it)


def pinvit(A, X0, cfg: SolverConfig, P: pc.Preconditioner, norm_est=None, ortho=mixed_qr,
           history=None, timings=None, callback=None) -> EigResult:
    """Block preconditioned inverse iteration in working precision.

    Each step orthonormalizes, rotates to the Ritz basis, tests
    convergence, then updates ``X <- X - T(AX - X Theta)``.
    """
    clock = _Clock(timings)
    history = [] if history is None else history
    A_op = _operator_in(A, Precision.WORKING)
    n = A_op.shape[0]
    if norm_est is None:
        norm_est = spectral_norm_estimate(A, n, cfg.sketch_rows, cfg.seed)
    Xt = to_working(np.asarray(X0))
    m, k = Xt.shape[1], cfg.k
    converged = False
    events = []
    it = 0
    for it in range(1, cfg.maxit + 1):
        with clock("ortho"):
            X = orthonormalize(Xt, None, ortho, Precision.WORKING, events)
        if X.shape[1] < m:
            raise RankCollapse("PINVIT block lost rank")
        X, AX, theta = _ritz_rotate(A_op, X, clock)
        R = AX - X * theta[None, :]
        nc = converged_count(norm_est, X, theta, R, cfg.tol)
        _record(history, "working", it, theta, R, nc, events)
        events = []
        if callback is not None:
            callback(history[-1], X, R)
        if nc >= k:
            converged = True
            break
        with clock("precond"):
            W = pc.apply(P, R)
        Xt = X - W
    return _finish(X, theta, R, k, history, converged, clock, norm_est, "working", it)


def mixed_lobpcg(A, X0, cfg: SolverConfig, P: pc.Preconditioner | None = None, norm_est=None,
                 timings=None, callback=None) -> EigResult:
    """Binary32 LOBPCG to ``lower_tol``, then a working-precision restart
    (empty P block) to ``tol`` with the same binary32 preconditioner."""
    clock = _Clock(timings)
    if P is None:
        with clock("factor"):
            P = pc.build(A, Precision.LOWER)
    if norm_est is None:
        norm_est = spectral_norm_estimate(A, A.shape[0], cfg.sketch_rows, cfg.seed)
    history = []
    with clock("stage_lower"):
        r1 = lobpcg_stage(A, X0, cfg, P, Precision.LOWER, cfg.lower_tol, norm_est,
                          history=history, timings=clock.t, callback=callback)
    # a stage 1 that converged without updating X adds nothing but rounding
    X1 = X0 if r1.converged and r1.iterations_lower == 1 else r1.block
    with clock("stage_working"):
        r2 = lobpcg_stage(A, to_working(X1), cfg, P, Precision.WORKING, cfg.tol, norm_est,
                          ortho=mixed_qr, history=history, timings=clock.t, callback=callback)
    r2.iterations_lower = r1.iterations_lower
    r2.timings = clock.t
    r2.shift = P.shift_applied
    return r2


def initial_block(n: int, m: int, seed: int, is_complex: bool = False):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))
    if is_complex:
        X = X + 1j * rng.standard_normal((n, m))
    return X


def solve(A, cfg: SolverConfig) -> EigResult:
    """Smallest ``cfg.k`` eigenpairs of A with the configured variant.

    Sparse inputs are reordered once (reverse Cuthill-McKee, taken from the
    preconditioner) and the returned eigenvectors are mapped back.
    """
    if not isinstance(A, CsrMatrix):
        A = to_working(np.asarray(A))
    n = A.shape[0]
    cfg.validate(n)
    timings = {}
    clock = _Clock(timings)
    t0 = time.perf_counter()
    is_complex = bool(np.iscomplexobj(A.data if isinstance(A, CsrMatrix) else A))
    norm_est = spectral_norm_estimate(A, n, cfg.sketch_rows, cfg.seed)
    X0 = initial_block(n, cfg.m, cfg.seed, is_complex)
    build_prec = Precision.WORKING if cfg.variant is Variant.DLOBPCG_DCHOL else Precision.LOWER
    with clock("factor"):
        P = pc.build(A, build_prec)
    perm = P.perm
    if perm is not None:
        A = A.permute(perm)
        P = P.permuted()
        X0 = X0[perm]
    v = cfg.variant
    if v is Variant.MPLOBPCG_SCHOL:
        res = mixed_lobpcg(A, X0, cfg, P, norm_est, timings=timings)
    elif v is Variant.PINVIT:
        res = pinvit(A, X0, cfg, P, norm_est, timings=timings)
    else:
        res = lobpcg_stage(A, X0, cfg, P, Precision.WORKING, cfg.tol, norm_est,
                           ortho=householder_qr, timings=timings)
    if perm is not None:
        X = np.empty_like(res.X)
        X[perm] = res.X
        res.X = X
    res.shift = P.shift_applied
    res.norm_estimate = norm_est
    timings["total"] = time.perf_counter() - t0
    res.timings = timings
    return res
