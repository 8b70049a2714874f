"""Rounding-error bounds for single-vector PINVIT with an inexact
preconditioner, plus dense measurements that feed them.

Notation: ``u_h``/``u_l`` are the working/lower unit roundoffs,
``gamma_n(n, u) = n u / (1 - n u)``, and ``T_E`` is the preconditioner as
actually applied (rounding included).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import precond as pc
from .dense import adjoint, hermitian_part, small_herm_eig
from .errors import (
    AssumptionViolated,
    BoundVacuous,
    DenominatorNonpositive,
    GammaTooLarge,
    OutOfInterval,
)
from .precision import U_LOWER, U_WORKING
from .sparse import CsrMatrix

DENSE_LIMIT = 200


def gamma_n(n: int, u: float) -> float:
    nu = n * u
    if nu >= 1:
        raise AssumptionViolated(f"n*u = {nu:g} >= 1")
    return nu / (1 - nu)


def epsilon_A(n: int, u_h: float = U_WORKING) -> float:
    """Normwise relative backward error of a product with A: sqrt(n) gamma_n."""
    return math.sqrt(n) * gamma_n(n, u_h)


def epsilon_r(n: int, u_h: float, eps_A: float) -> float:
    """Relative error in a computed residual ``A x - rho x``."""
    if 2 * n * u_h >= 1:
        raise AssumptionViolated(f"2*n*u_h = {2 * n * u_h:g} >= 1")
    g = gamma_n(n, u_h)
    return (g + eps_A + g * eps_A + (n + 1) * u_h) * (1 + u_h) / (1 - 2 * n * u_h) + eps_A + u_h


def epsilon_T(n: int, kappa: float, u_l: float = U_LOWER) -> float:
    """``4 n (3n+1) kappa u_l``; a bound only while it stays below 1."""
    e = 4 * n * (3 * n + 1) * kappa * u_l
    if e >= 1:
        raise BoundVacuous(f"epsilon_T = {e:g} >= 1")
    return e


def epsilon_T_bound(n: int, kappa: float, u_l: float = U_LOWER) -> float:
    """Upper bound ``e/(1-e)`` on ``||I - A^{1/2} T_E A^{1/2}||_2``."""
    e = epsilon_T(n, kappa, u_l)
    return e / (1 - e)


def beta(rho: float, lambda1: float, lambda2: float, lambdan: float) -> float:
    if not lambda1 < rho < lambda2:
        raise OutOfInterval(f"rho = {rho!r} not in ({lambda1!r}, {lambda2!r})")
    return max(math.sqrt(lambda1 * lambdan) / (rho - lambda1),
               math.sqrt(lambda2 * lambdan) / (lambda2 - rho))


def gamma_total(gamma_precond: float, norm_TE_times_normA: float, beta_val: float,
                n: int, u_h: float, eps_r: float) -> float:
    """Effective preconditioner quality including rounding in the iteration.

    ``n`` is accepted for interface symmetry; the dimension enters through
    ``eps_r``.
    """
    g2 = gamma_n(2, u_h)
    tA = norm_TE_times_normA
    return gamma_precond + g2 * tA + beta_val * (u_h + (1 + g2) * eps_r * tA)


def rate_bound(gamma: float, lambda1: float, lambda2: float) -> float:
    """Squared per-step contraction factor of ``(rho - l1)/(l2 - rho)``."""
    if gamma >= 1:
        raise GammaTooLarge(f"gamma = {gamma!r} >= 1")
    if gamma < 0 or not 0 < lambda1 < lambda2:
        raise ValueError("need gamma >= 0 and 0 < lambda1 < lambda2")
    q = lambda1 / lambda2
    return (gamma + (1 - gamma) * q) ** 2


def accuracy_floor(gamma_precond: float, norm_TE_times_normA: float, n: int, u_h: float,
                   eps_r: float, lambda1: float, lambdan: float) -> float:
    """Absolute eigenvalue error below which contraction is no longer guaranteed."""
    g2 = gamma_n(2, u_h)
    denom = 1 - gamma_precond - g2 * norm_TE_times_normA
    if denom <= 0:
        raise DenominatorNonpositive(f"1 - gamma_precond - gamma_2 ||T|| ||A|| = {denom!r}")
    return math.sqrt(lambda1 * lambdan) * (u_h + (1 + g2) * eps_r * norm_TE_times_normA) / denom


def _dense(A):
    M = A.todense() if isinstance(A, CsrMatrix) else np.asarray(A)
    if M.shape[0] > DENSE_LIMIT:
        raise ValueError(f"dense measurement limited to n <= {DENSE_LIMIT}")
    return M.astype(np.complex128 if np.iscomplexobj(M) else np.float64)


def _two_norm(M) -> float:
    w, _ = small_herm_eig(hermitian_part(adjoint(M) @ M))
    return math.sqrt(max(float(w[-1]), 0.0))


def sqrtm_hpd(A):
    w, V = small_herm_eig(_dense(A))
    if w[0] <= 0:
        raise ValueError("matrix is not positive definite")
    return (V * np.sqrt(w)[None, :]) @ adjoint(V)


def measure_gamma_precond(A, P: pc.Preconditioner) -> float:
    """``||I - A^{1/2} T_E A^{1/2}||_2`` with T_E applied column by column."""
    M = _dense(A)
    H = sqrtm_hpd(M)
    E = np.eye(M.shape[0]) - H @ pc.apply(P, H)
    return _two_norm(E)


def norm_T(P: pc.Preconditioner, is_complex: bool = False) -> float:
    if P.n > DENSE_LIMIT:
        raise ValueError(f"dense measurement limited to n <= {DENSE_LIMIT}")
    return _two_norm(pc.densify(P, np.complex128 if is_complex else np.float64))


def spectrum(A):
    return small_herm_eig(_dense(A)).values


@dataclass
class BoundReport:
    eps_A: float
    eps_r: float
    eps_T: float
    gamma_precond: float
    beta: float
    gamma_total: float
    rate: float
    floor: float

    def as_dict(self):
        return asdict(self)


def bound_report(A, P: pc.Preconditioner, rho: float | None = None, u_h: float = U_WORKING) -> BoundReport:
    """Every bound quantity for a dense-sized A and preconditioner P.

    ``rho`` defaults to the midpoint of ``(lambda1, lambda2)``.  Quantities
    whose hypotheses fail are reported as ``inf`` (``rate`` as 1.0, meaning
    no guaranteed contraction).
    """
    M = _dense(A)
    n = M.shape[0]
    lam = spectrum(M)
    l1, l2, ln = float(lam[0]), float(lam[1]), float(lam[-1])
    rho = 0.5 * (l1 + l2) if rho is None else rho
    eA = epsilon_A(n, u_h)
    er = epsilon_r(n, u_h, eA)
    try:
        eT = epsilon_T(n, ln / l1, U_LOWER)
    except BoundVacuous:
        eT = math.inf
    gp = measure_gamma_precond(M, P)
    tA = norm_T(P, np.iscomplexobj(M)) * ln
    b = beta(rho, l1, l2, ln)
    g = gamma_total(gp, tA, b, n, u_h, er)
    rate = rate_bound(g, l1, l2) if g < 1 else 1.0
    try:
        floor = accuracy_floor(gp, tA, n, u_h, er, l1, ln)
    except DenominatorNonpositive:
        floor = math.inf
    return BoundReport(eA, er, eT, gp, b, g, rate, floor)
