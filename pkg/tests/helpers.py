import numpy as np


def rel(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def orth_err(Q):
    return float(np.linalg.norm(Q.conj().T @ Q - np.eye(Q.shape[1])))


def random_herm(n, rng, complex_mode=False):
    G = rng.standard_normal((n, n))
    if complex_mode:
        G = G + 1j * rng.standard_normal((n, n))
    return (G + G.conj().T) / 2


def principal_angle_max(A, B):
    Qa, _ = np.linalg.qr(A)
    Qb, _ = np.linalg.qr(B)
    s = np.linalg.svd(Qa.conj().T @ Qb, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1, 1)))


def subspace_gap(A, B):
    """``||(I - Qa Qa^H) Qb||_2``; sine of the largest principal angle, accurate near zero."""
    Qa, _ = np.linalg.qr(A)
    Qb, _ = np.linalg.qr(B)
    return float(np.linalg.norm(Qb - Qa @ (Qa.conj().T @ Qb), 2))


def rate_trace(A, P, x0, maxit=60):
    """Run k=1 PINVIT and return (rho sequence, lambda)."""
    from mplobpcg import SolverConfig, Variant, pinvit

    lam = np.linalg.eigvalsh(np.asarray(A))
    rhos = []
    cfg = SolverConfig(k=1, m=1, maxit=maxit, variant=Variant.PINVIT)
    pinvit(A, x0, cfg, P, callback=lambda rec, X, R: rhos.append(rec.theta[0]))
    return np.array(rhos), lam


def certify_rate(A, P, x0, maxit=60):
    """Worst observed ``ratio_{i+1}/ratio_i`` divided by the guaranteed rate.

    Steps count only while ``lambda1 < rho < lambda2`` and ``rho - lambda1``
    sits well above the accuracy floor.  Returns ``(worst, steps_checked)``.
    """
    from mplobpcg import analysis
    from mplobpcg.precision import U_WORKING

    rhos, lam = rate_trace(A, P, x0, maxit)
    n = len(lam)
    l1, l2, ln = float(lam[0]), float(lam[1]), float(lam[-1])
    gp = analysis.measure_gamma_precond(A, P)
    tA = analysis.norm_T(P, np.iscomplexobj(A)) * ln
    er = analysis.epsilon_r(n, U_WORKING, analysis.epsilon_A(n, U_WORKING))
    floor = analysis.accuracy_floor(gp, tA, n, U_WORKING, er, l1, ln)
    worst, checked = 0.0, 0
    for a, b in zip(rhos[:-1], rhos[1:]):
        if not (l1 < a < l2 and a - l1 > 10 * floor and l1 < b < l2):
            continue
        g = analysis.gamma_total(gp, tA, analysis.beta(a, l1, l2, ln), n, U_WORKING, er)
        if g >= 1:
            continue
        ratio = ((b - l1) / (l2 - b)) / ((a - l1) / (l2 - a))
        worst = max(worst, ratio / analysis.rate_bound(g, l1, l2))
        checked += 1
    return worst, checked
