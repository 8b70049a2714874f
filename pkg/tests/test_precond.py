import numpy as np
import pytest

from mplobpcg import analysis
from mplobpcg import precond as pc
from mplobpcg.errors import DimensionMismatch, NotPositiveDefinite
from mplobpcg.generators import gen_laplace2d
from mplobpcg.precision import LOWER, U_LOWER, WORKING
from mplobpcg.sparse import CsrMatrix

from helpers import rel
from oracles import spd_with_condition


class TestBuild:
    def test_identity_lower(self):
        P = pc.build(np.eye(4), LOWER)
        assert P.kind is pc.PrecondKind.DENSE_CHOL
        assert np.array_equal(P.factor, np.eye(4, dtype=np.float32))
        assert P.shift_applied == 0

    def test_hand_factor_rounded(self):
        P = pc.build(np.array([[4.0, 2], [2, 5]]), LOWER)
        assert P.factor.dtype == np.float32
        assert np.array_equal(P.factor, np.float32([[2, 0], [1, 2]]))

    def test_breakdown_shift(self):
        A = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-8]])
        P = pc.build(A, LOWER)
        assert P.shift_applied > 0
        assert P.shift_applied == pytest.approx(10 * U_LOWER * 2, rel=0.5)
        L = P.factor.astype(float)
        assert np.allclose(L @ L.T, A + P.shift_applied * np.eye(2), atol=1e-6)

    def test_working_build_does_not_shift(self):
        with pytest.raises(NotPositiveDefinite):
            pc.build(np.array([[1.0, 2], [2, 1]]), WORKING)

    def test_indefinite_fails_after_retry(self):
        with pytest.raises(NotPositiveDefinite):
            pc.build(np.diag([1.0, -1.0]), LOWER)

    def test_sparse_uses_rcm(self):
        A = gen_laplace2d(6, 5)
        P = pc.build(A, LOWER)
        assert P.kind is pc.PrecondKind.SPARSE_CHOL
        assert sorted(P.perm.tolist()) == list(range(30))
        assert P.factor.values.dtype == np.float32

    def test_sparse_shift(self):
        A = CsrMatrix.from_dense(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-8]]))
        assert pc.build(A, LOWER).shift_applied > 0


class TestApply:
    def test_identity_factor(self, rng):
        R = rng.standard_normal((4, 2))
        W = pc.apply(pc.build(np.eye(4), LOWER), R)
        assert W.dtype == np.float64
        assert np.array_equal(W, R.astype(np.float32).astype(np.float64))

    def test_working_inverse_round_trip(self, rng):
        A, _ = spd_with_condition(40, 100, rng)
        R = rng.standard_normal((40, 3))
        W = pc.apply(pc.build(A, WORKING), R)
        assert np.linalg.norm(A @ W - R) <= 1e-12 * np.linalg.norm(R)

    @pytest.mark.parametrize("n,kappa", [(20, 100), (50, 50)])
    def test_lower_residual_within_epsilon_T_bound(self, rng, n, kappa):
        A, _ = spd_with_condition(n, kappa, rng)
        R = rng.standard_normal((n, 3))
        W = pc.apply(pc.build(A, LOWER), R)
        bound = analysis.epsilon_T_bound(n, kappa)
        # ||A T - I|| <= sqrt(kappa) ||I - A^1/2 T A^1/2||
        assert rel(A @ W, R) <= bound * np.sqrt(kappa)

    def test_sparse_permuted_frame(self, rng):
        A = gen_laplace2d(8, 7)
        P = pc.build(A, LOWER)
        R = rng.standard_normal((56, 2))
        W = pc.apply(P, R)
        Wp = pc.apply(P.permuted(), R[P.perm])
        assert np.array_equal(Wp, W[P.perm])
        assert rel(A @ W, R) <= 1e-5

    def test_lower_input_stays_lower(self, rng):
        P = pc.build(gen_laplace2d(4, 4), LOWER)
        assert pc.apply(P, rng.standard_normal((16, 2)).astype(np.float32)).dtype == np.float32

    def test_complex_rhs_real_factor(self, rng):
        A, _ = spd_with_condition(15, 10, rng)
        P = pc.build(A, LOWER)
        R = rng.standard_normal((15, 2))
        Wc = pc.apply(P, R + 2j * R)
        W = pc.apply(P, R)
        assert np.allclose(Wc, W + 2j * W, rtol=1e-6)

    def test_complex_matrix(self, rng):
        A, _ = spd_with_condition(20, 10, rng, complex_mode=True)
        R = rng.standard_normal((20, 2)) + 1j * rng.standard_normal((20, 2))
        W = pc.apply(pc.build(A, LOWER), R)
        assert W.dtype == np.complex128
        assert rel(A @ W, R) <= 1e-5

    def test_exact_inverse_shadow(self, rng):
        A, _ = spd_with_condition(30, 1e3, rng)
        R = rng.standard_normal((30, 2))
        W = pc.apply(pc.exact_inverse_shadow(A), R)
        assert rel(A @ W, R) <= 1e-12

    def test_identity_kind(self, rng):
        R = rng.standard_normal((5, 2))
        assert np.array_equal(pc.apply(pc.identity(5), R), R)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            pc.apply(pc.identity(5), np.ones((4, 1)))


class TestOperatorProperties:
    def test_deterministic(self, rng):
        A, _ = spd_with_condition(30, 100, rng)
        P = pc.build(A, LOWER)
        R = rng.standard_normal((30, 4))
        assert np.array_equal(pc.apply(P, R), pc.apply(P, R))

    def test_linearity(self, rng):
        n = 40
        A, _ = spd_with_condition(n, 100, rng)
        P = pc.build(A, LOWER)
        r1, r2 = rng.standard_normal((n, 1)), rng.standard_normal((n, 1))
        a, b = 0.7, -1.3
        lhs = pc.apply(P, a * r1 + b * r2)
        rhs = a * pc.apply(P, r1) + b * pc.apply(P, r2)
        scale = analysis.norm_T(P) * (abs(a) * np.linalg.norm(r1) + abs(b) * np.linalg.norm(r2))
        assert np.linalg.norm(lhs - rhs) <= 10 * n * U_LOWER * scale

    def test_symmetry(self, rng):
        n = 40
        A, _ = spd_with_condition(n, 100, rng)
        P = pc.build(A, LOWER)
        x, y = rng.standard_normal((n, 1)), rng.standard_normal((n, 1))
        tol = 10 * n * U_LOWER * np.linalg.norm(x) * np.linalg.norm(y) * analysis.norm_T(P)
        assert abs((x.T @ pc.apply(P, y)) - (y.T @ pc.apply(P, x))).item() <= tol

    @pytest.mark.parametrize("n,kappa", [(30, 1e2), (60, 1e3), (100, 1e4)])
    def test_measured_gamma_within_bound(self, rng, n, kappa):
        A, _ = spd_with_condition(n, kappa, rng)
        gamma = analysis.measure_gamma_precond(A, pc.build(A, LOWER))
        try:
            bound = analysis.epsilon_T_bound(n, kappa)
        except analysis.BoundVacuous:
            bound = np.inf
        assert gamma <= bound
