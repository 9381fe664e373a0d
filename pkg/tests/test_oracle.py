import numpy as np
import pytest

from lpqn.oracle import (
    GridSpec,
    fd_gradient_check,
    grid_min_1d,
    kkt_residual_ball,
    oracle_project_epigraph,
    oracle_prox_scalar,
)
from lpqn.scalar_core import RationalExponent

HALF = RationalExponent(1, 2)


class TestGridMin:
    def test_quadratic(self):
        x, v = grid_min_1d(lambda t: (t - 3.0) ** 2, GridSpec(0, 10, 10001, 40))
        assert x == pytest.approx(3.0, abs=1e-6)
        assert v == pytest.approx(0.0, abs=1e-12)

    def test_prox_objective(self):
        # argmin of sqrt|t| + 0.5 (t-2)^2: largest root of 2a^3 - 4a + 1 squared
        x, v = grid_min_1d(lambda t: np.sqrt(np.abs(t)) + 0.5 * (t - 2.0) ** 2, GridSpec(0, 10))
        assert x == pytest.approx(1.6053779404795956, abs=1e-6)
        assert v == pytest.approx(1.3448983832914285, abs=1e-12)

    def test_abs(self):
        x, _ = grid_min_1d(np.abs, GridSpec(-1, 1, 10001, 40))
        assert x == pytest.approx(0.0, abs=1e-10)

    def test_deterministic(self):
        spec = GridSpec(-2, 5, 4001, 30)
        f = lambda t: np.cos(t) + 0.1 * t**2
        assert grid_min_1d(f, spec) == grid_min_1d(f, spec)

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            GridSpec(1.0, 0.0)


class TestOracleProjection:
    def test_feasible_short_circuit(self):
        assert oracle_project_epigraph(0.3, 1.0, HALF) == (0.3, 1.0)

    def test_interior_case(self):
        # (1, 0), p=1/2 has the closed-form solution (1/2, sqrt(1/2))
        x, t = oracle_project_epigraph(1.0, 0.0, HALF)
        assert x == pytest.approx(0.5, abs=1e-7)
        assert t == pytest.approx(np.sqrt(0.5), abs=1e-7)

    def test_mirror(self):
        xp, tp = oracle_project_epigraph(1.0, 0.0, HALF)
        xn, tn = oracle_project_epigraph(-1.0, 0.0, HALF)
        assert xn == -xp and tn == tp

    def test_never_infeasible(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            xb, tb = rng.uniform(-10, 10, 2)
            x, t = oracle_project_epigraph(xb, tb, HALF)
            assert t >= abs(x) ** 0.5 - 1e-12


class TestOracleProx:
    def test_matches_closed_form_soft_regime(self):
        assert oracle_prox_scalar(2.0, HALF, 1.0) == pytest.approx(1.6053779404795956, abs=1e-6)

    def test_zero(self):
        assert oracle_prox_scalar(0.0, HALF, 1.0) == 0.0


class TestKktResidualBall:
    def test_feasible_point_zero_residual(self):
        U = np.eye(3)
        z = np.array([0.1, 0.2, 0.0])
        assert kkt_residual_ball(z, z, U, np.zeros(3), 1.0) == 0.0

    def test_unit_ball_projection(self):
        U = np.eye(2)
        assert kkt_residual_ball([1.0, 0.0], [2.0, 0.0], U, np.zeros(2), 1.0) <= 1e-10

    def test_detects_wrong_projection(self):
        U = np.eye(2)
        assert kkt_residual_ball([0.5, 0.0], [2.0, 0.0], U, np.zeros(2), 1.0) > 1e-2


class TestFdGradientCheck:
    def test_quadratic_exact(self):
        f = lambda x: float(x @ x)
        grad = lambda x: 2 * x
        assert fd_gradient_check(f, grad, np.array([1.0, -2.0, 0.5])) <= 1e-6

    def test_least_squares_gradient(self):
        rng = np.random.default_rng(2)
        A = rng.normal(size=(6, 4))
        b = rng.normal(size=6)
        f = lambda x: float(np.sum((A @ x - b) ** 2))
        grad = lambda x: 2 * A.T @ (A @ x - b)
        assert fd_gradient_check(f, grad, rng.normal(size=4)) <= 1e-5

    def test_scaled_gradient_detector(self):
        f = lambda x: float(x @ x)
        grad = lambda x: 3.0 * x  # 1.5x the true gradient
        err = fd_gradient_check(f, grad, np.array([1.0, 2.0]))
        assert err == pytest.approx(0.5, abs=1e-6)

    def test_h_range_enforced(self):
        with pytest.raises(ValueError):
            fd_gradient_check(lambda x: 0.0, lambda x: x, np.zeros(2), h=1e-2)
