import itertools

import numpy as np
import pytest

from lpqn.convex_proj import (
    HankelResidualProjector,
    HingeSublevelProjector,
    ProjectionError,
    ProjectionSpec,
    ResidualBallProjector,
    project_hankel_residual,
    project_hinge_sublevel,
    project_residual_ball,
    project_sampling_ball,
)
from lpqn.linops import HankelShape, antidiag_weights, hankel_adjoint, hankel_lift
from lpqn.oracle import kkt_residual_ball, oracle_project_hinge


class TestResidualBall:
    def test_feasible_short_circuit(self):
        U = np.eye(2)
        z = np.array([0.3, 0.1])
        np.testing.assert_array_equal(project_residual_ball(z, U, np.zeros(2), 1.0), z)

    def test_euclidean_ball(self):
        y = project_residual_ball(np.array([2.0, 0.0]), np.eye(2), np.zeros(2), 1.0)
        np.testing.assert_allclose(y, [1.0, 0.0], atol=1e-10)

    def test_diag_instance_kkt(self):
        U = np.diag([2.0, 1.0])
        z = np.array([2.0, 2.0])
        y = project_residual_ball(z, U, np.zeros(2), 1.0)
        assert kkt_residual_ball(y, z, U, np.zeros(2), 1.0) <= 1e-8

    def test_random_instances_kkt(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            m, n = rng.integers(2, 9, size=2)
            U = rng.normal(size=(m, n))
            v = rng.normal(size=m)
            z = rng.normal(size=n) * 3
            floor = ResidualBallProjector(U, v, 0.0).residual_floor
            delta = floor + rng.uniform(0.05, 1.0)
            y = project_residual_ball(z, U, v, delta)
            assert kkt_residual_ball(y, z, U, v, delta) <= 1e-8

    def test_infeasible_names_floor(self):
        U = np.array([[1.0, 0.0], [1.0, 0.0]])  # rank 1: v off-range is unreachable
        v = np.array([1.0, -1.0])
        with pytest.raises(ProjectionError, match="least achievable") as exc:
            project_residual_ball(np.zeros(2), U, v, 0.5)
        assert exc.value.floor == pytest.approx(np.sqrt(2.0), rel=1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        U = rng.normal(size=(4, 6))
        v = rng.normal(size=4)
        proj = ResidualBallProjector(U, v, 0.3)
        y = proj(rng.normal(size=6) * 5)
        np.testing.assert_allclose(proj(y), y, atol=2e-12)

    def test_nonexpansive(self):
        rng = np.random.default_rng(3)
        U = rng.normal(size=(5, 7))
        v = rng.normal(size=5)
        proj = ResidualBallProjector(U, v, 0.7)
        for _ in range(20):
            z1 = rng.normal(size=7) * 4
            z2 = rng.normal(size=7) * 4
            lhs = np.linalg.norm(proj(z1) - proj(z2))
            assert lhs <= np.linalg.norm(z1 - z2) + 1e-8

    def test_dual_residual_monotone(self):
        # the bracketing relies on ‖U y(nu) − v‖ decreasing in nu
        rng = np.random.default_rng(4)
        U = rng.normal(size=(4, 4))
        v = rng.normal(size=4)
        z = rng.normal(size=4) * 3
        P, s, Qt = np.linalg.svd(U, full_matrices=False)
        c = Qt @ z
        d = P.T @ v
        r2 = (s * c - d) ** 2
        nus = np.linspace(0.0, 50.0, 400)
        phi = [float(np.sum(r2 / (1 + nu * s**2) ** 2)) for nu in nus]
        assert np.all(np.diff(phi) <= 1e-12)


class TestSamplingBall:
    def test_feasible_untouched(self):
        z = np.array([1.0, 2.0, 3.0])
        out = project_sampling_ball(z, [1], np.array([2.05]), 0.1)
        np.testing.assert_array_equal(out, z)

    def test_eps_zero_pins_samples(self):
        out = project_sampling_ball(np.array([1.0, 2.0, 3.0]), [0, 2], np.array([5.0, 7.0]), 0.0)
        np.testing.assert_array_equal(out, [5.0, 2.0, 7.0])

    def test_radial_halving(self):
        z = np.array([2.0, 0.0, 9.0])
        out = project_sampling_ball(z, [0, 1], np.zeros(2), 1.0)
        np.testing.assert_allclose(out, [1.0, 0.0, 9.0])
        assert out[2] == 9.0  # unsampled entry untouched

    def test_zero_residual_convention(self):
        z = np.array([4.0, 5.0])
        out = project_sampling_ball(z, [0], np.array([4.0]), 0.0)
        np.testing.assert_array_equal(out, z)


class TestHankelResidual:
    def _instance(self, rng, n=9, m=7):
        shape = HankelShape.near_square(n)
        T = rng.normal(size=(m, n))
        yhat = rng.normal(size=m)
        return shape, T, yhat

    def test_feasible_hankel_matrix_fixed(self):
        rng = np.random.default_rng(5)
        shape, T, _ = self._instance(rng)
        x0 = rng.normal(size=shape.n)
        yhat = T @ x0  # x0 achieves residual 0
        x, X = project_hankel_residual(hankel_lift(x0, shape), T, yhat, 1e-6, shape)
        np.testing.assert_allclose(x, x0, atol=1e-10)
        np.testing.assert_allclose(X, hankel_lift(x0, shape), atol=1e-10)

    def test_huge_eps_gives_antidiag_means(self):
        rng = np.random.default_rng(6)
        shape, T, yhat = self._instance(rng)
        Z = rng.normal(size=(shape.r, shape.c))
        x, _ = project_hankel_residual(Z, T, yhat, 1e12, shape)
        zbar = hankel_adjoint(Z, shape) / antidiag_weights(shape)
        np.testing.assert_allclose(x, zbar, atol=1e-10)

    def test_random_instances_weighted_kkt(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            shape, T, yhat = self._instance(rng)
            Z = rng.normal(size=(shape.r, shape.c)) * 2
            eps = 0.02 * float(yhat @ yhat) + 1e-3
            proj = HankelResidualProjector(T, yhat, eps, shape)
            x, X = proj.project(Z)
            np.testing.assert_array_equal(X, hankel_lift(x, shape))
            w = antidiag_weights(shape)
            sqw = np.sqrt(w)
            zbar = hankel_adjoint(Z, shape) / w
            resid = kkt_residual_ball(
                sqw * x, sqw * zbar, T / sqw[None, :], yhat, np.sqrt(eps)
            )
            assert resid <= 1e-8

    def test_objective_not_beaten_by_probes(self):
        rng = np.random.default_rng(8)
        shape, T, yhat = self._instance(rng)
        Z = rng.normal(size=(shape.r, shape.c)) * 2
        eps = 0.05 * float(yhat @ yhat)
        x, X = project_hankel_residual(Z, T, yhat, eps, shape)
        base = np.sum((X - Z) ** 2)
        for _ in range(200):
            xp = x + rng.normal(size=shape.n) * 0.05
            if np.sum((T @ xp - yhat) ** 2) <= eps:
                assert np.sum((hankel_lift(xp, shape) - Z) ** 2) >= base - 1e-9

    def test_infeasible_eps_raises(self):
        rng = np.random.default_rng(9)
        shape = HankelShape.near_square(5)
        T = rng.normal(size=(8, 5))  # tall: positive residual floor
        yhat = rng.normal(size=8) * 10
        with pytest.raises(ProjectionError):
            project_hankel_residual(np.zeros((shape.r, shape.c)), T, yhat, 1e-9, shape)


def _hinge(A, y, eps=None):
    return float(np.mean(np.maximum(1.0 - A @ y, 0.0)))


def _hinge_projection_enum(z, features, labels, eps):
    """Exhaustive KKT enumeration for the hinge sublevel projection.

    Each sample index is in one of three states at the optimum: inactive
    (multiplier 0, margin satisfied), margin-tight (fractional multiplier), or
    violated (multiplier at the box bound nu/m).  For every state assignment
    the KKT equations are linear in (fractional multipliers, nu); candidates
    passing the sign checks are compared by distance.  Only viable for m <= 8.
    """
    z = np.asarray(z, float)
    A = np.asarray(labels, float)[:, None] * np.asarray(features, float)
    m = A.shape[0]
    if _hinge(A, z) <= eps:
        return z
    G = A @ A.T
    c = 1.0 - A @ z
    best, best_d = None, np.inf
    for states in itertools.product((0, 1, 2), repeat=m):
        M = [j for j in range(m) if states[j] == 1]
        F = [j for j in range(m) if states[j] == 2]
        k = len(M)
        rows, rhs = [], []
        for j in M:
            row = np.zeros(k + 1)
            row[:k] = G[np.ix_([j], M)].ravel()
            row[k] = G[j, F].sum() / m
            rows.append(row)
            rhs.append(c[j])
        row = np.zeros(k + 1)
        if k:
            row[:k] = -G[np.ix_(F, M)].sum(axis=0) if F else 0.0
        row[k] = -G[np.ix_(F, F)].sum() / m if F else 0.0
        rows.append(row)
        rhs.append(m * eps - c[F].sum())
        S = np.array(rows)
        b = np.array(rhs)
        sol, *_ = np.linalg.lstsq(S, b, rcond=None)
        if not np.allclose(S @ sol, b, atol=1e-9):
            continue
        nu = sol[k]
        if nu < -1e-10:
            continue
        alpha = np.zeros(m)
        alpha[M] = sol[:k]
        alpha[F] = nu / m
        if np.any(alpha < -1e-9) or np.any(alpha > nu / m + 1e-9):
            continue
        u = c - G @ alpha
        if any(u[j] > 1e-8 for j in range(m) if states[j] == 0):
            continue
        if any(abs(u[j]) > 1e-6 for j in M):
            continue
        if any(u[j] < -1e-8 for j in F):
            continue
        y = z + A.T @ alpha
        if _hinge(A, y) <= eps + 1e-7:
            d = float(np.linalg.norm(y - z))
            if d < best_d:
                best, best_d = y, d
    assert best is not None, "enumeration found no KKT point"
    return best


def _hinge_infimum(features, labels):
    """min over y of the mean hinge, via the LP over (y, slacks)."""
    from scipy.optimize import linprog

    A = np.asarray(labels, float)[:, None] * np.asarray(features, float)
    m, n = A.shape
    # variables [y (free, split +/-), xi >= 0]; minimize mean xi
    cobj = np.concatenate([np.zeros(2 * n), np.ones(m) / m])
    Aub = np.hstack([-A, A, -np.eye(m)])
    res = linprog(cobj, A_ub=Aub, b_ub=-np.ones(m), bounds=[(0, None)] * (2 * n + m))
    assert res.success
    return float(res.fun)


def _random_hinge_instance(rng, m, n, eps_lo=0.05, eps_hi=0.6):
    """Random binary-feature instance with an eps above the hinge infimum."""
    features = (rng.random(size=(m, n)) < 0.5).astype(float)
    features[features.sum(axis=1) == 0, 0] = 1.0
    labels = rng.choice([-1.0, 1.0], size=m)
    z = rng.normal(size=n)
    floor = _hinge_infimum(features, labels)
    eps = floor * 1.25 + float(rng.uniform(eps_lo, eps_hi))
    return features, labels, z, eps


class TestHingeSublevel:
    def test_feasible_identity(self):
        features = np.array([[1.0, 0.0]])
        labels = np.array([1.0])
        z = np.array([5.0, 0.0])  # margin comfortably satisfied
        out = project_hinge_sublevel(z, features, labels, 0.1)
        np.testing.assert_array_equal(out, z)

    def test_single_active_constraint(self):
        # one sample u=(1,), v=1: as eps -> 0 the projection of 0 approaches 1
        out = project_hinge_sublevel(np.zeros(1), np.array([[1.0]]), np.array([1.0]), 1e-10)
        assert out[0] == pytest.approx(1.0, abs=1e-8)

    def test_matches_qp_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(12):
            m, n = int(rng.integers(3, 13)), int(rng.integers(2, 7))
            features, labels, z, eps = _random_hinge_instance(rng, m, n)
            y = project_hinge_sublevel(z, features, labels, eps, tol=1e-8)
            ref = oracle_project_hinge(z, features, labels, eps)
            assert np.linalg.norm(y - ref) <= 1e-6

    def test_matches_kkt_enumeration(self):
        rng = np.random.default_rng(11)
        for _ in range(8):
            m, n = int(rng.integers(2, 7)), int(rng.integers(2, 5))
            features, labels, z, eps = _random_hinge_instance(rng, m, n)
            y = project_hinge_sublevel(z, features, labels, eps, tol=1e-8)
            ref = _hinge_projection_enum(z, features, labels, eps)
            assert np.linalg.norm(y - ref) <= 1e-6

    def test_output_meets_level(self):
        rng = np.random.default_rng(12)
        features, labels, z, eps = _random_hinge_instance(rng, 10, 4)
        proj = HingeSublevelProjector(features, labels, eps, tol=1e-8)
        y = proj(z * 4)
        assert proj.hinge(y) <= eps + 1e-8

    def test_idempotent_and_nonexpansive(self):
        rng = np.random.default_rng(13)
        features, labels, _, eps = _random_hinge_instance(rng, 8, 3)
        proj = HingeSublevelProjector(features, labels, eps, tol=1e-9)
        z1 = rng.normal(size=3) * 3
        z2 = rng.normal(size=3) * 3
        y1, y2 = proj(z1), proj(z2)
        assert np.linalg.norm(proj(y1) - y1) <= 2e-8
        assert np.linalg.norm(y1 - y2) <= np.linalg.norm(z1 - z2) + 1e-8

    def test_iteration_cap_error_carries_diagnostics(self):
        rng = np.random.default_rng(14)
        features, labels, z, eps = _random_hinge_instance(rng, 10, 4)
        proj = HingeSublevelProjector(features, labels, eps, tol=1e-12, max_inner=1)
        with pytest.raises(ProjectionError) as exc:
            proj(z * 10)
        assert exc.value.best is not None
        assert exc.value.gap is not None

    def test_labels_validated(self):
        with pytest.raises(ValueError):
            HingeSublevelProjector(np.ones((2, 2)), np.array([1.0, 2.0]), 0.1)


class TestProjectionSpec:
    def test_builds_residual_ball(self):
        spec = ProjectionSpec("residual_ball", {"U": np.eye(2), "v": np.zeros(2), "delta": 1.0})
        proj = spec.build()
        np.testing.assert_allclose(proj(np.array([2.0, 0.0])), [1.0, 0.0], atol=1e-10)

    def test_builds_custom(self):
        spec = ProjectionSpec("custom", {"projector": lambda z: z * 0})
        assert spec.build()(np.ones(3)).sum() == 0

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ProjectionSpec("banana").build()
