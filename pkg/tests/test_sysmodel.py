import numpy as np
import pytest
from scipy.linalg import expm

from sparse_resilience import (
    AttackSpec,
    DataMatrices,
    LtiSystem,
    Strategy,
    build_data_matrices,
    inject_attack,
    pendulum_system,
    random_system,
    simulate,
)
from sparse_resilience.numlin import count_nonzero_rows, eigen_structure, numerical_rank


def test_lti_system_validates_shapes():
    with pytest.raises(ValueError):
        LtiSystem(np.ones((2, 3)), np.ones((1, 3)))
    with pytest.raises(ValueError):
        LtiSystem(np.eye(2), np.ones((1, 3)))
    s = LtiSystem(np.eye(2), np.ones((4, 2)))
    assert (s.n, s.q) == (2, 4)


class TestSimulate:
    def test_identity_dynamics(self):
        tr = simulate(LtiSystem(np.eye(2), np.eye(2)), [1.0, 2.0], 3)
        np.testing.assert_array_equal(tr.states, np.tile([[1.0], [2.0]], 4))
        assert tr.horizon == 3

    def test_scalar_doubling(self):
        tr = simulate(LtiSystem([[2.0]], [[1.0]]), [1.0], 2)
        np.testing.assert_array_equal(tr.states, [[1.0, 2.0, 4.0]])
        np.testing.assert_array_equal(tr.nominal_outputs, [[1.0, 2.0]])

    def test_rejects_short_horizon(self):
        with pytest.raises(ValueError):
            simulate(LtiSystem(np.eye(3), np.eye(3)), np.ones(3), 2)

    def test_pendulum_recursion_is_exact(self):
        sys = pendulum_system()
        tr = simulate(sys, (0.1, 0.0), 100)
        X = tr.states
        for k in range(100):
            assert np.array_equal(X[:, k + 1], sys.A @ X[:, k])
            assert np.array_equal(tr.nominal_outputs[:, k], sys.C @ X[:, k])
        # oscillates: the angle changes sign within the horizon
        assert X[0].min() < 0 < X[0].max()

    @pytest.mark.parametrize("seed", range(5))
    def test_data_satisfy_model(self, seed):
        sys = random_system(4, 3, seed)
        tr = simulate(sys, np.random.default_rng(seed).standard_normal(4), 8)
        d = build_data_matrices(tr.states, tr.nominal_outputs)
        resid = np.linalg.norm(d.x_plus - sys.A @ d.x_minus, 2)
        assert resid <= 1e-12 * np.linalg.norm(d.x_plus, 2)


class TestInjectAttack:
    def setup_method(self):
        self.sys = pendulum_system()
        self.traj = simulate(self.sys, (0.1, 0.0), 20)

    def test_empty_support(self):
        Y, E = inject_attack(self.traj, self.sys, AttackSpec(set(), budget=0))
        np.testing.assert_array_equal(Y, self.traj.nominal_outputs)
        assert not E.any()

    def test_pendulum_zeroing(self):
        Y, E = inject_attack(self.traj, self.sys, AttackSpec({1}, budget=1))
        assert not Y[1].any()
        np.testing.assert_array_equal(Y[[0, 2]], self.traj.nominal_outputs[[0, 2]])
        np.testing.assert_array_equal(Y, self.traj.nominal_outputs + E)

    def test_constant_bias_rows(self):
        sys = random_system(3, 4, 7)
        traj = simulate(sys, np.ones(3), 6)
        Y, E = inject_attack(traj, sys, AttackSpec({0, 2}, budget=2, strategy="constant_bias", bias=(5.0, 5.0)))
        assert count_nonzero_rows(np.linalg.norm(E, axis=1)) == 2
        np.testing.assert_array_equal(E[[0, 2]], 5.0)

    def test_random_bounded_is_seeded_and_bounded(self):
        spec = AttackSpec({0}, budget=1, strategy=Strategy.RANDOM_BOUNDED, bound=0.3, seed=4)
        _, E1 = inject_attack(self.traj, self.sys, spec)
        _, E2 = inject_attack(self.traj, self.sys, spec)
        np.testing.assert_array_equal(E1, E2)
        assert np.abs(E1).max() <= 0.3
        assert not E1[1:].any()

    def test_support_exceeding_budget_rejected(self):
        with pytest.raises(ValueError):
            AttackSpec({0, 1}, budget=1)

    def test_support_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            inject_attack(self.traj, self.sys, AttackSpec({3}, budget=1))

    def test_bias_length_checked(self):
        with pytest.raises(ValueError):
            AttackSpec({0, 1}, budget=2, strategy="constant_bias", bias=(1.0,))


class TestBuildDataMatrices:
    def test_minimal(self):
        X = np.arange(6.0).reshape(2, 3)
        d = build_data_matrices(X, np.ones((1, 2)))
        np.testing.assert_array_equal(d.x_minus, X[:, :2])
        np.testing.assert_array_equal(d.x_plus, X[:, 1:])
        assert (d.n, d.q, d.T) == (2, 1, 2)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            build_data_matrices(np.ones((2, 3)), np.ones((1, 3)))

    def test_pendulum_rank(self):
        tr = simulate(pendulum_system(), (0.1, 0.0), 100)
        assert numerical_rank(build_data_matrices(tr.states, tr.nominal_outputs).x_minus) == 2

    def test_eigenvector_initial_state_is_rank_deficient(self):
        sys = LtiSystem(np.diag([0.5, 0.9]), np.eye(2))
        tr = simulate(sys, (1.0, 0.0), 10)
        assert numerical_rank(build_data_matrices(tr.states, tr.nominal_outputs).x_minus) == 1

    def test_direct_construction_checks_shapes(self):
        with pytest.raises(ValueError):
            DataMatrices(np.ones((2, 3)), np.ones((2, 4)), np.ones((1, 3)))
        with pytest.raises(ValueError):
            DataMatrices(np.ones((2, 3)), np.ones((2, 3)), np.ones((1, 4)))


class TestPendulum:
    def test_matrices(self):
        s = pendulum_system()
        assert s.A[0, 0] == 0.9878
        np.testing.assert_array_equal(s.A, [[0.9878, 0.0498], [-0.4880, 0.9878]])
        np.testing.assert_array_equal(s.C, [[1, 0], [1, 1], [0, 1]])
        assert (s.n, s.q) == (2, 3)

    def test_complex_pair_near_unit_circle(self):
        ev = np.linalg.eigvals(pendulum_system().A)
        assert abs(ev[0] - np.conj(ev[1])) < 1e-14 and abs(ev[0].imag) > 0.1
        np.testing.assert_allclose(np.abs(ev), 1.0, atol=1e-4)

    def test_matches_sampled_continuous_model(self):
        Ad = expm(np.array([[0.0, 1.0], [-9.8, 0.0]]) * 0.05)
        np.testing.assert_allclose(pendulum_system().A, Ad, atol=5e-5)


class TestRandomSystem:
    def test_deterministic(self):
        a, b = random_system(4, 3, 42), random_system(4, 3, 42)
        np.testing.assert_array_equal(a.A, b.A)
        np.testing.assert_array_equal(a.C, b.C)

    def test_seeds_differ(self):
        assert not np.array_equal(random_system(4, 3, 1).A, random_system(4, 3, 2).A)

    def test_spectral_radius_normalization_keeps_eigenvectors(self):
        raw = random_system(5, 3, 9)
        scaled = random_system(5, 3, 9, spectral_radius=1.0)
        assert np.isclose(np.max(np.abs(np.linalg.eigvals(scaled.A))), 1.0)
        np.testing.assert_allclose(scaled.A / raw.A, scaled.A[0, 0] / raw.A[0, 0])
        np.testing.assert_array_equal(scaled.C, raw.C)

    @pytest.mark.parametrize("seed", range(20))
    def test_gaussian_n25_is_multiplicity_one(self, seed):
        es = eigen_structure(random_system(25, 10, seed).A)
        assert es.all_simple and len(es) == 25

    def test_generic_data_full_rank(self):
        flagged = 0
        for seed in range(50):
            sys = random_system(4, 3, seed, spectral_radius=1.0)
            tr = simulate(sys, np.random.default_rng(seed + 99).standard_normal(4), 14)
            if numerical_rank(tr.states[:, :-1]) < 4:
                flagged += 1
        assert flagged <= 2
