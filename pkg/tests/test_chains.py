"""Chain families: validation, exact replay of each recursion, diagnostics."""
import math
import warnings

import numpy as np
import pytest

from harrisnls import (ConfigurationError, DataError, DomainError,
                       EstimationError, Interval, Trajectory, ar1,
                       choose_small_set, estimate_beta, hitting_count,
                       make_stream, occupation_ratios, random_walk,
                       recurrence_diagnostics, renewal, simulate_chain, tar, unit_bins,
                       unit_root, var1)
from harrisnls.rng import gaussians, pareto


class TestSpecValidation:
    def test_ar1_rejects_unit_coefficient(self):
        with pytest.raises(ConfigurationError, match="use random_walk"):
            ar1(1.0)
        with pytest.raises(ConfigurationError):
            ar1(-1.2)

    def test_ar1_requires_finite_phi(self):
        with pytest.raises(ConfigurationError):
            ar1(np.nan)

    def test_tar_requires_nonempty_threshold(self):
        with pytest.raises(ConfigurationError):
            tar(0.5, threshold=Interval(1.0, -1.0))

    def test_renewal_beta_range(self):
        with pytest.raises(ConfigurationError):
            renewal(1.0)
        with pytest.raises(ConfigurationError):
            renewal(0.0)

    def test_negative_innovation_sd(self):
        with pytest.raises(ConfigurationError):
            random_walk(innovation_sd=-1.0)

    def test_var1_transient_rejected(self):
        with pytest.raises(ConfigurationError, match="transient"):
            var1([[1.5]])

    def test_var1_two_unit_eigenvalues_warns_and_beta_unknown(self):
        with pytest.warns(UserWarning, match="two unit-circle eigenvalues"):
            spec = var1(np.eye(2))
        assert spec.known_beta() is None

    def test_var1_three_unit_eigenvalues_rejected(self):
        with pytest.raises(ConfigurationError):
            var1(np.eye(3))

    def test_unit_root_weights_must_not_sum_to_zero(self):
        with pytest.raises(ConfigurationError):
            unit_root(ma_weights=[1.0, -1.0])

    def test_unit_root_ar_layer_must_be_stable(self):
        with pytest.raises(ConfigurationError):
            unit_root(innovation_ar=1.0)

    def test_known_beta_per_family(self):
        assert ar1(0.5).known_beta() == 1.0
        assert random_walk().known_beta() == 0.5
        assert tar(0.5).known_beta() == 0.5
        assert unit_root().known_beta() == 0.5
        assert renewal(0.7).known_beta() == 0.7
        # one unit eigenvalue: random-walk-like
        spec = var1(np.array([[1.0, 0.0], [0.0, 0.3]]))
        assert spec.known_beta() == 0.5
        # all eigenvalues inside the circle: stationary regime
        assert var1(np.array([[0.5, 0.0], [0.0, 0.3]])).known_beta() == 1.0


class TestSimulation:
    def test_deterministic_in_seed(self):
        a = simulate_chain(random_walk(), 64, seed=5)
        b = simulate_chain(random_walk(), 64, seed=5)
        c = simulate_chain(random_walk(), 64, seed=6)
        np.testing.assert_array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_rejects_nonpositive_length(self):
        with pytest.raises(DomainError):
            simulate_chain(random_walk(), 0, seed=1)

    def test_path_length_and_initial_state(self):
        t = simulate_chain(random_walk(initial_state=3.0), 10, seed=1)
        assert t.values.shape == (11,)
        assert t.values[0] == 3.0
        assert t.n == 10

    def test_random_walk_replay(self):
        """The walk is the cumulative sum of the documented Gaussian stream."""
        t = simulate_chain(random_walk(innovation_sd=2.0, initial_state=1.0), 50, seed=9)
        eps = gaussians(make_stream(9), 50, sd=2.0)
        np.testing.assert_array_equal(t.values, np.concatenate(([1.0], 1.0 + np.cumsum(eps))))

    def test_ar1_replay(self):
        t = simulate_chain(ar1(0.6, innovation_sd=1.5, initial_state=2.0), 40, seed=4)
        eps = gaussians(make_stream(4), 40, sd=1.5)
        prev = 2.0
        for k in range(40):
            prev = 0.6 * prev + eps[k]
            assert t.values[k + 1] == pytest.approx(prev, rel=1e-12, abs=1e-12)

    def test_tar_replay(self):
        spec = tar(0.3, threshold=Interval(-1.0, 1.0), initial_state=0.5)
        t = simulate_chain(spec, 60, seed=13)
        eps = gaussians(make_stream(13), 60, sd=1.0)
        prev = 0.5
        for k in range(60):
            drift = 0.3 * prev if -1.0 <= prev <= 1.0 else prev
            prev = drift + eps[k]
            assert t.values[k + 1] == prev

    def test_renewal_replay(self):
        """Countdown by one; on reaching [0, 1] restart from the Pareto stream."""
        spec = renewal(0.5, initial_state=2.5)
        t = simulate_chain(spec, 80, seed=21)
        draws = pareto(make_stream(21), 80, 0.5)
        prev, k = 2.5, 0
        for step in range(80):
            if prev <= 1.0:
                prev = draws[k]
                k += 1
            else:
                prev = prev - 1.0
            assert t.values[step + 1] == prev
        assert np.all(t.values >= 0.0)

    def test_unit_root_trivial_weights_equal_random_walk(self):
        a = simulate_chain(unit_root(ma_weights=[1.0]), 128, seed=3)
        b = simulate_chain(random_walk(), 128, seed=3)
        np.testing.assert_array_equal(a.values, b.values)

    def test_unit_root_replay_with_ma_and_ar_layers(self):
        spec = unit_root(ma_weights=[1.0, 0.5], innovation_ar=0.3, innovation_sd=0.8)
        t = simulate_chain(spec, 50, seed=17)
        eps = gaussians(make_stream(17), 50, sd=0.8)
        # zero prehistory for both filters
        ma = np.empty(50)
        for k in range(50):
            ma[k] = eps[k] + 0.5 * (eps[k - 1] if k >= 1 else 0.0)
        inc = np.empty(50)
        prev = 0.0
        for k in range(50):
            prev = ma[k] + 0.3 * prev
            inc[k] = prev
        np.testing.assert_allclose(t.values[1:], np.cumsum(inc), rtol=1e-12, atol=1e-12)

    def test_var1_shape_and_replay(self):
        a = np.array([[0.5, 0.1], [0.0, 0.4]])
        spec = var1(a, intercept=[0.2, -0.1], innovation_sd=1.0, initial_state=0.0)
        t = simulate_chain(spec, 30, seed=2)
        assert t.values.shape == (31, 2)
        assert t.is_vector and t.hit_coord == 0
        eps = gaussians(make_stream(2), 60).reshape(30, 2)
        state = np.zeros(2)
        for k in range(30):
            state = a @ state + np.array([0.2, -0.1]) + eps[k]
            np.testing.assert_allclose(t.values[k + 1], state, rtol=1e-12)

    def test_vector_observed_uses_designated_coordinate(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            spec = var1(np.eye(2))
        t = simulate_chain(spec, 12, seed=7)
        np.testing.assert_array_equal(t.observed(), t.values[1:, 0])

    def test_vector_without_coordinate_rejected(self):
        t = Trajectory(values=np.zeros((4, 2)))
        with pytest.raises(ConfigurationError, match="hit_coord"):
            t.observed()


class TestTrajectory:
    def test_observed_drops_initial_state(self):
        t = Trajectory(values=np.array([9.0, 1.0, 2.0]))
        np.testing.assert_array_equal(t.observed(), [1.0, 2.0])

    def test_values_are_immutable(self):
        t = Trajectory(values=np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            t.values[0] = 5.0

    def test_empty_values_rejected(self):
        with pytest.raises(DataError):
            Trajectory(values=np.array([]))


class TestDiagnostics:
    def test_hitting_count_excludes_initial_state(self):
        t = Trajectory(values=np.array([0.0, 5.0, 0.5, -0.5, 2.0]))
        assert hitting_count(t, Interval(-1.0, 1.0)) == 2

    def test_hitting_count_boundary_points_count(self):
        t = Trajectory(values=np.array([9.0, 1.0, -1.0]))
        assert hitting_count(t, Interval(-1.0, 1.0)) == 2

    def test_choose_small_set_quantile(self):
        # |observed| = 1..10; the 0.2 quantile sits at 2.8
        values = np.concatenate(([0.0], np.arange(1.0, 11.0)))
        t = Trajectory(values=values)
        c = choose_small_set(t, min_fraction=0.2)
        q = float(np.quantile(np.arange(1.0, 11.0), 0.2))
        assert c.lo == -q and c.hi == q

    def test_choose_small_set_bad_fraction(self):
        t = Trajectory(values=np.array([0.0, 1.0]))
        with pytest.raises(DomainError):
            choose_small_set(t, min_fraction=0.0)

    def test_estimate_beta_exact_arithmetic(self):
        # 4 of 16 observations inside: ln 4 / ln 16 = 1/2
        inside = [0.1, -0.2, 0.3, 0.0]
        outside = [5.0] * 12
        t = Trajectory(values=np.array([99.0] + inside + outside))
        got = estimate_beta(t, Interval(-1.0, 1.0))
        assert got == pytest.approx(math.log(4) / math.log(16), rel=1e-15)

    def test_estimate_beta_never_visited(self):
        t = Trajectory(values=np.array([0.0, 5.0, 6.0]))
        with pytest.raises(EstimationError, match="never visited"):
            estimate_beta(t, Interval(-1.0, 1.0))

    def test_estimate_beta_needs_two_steps(self):
        with pytest.raises(DomainError):
            estimate_beta(Trajectory(values=np.array([0.0, 0.0])))

    def test_estimate_beta_regime_split(self):
        """Stationary chains revisit at a linear rate, the walk at sqrt(n)."""
        c = Interval(-1.0, 1.0)
        b_ar = estimate_beta(simulate_chain(ar1(0.5), 50_000, seed=1), c)
        b_rw = estimate_beta(simulate_chain(random_walk(), 50_000, seed=1), c)
        assert b_ar > 0.85
        assert 0.3 < b_rw < 0.7
        assert b_ar > b_rw + 0.2

    def test_occupation_ratios_reference_is_one(self):
        t = Trajectory(values=np.array([0.0, 0.5, -0.5, 1.5, 2.5, 0.2]))
        c = Interval(-1.0, 1.0)
        table = occupation_ratios(t, c, bins=[Interval(1.0, 2.0), Interval(2.0, 3.0)])
        assert table[c] == 1.0
        assert table[Interval(1.0, 2.0)] == pytest.approx(1.0 / 3.0)
        assert table[Interval(2.0, 3.0)] == pytest.approx(1.0 / 3.0)

    def test_occupation_ratios_unvisited_reference(self):
        t = Trajectory(values=np.array([0.0, 5.0]))
        with pytest.raises(EstimationError):
            occupation_ratios(t, Interval(-1.0, 1.0), bins=[])

    def test_recurrence_diagnostics_bundle(self):
        t = simulate_chain(random_walk(), 2000, seed=11)
        c = Interval(-1.0, 1.0)
        d = recurrence_diagnostics(t, c, bins=unit_bins(1.0, 3.0))
        assert d.n == 2000
        assert d.hitting_count == hitting_count(t, c)
        assert d.beta_hat == estimate_beta(t, c)
        assert d.occupation[c] == 1.0

    def test_unit_bins_cover_range(self):
        bins = unit_bins(-2.3, 1.2)
        assert [(b.lo, b.hi) for b in bins] == [
            (-3.0, -2.0), (-2.0, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, 2.0)]

    def test_unit_bins_degenerate_range_yields_one_bin(self):
        bins = unit_bins(0.5, 0.5)
        assert [(b.lo, b.hi) for b in bins] == [(0.0, 1.0)]
