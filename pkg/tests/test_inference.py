"""Plug-in covariance matrices, intervals, and the quadrature/KDE helpers."""
import math

import numpy as np
import pytest

from harrisnls import (ConfigurationError, Dataset, DomainError,
                       InferenceError, Interval, KdeConfig, NumericError,
                       TruncationPlan, adaptive_simpson, builtin_model,
                       covariance_ah, covariance_integrable,
                       covariance_unit_root, critical_value, custom_model,
                       kernel_density, mnls_fit, nls_fit, polynomial_model,
                       silverman_bandwidth, unit_root_information)

C = Interval(-1.0, 1.0)


class TestAdaptiveSimpson:
    def test_sine_arch(self):
        assert abs(adaptive_simpson(np.sin, 0.0, math.pi) - 2.0) < 1e-9

    def test_oscillatory(self):
        # int_0^1 cos(20 x) dx = sin(20)/20
        got = adaptive_simpson(lambda x: np.cos(20.0 * x), 0.0, 1.0)
        assert abs(got - 0.045647262536381385) < 1e-12

    def test_tolerance_is_respected(self):
        loose = adaptive_simpson(lambda x: np.exp(-x * x), -3.0, 3.0, tol=1e-3)
        tight = adaptive_simpson(lambda x: np.exp(-x * x), -3.0, 3.0, tol=1e-12)
        assert abs(loose - tight) < 1e-3

    def test_unresolvable_integrand(self):
        with pytest.raises(NumericError, match="non-convergence"):
            adaptive_simpson(lambda t: 1.0 / t, 1e-300, 1.0)


class TestBandwidthAndKde:
    def test_silverman_frozen(self):
        got = silverman_bandwidth(np.arange(5.0))
        want = 0.9 * math.sqrt(2.0) * 5.0 ** (-0.2)  # population sd of 0..4
        np.testing.assert_allclose(got, want, rtol=1e-15)
        np.testing.assert_allclose(got, 0.9224939070946869, rtol=1e-15)

    def test_silverman_errors(self):
        with pytest.raises(DomainError, match="two points"):
            silverman_bandwidth(np.array([1.0]))
        with pytest.raises(DomainError, match="zero spread"):
            silverman_bandwidth(np.ones(5))

    def test_single_point_kernel(self):
        h = 0.5
        got = kernel_density(2.0, np.array([2.0]), KdeConfig(bandwidth=h))
        assert isinstance(got, float)
        assert abs(got - 1.0 / (h * math.sqrt(2.0 * math.pi))) < 1e-15
        arr = kernel_density(np.array([0.0, 2.0]), np.array([2.0]),
                             KdeConfig(bandwidth=h))
        assert arr.shape == (2,) and arr[1] == got

    def test_integrates_to_one(self):
        samp = np.random.default_rng(1).standard_normal(200)
        mass = adaptive_simpson(lambda t: kernel_density(t, samp),
                                -12.0, 12.0, tol=1e-9)
        assert abs(mass - 1.0) < 1e-6


@pytest.fixture(scope="module")
def integrable_fit():
    m = builtin_model("exp_quadratic")
    x = np.linspace(-0.9, 0.9, 40)
    rng = np.random.default_rng(3)
    y = m.g(x, np.array([1.0])) + 0.3 * rng.standard_normal(x.size)
    data = Dataset(x=x, y=y)
    return data, m, nls_fit(data, m)


class TestCovarianceIntegrable:
    def test_known_density_reduces_to_a_quadrature(self, integrable_fit):
        """With the density pinned to the uniform 1/2 on [-1, 1], the
        curvature functional is an explicit integral of the squared
        theta-gradient, so the matrix is sigma2 over that number."""
        data, m, fit = integrable_fit
        cov = covariance_integrable(data, m, fit.theta_hat, C,
                                    density=lambda t: 0.5)
        th = fit.theta_hat[0]
        L = adaptive_simpson(
            lambda t: 0.5 * t ** 4 * np.exp(-2.0 * th * t * t), -1.0, 1.0)
        np.testing.assert_allclose(cov.matrix[0, 0], fit.sigma2_hat / L,
                                   rtol=1e-12)
        assert cov.kind == "integrable"
        assert cov.rate_factor == data.n  # every point sits inside C

    def test_uniform_quadrature_oracle_value(self, integrable_fit):
        # int_{-1}^{1} x^4 exp(-2 x^2) dx, halved by the uniform density
        data, m, fit = integrable_fit
        cov = covariance_integrable(data, m, np.array([1.0]), C,
                                    density=lambda t: 0.5)
        sigma2 = float(np.mean((data.y - m.g(data.x, np.array([1.0]))) ** 2))
        np.testing.assert_allclose(cov.matrix[0, 0],
                                   sigma2 / 0.05294281483297646, rtol=1e-10)

    def test_interval_construction(self, integrable_fit):
        data, m, fit = integrable_fit
        cov = covariance_integrable(data, m, fit.theta_hat, C)
        assert cov.ci.shape == (1, 2) and cov.ci_level == 0.95
        z = critical_value(1.0 - 0.95)
        half = z * math.sqrt(cov.matrix[0, 0] / cov.rate_factor)
        np.testing.assert_allclose((cov.ci[0, 1] - cov.ci[0, 0]) / 2.0, half,
                                   rtol=1e-12)
        np.testing.assert_allclose((cov.ci[0, 1] + cov.ci[0, 0]) / 2.0,
                                   fit.theta_hat[0], rtol=1e-12)

    def test_reference_set_too_thin(self):
        d = Dataset(x=np.array([0.5, 5.0, 6.0, 7.0]),
                    y=np.array([1.0, 0.0, 0.0, 0.0]))
        with pytest.raises(InferenceError, match="degenerate"):
            covariance_integrable(d, builtin_model("quadratic"),
                                  np.array([0.5]), C)

    def test_singular_curvature(self):
        def g(x, th):
            x = np.asarray(x, dtype=float)
            return (th[0] + th[1]) * np.exp(-x * x)

        def grad(x, th):
            col = np.exp(-np.asarray(x, dtype=float) ** 2)
            return np.stack([col, col], axis=1)

        m = custom_model("dup", g, [(-1.0, 1.0)] * 2, grad=grad)
        x = np.linspace(-0.8, 0.8, 30)
        d = Dataset(x=x, y=g(x, [0.25, 0.25]))
        with pytest.raises(InferenceError, match="non-identified: singular"):
            covariance_integrable(d, m, np.array([0.25, 0.25]), C)


@pytest.fixture(scope="module")
def ah_fit():
    m = builtin_model("quadratic")
    x = np.array([0.5, 1.5, -0.5, 3.2, 2.2, -1.7, 0.2, 1.1])
    y = m.g(x, np.array([0.5])) + 0.1 * np.arange(8)
    data = Dataset(x=x, y=y)
    plan = TruncationPlan(n=8, alpha=0.01, beta=0.5, critical=2.58, radius=3.5)
    return data, m, plan, mnls_fit(data, m, plan)


class TestCovarianceAh:
    def test_flat_occupation_oracle(self, ah_fit):
        """Occupation ratios pinned to 1 on every unit bin reduce the design
        to 2 * sum_{i=0..3} i^4 = 196 for the pure-quadratic gradient at
        radius 3.5, so the matrix is sigma2 / 196."""
        data, m, plan, fit = ah_fit
        cov = covariance_ah(data, m, fit.theta_hat, plan, C,
                            occupation=lambda lo, hi: 1.0)
        np.testing.assert_allclose(cov.matrix[0, 0], fit.sigma2_hat / 196.0,
                                   rtol=1e-12)
        assert cov.kind == "asymptotically_homogeneous"
        assert cov.rate_factor == 3.0  # points inside [-1, 1]

    def test_empirical_bin_weights_hand_case(self):
        m = builtin_model("quadratic")
        x = np.array([0.5, 1.5, -0.5, 3.2])
        y = m.g(x, np.array([0.5])) + np.array([0.01, -0.02, 0.015, 0.0])
        data = Dataset(x=x, y=y)
        plan = TruncationPlan(n=4, alpha=0.01, beta=0.5, critical=2.58,
                              radius=3.5)
        fit = mnls_fit(data, m, plan)
        cov = covariance_ah(data, m, fit.theta_hat, plan, C)
        # bins of unit width out from 0: right counts (1, 1, 0, 1) for
        # {0.5}, {1.5}, {}, {3.2}; left counts (1, 0, 0, 0) for {-0.5};
        # each divided by the 2 points inside the reference set
        grid = np.arange(4) / 3.5
        lim2 = grid ** 4
        design = float(lim2 @ (np.array([1, 1, 0, 1]) / 2.0)
                       + lim2 @ (np.array([1, 0, 0, 0]) / 2.0))
        want = fit.sigma2_hat / (3.5 ** 4 * design)
        np.testing.assert_allclose(cov.matrix[0, 0], want, rtol=1e-12)
        assert cov.rate_factor == 2.0

    def test_rejects_integrable_class(self, ah_fit):
        data, _, plan, fit = ah_fit
        with pytest.raises(ConfigurationError, match="asymptotically homogeneous"):
            covariance_ah(data, builtin_model("exp_quadratic"),
                          np.array([0.5]), plan, C)


class TestUnitRoot:
    def test_linear_information(self):
        m = builtin_model("linear")
        got = unit_root_information(m, 2.0)
        np.testing.assert_allclose(got, [[(2.0 / 3.0) * 8.0]], rtol=1e-10)

    def test_quadratic_information(self):
        m = builtin_model("quadratic")
        got = unit_root_information(m, 2.0)
        np.testing.assert_allclose(got, [[(2.0 / 5.0) * 32.0]], rtol=1e-10)

    def test_vanishing_limit_coordinates_warn(self):
        with pytest.warns(UserWarning, match="vanishing limit"):
            info = unit_root_information(polynomial_model(2), 2.0)
        np.testing.assert_allclose(np.diag(info), [0.0, 0.0, 12.8], rtol=1e-10)

    def test_covariance_wrapper(self, ah_fit):
        data, m, plan, fit = ah_fit
        cov = covariance_unit_root(data, m, fit.theta_hat, plan, C)
        assert cov.kind == "unit_root"
        assert cov.flags == ("approximate-rate",)
        assert cov.rate_factor == 3.0 / C.length  # hits per unit length
        want = fit.sigma2_hat / ((2.0 / 5.0) * 3.5 ** 5)
        np.testing.assert_allclose(cov.matrix[0, 0], want, rtol=1e-12)
