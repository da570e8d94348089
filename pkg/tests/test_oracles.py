import math

import numpy as np
import pytest
from scipy import optimize, stats

from onlinemode import oracles
from onlinemode.distributions import PRESETS, density, make_distribution, make_rng, sample_batch
from onlinemode.exceptions import ConfigError, GridError
from onlinemode.kernels import KernelSpec
from onlinemode.oracles import GridSpec

G1 = KernelSpec("gaussian", 1.0)
G2 = KernelSpec("multivariate_gaussian", 1.0, 2)
NORMAL = PRESETS["normal"]
EXP = PRESETS["exponential"]


def gauss_kernel(spec):
    return G2 if spec.dim == 2 else G1


# ---- closed forms used as independent references --------------------------------

def exp_smoothed_density(m):
    # integral_0^inf e^-t phi(m - t) dt
    return math.exp(0.5 - m) * stats.norm.cdf(m - 1.0)


def exp_smoothed_mode():
    z = optimize.brentq(lambda z: stats.norm.pdf(z) - stats.norm.cdf(z), -2, 2, xtol=1e-14)
    return 1.0 + z


def beta21_smoothed_density(m):
    # integral_0^1 2t phi(m - t) dt
    P, p = stats.norm.cdf, stats.norm.pdf
    return 2.0 * (m * (P(m) - P(m - 1.0)) - p(m - 1.0) + p(m))


# ---- smoothed density ------------------------------------------------------------

def test_smoothed_density_normal_example():
    assert oracles.smoothed_density(NORMAL, G1, 10.0) == pytest.approx(1 / math.sqrt(4 * math.pi), abs=1e-9)


def test_smoothed_density_far_from_support():
    assert oracles.smoothed_density(EXP, G1, -5.0) < 1e-4


@pytest.mark.parametrize("m", [-2.0, 0.0, 0.7, 3.0])
def test_smoothed_density_exponential_closed_form(m):
    assert oracles.smoothed_density(EXP, G1, m) == pytest.approx(exp_smoothed_density(m), rel=1e-8)


@pytest.mark.parametrize("m", [-1.0, 0.3, 0.67, 2.0])
def test_smoothed_density_beta_closed_form(m):
    spec = make_distribution("beta", a=2.0, b=1.0)
    assert oracles.smoothed_density(spec, G1, m) == pytest.approx(beta21_smoothed_density(m), rel=1e-8)


@pytest.mark.parametrize("name", ["normal", "gamma", "bivariate_normal"])
def test_identity_approximation_at_mode(name):
    spec = PRESETS[name]
    narrow = KernelSpec.for_dim("gaussian", 0.01, spec.dim)
    m = spec.analytic_mode
    assert abs(oracles.smoothed_density(spec, narrow, m) - density(spec, m)) < 1e-3


@pytest.mark.parametrize("name,point", [("exponential", 1.0), ("weibull", 0.5), ("beta", 0.5)])
def test_identity_approximation_at_interior_points(name, point):
    # The Dirichlet law is singular in the plane, so it has no analogue here.
    spec = PRESETS[name]
    narrow = KernelSpec("gaussian", 0.01)
    assert abs(oracles.smoothed_density(spec, narrow, point) - density(spec, point)) < 1e-3


# ---- smoothed gradient ------------------------------------------------------------

def test_smoothed_grad_normal_examples():
    assert oracles.smoothed_grad(NORMAL, G1, 10.0)[0] == pytest.approx(0.0, abs=1e-10)
    expected = 0.5 / math.sqrt(4 * math.pi) * math.exp(-0.25)
    assert oracles.smoothed_grad(NORMAL, G1, 9.0)[0] == pytest.approx(expected, abs=1e-9)
    assert oracles.smoothed_grad(NORMAL, G1, 9.0)[0] == pytest.approx(0.1098478, abs=1e-7)


def test_bivariate_grad_componentwise(rng):
    spec = PRESETS["bivariate_normal"]
    g = stats.norm(0.0, math.sqrt(2.0))
    for m in rng.normal([20.0, 15.0], 1.5, size=(20, 2)):
        vec = oracles.smoothed_grad(spec, G2, m)
        d1 = -(m[0] - 20.0) / 2.0 * g.pdf(m[0] - 20.0) * g.pdf(m[1] - 15.0)
        d2 = -(m[1] - 15.0) / 2.0 * g.pdf(m[1] - 15.0) * g.pdf(m[0] - 20.0)
        np.testing.assert_allclose(vec, [d1, d2], atol=1e-9)
        # the same from two independent one-dimensional quadratures per component
        n1, n2 = make_distribution("normal", mean=20.0, sd=1.0), make_distribution("normal", mean=15.0, sd=1.0)
        c1 = oracles.smoothed_grad(n1, G1, m[0])[0] * oracles.smoothed_density(n2, G1, m[1])
        c2 = oracles.smoothed_grad(n2, G1, m[1])[0] * oracles.smoothed_density(n1, G1, m[0])
        np.testing.assert_allclose(vec, [c1, c2], atol=1e-9)


@pytest.mark.parametrize("name", ["normal", "bivariate_normal"])
def test_gradient_moves_through_convolution(name, rng):
    spec = PRESETS[name]
    k = gauss_kernel(spec)
    for m in rng.normal(spec.analytic_mode, 2.0, size=(20, spec.dim)):
        np.testing.assert_allclose(oracles.smoothed_grad(spec, k, m), oracles.grad_convolution(spec, k, m), atol=1e-6)


FD_CASES = [(n, f) for n in sorted(PRESETS) for f in ("gaussian", "cauchy", "fejer")
            if PRESETS[n].dim == 1 or f == "gaussian"]


@pytest.mark.parametrize("name,family", FD_CASES)
def test_smoothed_grad_matches_finite_differences(name, family):
    spec = PRESETS[name]
    k = KernelSpec.for_dim(family, 1.0, spec.dim)
    for off in (-0.7, 0.4, 1.3):
        m = spec.analytic_mode + off
        g = oracles.smoothed_grad(spec, k, m)
        fd = oracles.finite_difference_grad(lambda y: oracles.smoothed_density(spec, k, y), m, h=1e-4)
        np.testing.assert_allclose(g, fd, rtol=1e-4, atol=1e-9)


def test_dimension_mismatch():
    with pytest.raises(ConfigError):
        oracles.smoothed_density(NORMAL, G2, [1.0, 2.0])


# ---- regularized argmax ------------------------------------------------------------

def test_regularized_argmax_normal():
    assert oracles.regularized_argmax(NORMAL, G1, 0.0)[0] == pytest.approx(10.0, abs=1e-4)


def test_regularized_argmax_exponential_closed_form():
    assert oracles.regularized_argmax(EXP, G1, 0.0)[0] == pytest.approx(exp_smoothed_mode(), abs=1e-6)


def test_regularized_argmax_exponential_reference():
    assert oracles.regularized_argmax(EXP, G1, 1e-5)[0] == pytest.approx(0.6979, abs=0.01)


def test_regularized_argmax_beta_reference():
    assert oracles.regularized_argmax(PRESETS["beta"], G1, 1e-5)[0] == pytest.approx(0.9006, abs=0.01)


def test_regularized_argmax_beta_2_1_closed_form():
    # Beta(2,1) smooths to a peak near 0.670, far from the 0.9006 reference
    spec = make_distribution("beta", a=2.0, b=1.0)
    ref = optimize.minimize_scalar(lambda m: -beta21_smoothed_density(m), bounds=(0, 1), method="bounded",
                                   options={"xatol": 1e-10}).x
    got = oracles.regularized_argmax(spec, G1, 0.0)[0]
    assert got == pytest.approx(ref, abs=1e-5)
    assert abs(got - 0.9006) > 0.2


def test_regularized_argmax_bivariate():
    spec = PRESETS["bivariate_normal"]
    np.testing.assert_allclose(oracles.regularized_argmax(spec, G2, 0.0), [20.0, 15.0], atol=1e-4)


def test_regularized_argmax_is_stationary():
    for name in ("normal", "gamma", "exponential", "beta"):
        spec = PRESETS[name]
        m = oracles.regularized_argmax(spec, G1, 1e-5)
        assert abs(oracles.smoothed_grad(spec, G1, m)[0] - 1e-5 * m[0]) < 1e-6


def test_boundary_argmax_raises():
    with pytest.raises(GridError):
        oracles.regularized_argmax(NORMAL, G1, 0.0, GridSpec([0.0], [5.0], 51))


def test_lambda_effect_monotone():
    grid = GridSpec([-5.0], [25.0], 601)
    base = oracles.regularized_argmax(NORMAL, G1, 0.0, grid)
    dist = [np.linalg.norm(oracles.regularized_argmax(NORMAL, G1, lam, grid) - base) for lam in (1e-5, 1e-3, 1e-1)]
    assert dist[0] <= dist[1] <= dist[2]
    assert dist[2] > dist[0]


@pytest.mark.parametrize("kwargs", [
    dict(lo=[1.0], hi=[1.0], points_per_dim=5),
    dict(lo=[0.0], hi=[1.0], points_per_dim=2),
    dict(lo=[0.0, 0.0], hi=[1.0], points_per_dim=5),
])
def test_invalid_grid(kwargs):
    with pytest.raises(ConfigError):
        GridSpec(**kwargs)


# ---- batch KDE ----------------------------------------------------------------------

def test_kde_singleton():
    assert oracles.kde_argmax([5.0], G1)[0] == pytest.approx(5.0, abs=1e-4)


def test_kde_value_matches_kernel_average():
    x = np.array([1.0, 2.0, 4.0])
    expected = np.mean(stats.norm.pdf(3.0 - x))
    assert oracles.kde_value(x, G1, [[3.0]])[0] == pytest.approx(expected, rel=1e-14)


def test_kde_normal():
    x = sample_batch(NORMAL, make_rng(0), 100_000)
    assert abs(oracles.kde_argmax(x, G1)[0] - 10.0) < 0.15


def test_kde_exponential_near_smoothed_mode():
    x = sample_batch(EXP, make_rng(0), 100_000)
    ref = oracles.regularized_argmax(EXP, G1, 0.0)[0]
    assert abs(oracles.kde_argmax(x, G1)[0] - ref) < 0.05


def test_kde_bivariate():
    x = sample_batch(PRESETS["bivariate_normal"], make_rng(0), 20_000)
    np.testing.assert_allclose(oracles.kde_argmax(x, G2), [20.0, 15.0], atol=0.2)


@pytest.mark.slow
def test_kde_agrees_with_regularized_argmax_at_large_n():
    x = sample_batch(NORMAL, make_rng(1), 1_000_000)
    grid = GridSpec([5.0], [15.0], 101)
    kde = oracles.kde_argmax(x, G1, grid)
    assert abs(kde[0] - oracles.regularized_argmax(NORMAL, G1, 0.0)[0]) < 0.02


def test_kde_rejects_empty():
    with pytest.raises(ConfigError):
        oracles.kde_argmax(np.empty((0, 1)), G1)


# ---- kernel mass helper ---------------------------------------------------------------

def test_kernel_mass_shell_matches_closed_form():
    # Gaussian tail mass outside radius r is 2 * (1 - Phi(r / eps))
    k = KernelSpec("gaussian", 0.5)
    assert oracles.kernel_mass(k, inner=1.0) == pytest.approx(2 * stats.norm.sf(2.0), rel=1e-8)
    # Cauchy: 1 - (2/pi) * arctan(r / eps)
    k = KernelSpec("cauchy", 0.5)
    expected = 2 / math.pi * (math.atan(2e4) - math.atan(2.0))
    assert oracles.kernel_mass(k, inner=1.0, outer=1e4) == pytest.approx(expected, rel=1e-8)
