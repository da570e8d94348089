import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from onlinemode.distributions import (PRESETS, density, effective_support, make_distribution, make_rng, sample,
                                      sample_batch, sample_stream)
from onlinemode.exceptions import ConfigError

N = 100_000


def reference(spec):
    """Independent scipy.stats objects, one per coordinate."""
    p = spec.params
    name = spec.name
    if name == "normal":
        return [stats.norm(p["mean"], p["sd"])]
    if name == "gamma":
        return [stats.gamma(p["shape"], scale=p["scale"])]
    if name == "exponential":
        return [stats.expon(scale=1 / p["rate"])]
    if name == "weibull":
        return [stats.weibull_min(p["shape"], scale=p["scale"])]
    if name == "beta":
        return [stats.beta(p["a"], p["b"])]
    if name == "bivariate_normal":
        return [stats.norm(p["mean"][i], math.sqrt(p["cov"][i][i])) for i in range(2)]
    a = p["alpha"]
    return [stats.beta(a[i], sum(a) - a[i]) for i in range(len(a))]


def test_exponential_mean_example():
    x = sample_batch(PRESETS["exponential"], make_rng(0), N)
    assert abs(x.mean() - 1.0) < 0.02


def test_dirichlet_on_simplex():
    x = sample_batch(PRESETS["dirichlet"], make_rng(0), N)
    assert np.all(x >= 0)
    assert np.max(np.abs(x.sum(axis=1) - 1.0)) < 1e-12


def test_dirichlet_three_components_on_simplex():
    spec = make_distribution("dirichlet", alpha=(2.0, 3.0, 4.0))
    x = sample_batch(spec, make_rng(1), 1000)
    assert x.shape == (1000, 3)
    assert np.max(np.abs(x.sum(axis=1) - 1.0)) < 1e-12
    np.testing.assert_allclose(spec.analytic_mode, [1 / 6, 2 / 6, 3 / 6])


def test_bivariate_mean_example():
    x = sample_batch(PRESETS["bivariate_normal"], make_rng(0), N)
    np.testing.assert_allclose(x.mean(axis=0), [20.0, 15.0], atol=0.02)


def test_density_examples():
    assert density(PRESETS["normal"], 10.0) == pytest.approx(0.3989423, abs=1e-7)
    assert density(PRESETS["exponential"], -1.0) == 0.0
    assert density(make_distribution("beta", a=2, b=1), 0.5) == pytest.approx(1.0, abs=1e-14)


def test_sample_moments_within_six_standard_errors(preset):
    x = sample_batch(preset, make_rng(2024), N)
    for j, ref in enumerate(reference(preset)):
        col = x[:, j]
        mean, var = ref.stats(moments="mv")
        mu4 = ref.moment(4) - 4 * ref.moment(3) * mean + 6 * ref.moment(2) * mean**2 - 3 * mean**4
        assert abs(col.mean() - mean) < 6 * math.sqrt(var / N)
        assert abs(col.var(ddof=1) - var) < 6 * math.sqrt((mu4 - var**2) / N)


def test_density_matches_scipy(preset, rng):
    refs = reference(preset)
    if preset.name == "bivariate_normal":
        p = preset.params
        ref = stats.multivariate_normal(p["mean"], p["cov"])
        for x in rng.normal(preset.analytic_mode, 2.0, size=(50, 2)):
            assert density(preset, x) == pytest.approx(ref.pdf(x), rel=1e-12)
    elif preset.name == "dirichlet":
        for b in rng.uniform(0.001, 0.999, size=50):
            assert density(preset, [b, 1 - b]) == pytest.approx(refs[0].pdf(b), rel=1e-12)
        assert density(preset, [0.3, 0.3]) == 0.0
    else:
        lo, hi = refs[0].ppf(1e-6), refs[0].ppf(1 - 1e-6)
        for t in rng.uniform(lo, hi, size=50):
            assert density(preset, t) == pytest.approx(refs[0].pdf(t), rel=1e-10)


def test_density_integrates_to_one(preset):
    spec = preset
    if spec.name == "bivariate_normal":
        lo, hi = effective_support(spec, 1e-10)
        mass, _ = integrate.dblquad(lambda y, x: density(spec, [x, y]), lo[0], hi[0], lo[1], hi[1], epsabs=1e-10)
    elif spec.name == "dirichlet":
        mass, _ = integrate.quad(lambda b: density(spec, [b, 1 - b]), 0, 1, epsabs=1e-12)
    else:
        lo, hi = effective_support(spec, 1e-10)
        mass, _ = integrate.quad(lambda t: density(spec, t), lo[0], hi[0], epsabs=1e-12, limit=200)
    assert abs(mass - 1.0) < 1e-4


def test_support_respected():
    for name in ("exponential", "weibull", "gamma"):
        assert np.all(sample_batch(PRESETS[name], make_rng(3), N) >= 0)
    x = sample_batch(PRESETS["beta"], make_rng(3), N)
    assert np.all((x >= 0) & (x <= 1))


@pytest.mark.parametrize("name,params,mode", [
    ("normal", {"mean": -3.0, "sd": 2.0}, [-3.0]),
    ("gamma", {"shape": 6.0, "scale": 1.0}, [5.0]),
    ("gamma", {"shape": 3.0, "scale": 2.0}, [4.0]),
    ("exponential", {"rate": 2.0}, [0.0]),
    ("weibull", {"shape": 2.0, "scale": 1.0}, [math.sqrt(0.5)]),
    ("beta", {"a": 2.0, "b": 1.0}, [1.0]),
    ("beta", {"a": 3.0, "b": 3.0}, [0.5]),
    ("dirichlet", {"alpha": (2.0, 2.0)}, [0.5, 0.5]),
])
def test_closed_form_modes(name, params, mode):
    np.testing.assert_allclose(make_distribution(name, **params).analytic_mode, mode, rtol=1e-14)


def test_analytic_mode_is_density_peak(preset):
    if preset.dim != 1:
        return
    m = preset.analytic_mode[0]
    peak = density(preset, m)
    for t in np.linspace(m - 3, m + 3, 121):
        assert density(preset, t) <= peak + 1e-12


@pytest.mark.parametrize("name,params", [
    ("beta", {"a": 0.5, "b": 0.5}),
    ("beta", {"a": 1.0, "b": 1.0}),
    ("gamma", {"shape": 0.5}),
    ("weibull", {"shape": 0.8}),
    ("normal", {"sd": 0.0}),
    ("normal", {"sd": -1.0}),
    ("bivariate_normal", {"cov": ((1.0, 2.0), (2.0, 1.0))}),
    ("dirichlet", {"alpha": (1.0, 2.0)}),
    ("normal", {"scale": 1.0}),
    ("lognormal", {}),
])
def test_invalid_parameters_rejected(name, params):
    with pytest.raises(ConfigError):
        make_distribution(name, **params)


def test_mismatched_analytic_mode_rejected():
    from onlinemode.distributions import DistributionSpec
    with pytest.raises(ConfigError):
        DistributionSpec("normal", {"mean": 10.0, "sd": 1.0}, analytic_mode=[9.0])


def test_seeded_streams_are_reproducible(preset):
    a = sample_batch(preset, make_rng(99), 1000)
    b = sample_batch(preset, make_rng(99), 1000)
    c = sample_batch(preset, make_rng(100), 1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@given(block=st.integers(1, 5000))
@settings(max_examples=25, deadline=None)
def test_stream_independent_of_block_size(block):
    for name in ("normal", "gamma", "beta", "bivariate_normal", "dirichlet", "exponential"):
        spec = PRESETS[name]
        whole = sample_batch(spec, make_rng(8), 5000)
        chunked = np.vstack(list(sample_stream(spec, 8, 5000, block=block)))
        assert np.array_equal(whole, chunked)


def test_single_sample_shape():
    assert sample(PRESETS["bivariate_normal"], make_rng(0)).shape == (2,)
    assert sample(PRESETS["normal"], make_rng(0)).shape == (1,)


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5, True])
def test_bad_seed_rejected(seed):
    with pytest.raises(ConfigError):
        make_rng(seed)
