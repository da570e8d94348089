"""Seeded samplers and analytic densities for unimodal target distributions.

Random streams come from numpy's ``Generator`` over the PCG64 bit generator,
seeded with a single non-negative 64-bit integer. Replicate ``i`` of an
experiment with base seed ``s`` uses seed ``s + i``. Variates are drawn with
numpy methods that consume the bit stream one variate at a time, so a seeded
stream is the same whether it is drawn in one call or in blocks.

Sampling methods: inverse CDF for exponential and Weibull, ziggurat normals
(Cholesky-transformed for the bivariate normal), Marsaglia-Tsang gamma, and
gamma ratios for beta and Dirichlet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats

from .exceptions import ConfigError

__all__ = [
    "Family",
    "DistributionSpec",
    "make_distribution",
    "make_rng",
    "sample",
    "sample_batch",
    "sample_stream",
    "density",
    "univariate_pdf",
    "effective_support",
    "PRESETS",
    "STREAM_BLOCK",
]

RNG_ALGORITHM = "numpy.random.PCG64"
STREAM_BLOCK = 1 << 16
_SEED_LIMIT = 1 << 64


class Family(str, Enum):
    NORMAL = "normal"
    GAMMA = "gamma"
    EXPONENTIAL = "exponential"
    WEIBULL = "weibull"
    BETA = "beta"
    BIVARIATE_NORMAL = "bivariate_normal"
    DIRICHLET = "dirichlet"


_PARAM_NAMES = {
    Family.NORMAL: ("mean", "sd"),
    Family.GAMMA: ("shape", "scale"),
    Family.EXPONENTIAL: ("rate",),
    Family.WEIBULL: ("shape", "scale"),
    Family.BETA: ("a", "b"),
    Family.BIVARIATE_NORMAL: ("mean", "cov"),
    Family.DIRICHLET: ("alpha",),
}

_DEFAULTS = {
    Family.NORMAL: {"mean": 10.0, "sd": 1.0},
    Family.GAMMA: {"shape": 6.0, "scale": 1.0},
    Family.EXPONENTIAL: {"rate": 1.0},
    Family.WEIBULL: {"shape": 1.0, "scale": 1.0},
    Family.BETA: {"a": 9.0, "b": 1.0},
    Family.BIVARIATE_NORMAL: {"mean": (20.0, 15.0), "cov": ((1.0, 0.0), (0.0, 1.0))},
    Family.DIRICHLET: {"alpha": (2.0, 2.0)},
}


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """A named unimodal density with validated parameters and its closed-form mode.

    Build instances with :func:`make_distribution`; ``analytic_mode`` is
    derived from the parameters, and a supplied value is checked against it.
    """

    family: Family
    params: dict = field(default_factory=dict)
    analytic_mode: np.ndarray = None

    def __post_init__(self):
        try:
            family = Family(self.family)
        except ValueError:
            names = ", ".join(f.value for f in Family)
            raise ConfigError(f"unknown distribution {self.family!r}; expected one of {names}") from None
        object.__setattr__(self, "family", family)
        params = _validate(family, dict(self.params))
        object.__setattr__(self, "params", params)
        mode = _mode(family, params)
        if self.analytic_mode is not None:
            given = np.atleast_1d(np.asarray(self.analytic_mode, dtype=float))
            if given.shape != mode.shape or not np.allclose(given, mode, rtol=1e-12, atol=1e-12):
                raise ConfigError(f"analytic_mode {given.tolist()} does not match the closed-form mode {mode.tolist()}")
        object.__setattr__(self, "analytic_mode", mode)

    @property
    def dim(self) -> int:
        return self.analytic_mode.shape[0]

    @property
    def name(self) -> str:
        return self.family.value

    def to_dict(self) -> dict:
        params = {k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v) for k, v in self.params.items()}
        return {"family": self.family.value, "params": params, "analytic_mode": self.analytic_mode.tolist()}

    def __eq__(self, other):
        if not isinstance(other, DistributionSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.to_dict()["params"].items())
        return f"DistributionSpec({self.family.value}: {args})"


def make_distribution(name, **params) -> DistributionSpec:
    """Build a spec by family name; missing parameters take the preset values."""
    try:
        family = Family(name)
    except ValueError:
        names = ", ".join(f.value for f in Family)
        raise ConfigError(f"unknown distribution {name!r}; expected one of {names}") from None
    unknown = set(params) - set(_PARAM_NAMES[family])
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {family.value}: {sorted(unknown)}; "
                          f"expected {list(_PARAM_NAMES[family])}")
    merged = dict(_DEFAULTS[family])
    merged.update(params)
    return DistributionSpec(family, merged)


def _positive(params, key):
    v = float(params[key])
    if not math.isfinite(v) or v <= 0:
        raise ConfigError(f"parameter {key!r} must be positive, got {params[key]!r}")
    return v


def _validate(family, params):
    expected = _PARAM_NAMES[family]
    if set(params) != set(expected):
        raise ConfigError(f"{family.value} takes parameters {list(expected)}, got {sorted(params)}")
    if family is Family.NORMAL:
        mean = float(params["mean"])
        if not math.isfinite(mean):
            raise ConfigError("normal mean must be finite")
        return {"mean": mean, "sd": _positive(params, "sd")}
    if family is Family.GAMMA:
        shape, scale = _positive(params, "shape"), _positive(params, "scale")
        if shape < 1:
            raise ConfigError(f"gamma shape must be >= 1 for a bounded unimodal density, got {shape}")
        return {"shape": shape, "scale": scale}
    if family is Family.EXPONENTIAL:
        return {"rate": _positive(params, "rate")}
    if family is Family.WEIBULL:
        shape, scale = _positive(params, "shape"), _positive(params, "scale")
        if shape < 1:
            raise ConfigError(f"Weibull shape must be >= 1 for a bounded unimodal density, got {shape}")
        return {"shape": shape, "scale": scale}
    if family is Family.BETA:
        a, b = _positive(params, "a"), _positive(params, "b")
        if a < 1 or b < 1 or (a == 1 and b == 1):
            raise ConfigError(f"beta needs a >= 1, b >= 1 and not both 1 to have a unique mode, got a={a}, b={b}")
        return {"a": a, "b": b}
    if family is Family.BIVARIATE_NORMAL:
        mean = np.asarray(params["mean"], dtype=float)
        cov = np.asarray(params["cov"], dtype=float)
        if mean.shape != (2,) or not np.all(np.isfinite(mean)):
            raise ConfigError(f"bivariate normal mean must be 2 finite numbers, got {params['mean']!r}")
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise ConfigError(f"covariance must be a symmetric 2x2 matrix, got {params['cov']!r}")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ConfigError("covariance must be positive definite") from None
        return {"mean": tuple(mean.tolist()), "cov": tuple(map(tuple, cov.tolist()))}
    # Dirichlet
    alpha = np.asarray(params["alpha"], dtype=float)
    if alpha.ndim != 1 or alpha.shape[0] < 2:
        raise ConfigError(f"Dirichlet alpha must list at least two concentrations, got {params['alpha']!r}")
    if not np.all(alpha > 1):
        raise ConfigError(f"Dirichlet concentrations must all exceed 1 for an interior mode, got {alpha.tolist()}")
    return {"alpha": tuple(alpha.tolist())}


def _mode(family, p):
    if family is Family.NORMAL:
        return np.array([p["mean"]])
    if family is Family.GAMMA:
        return np.array([(p["shape"] - 1.0) * p["scale"]])
    if family is Family.EXPONENTIAL:
        return np.array([0.0])
    if family is Family.WEIBULL:
        k = p["shape"]
        return np.array([p["scale"] * ((k - 1.0) / k) ** (1.0 / k)])
    if family is Family.BETA:
        a, b = p["a"], p["b"]
        return np.array([(a - 1.0) / (a + b - 2.0)])
    if family is Family.BIVARIATE_NORMAL:
        return np.array(p["mean"], dtype=float)
    alpha = np.array(p["alpha"])
    return (alpha - 1.0) / (alpha.sum() - alpha.shape[0])


PRESETS = {
    "normal": make_distribution("normal"),
    "gamma": make_distribution("gamma"),
    "exponential": make_distribution("exponential"),
    "weibull": make_distribution("weibull"),
    "beta": make_distribution("beta"),
    "bivariate_normal": make_distribution("bivariate_normal"),
    "dirichlet": make_distribution("dirichlet"),
}


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator for an explicit seed in ``[0, 2**64)``."""
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= int(seed) < _SEED_LIMIT:
        raise ConfigError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_batch(spec: DistributionSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` i.i.d. samples as an array of shape ``(size, dim)``."""
    p = spec.params
    f = spec.family
    if f is Family.NORMAL:
        x = rng.normal(p["mean"], p["sd"], size)
    elif f is Family.GAMMA:
        x = rng.standard_gamma(p["shape"], size) * p["scale"]
    elif f is Family.EXPONENTIAL:
        x = -np.log1p(-rng.random(size)) / p["rate"]
    elif f is Family.WEIBULL:
        x = p["scale"] * (-np.log1p(-rng.random(size))) ** (1.0 / p["shape"])
    elif f is Family.BETA:
        x = rng.beta(p["a"], p["b"], size)
    elif f is Family.BIVARIATE_NORMAL:
        chol = np.linalg.cholesky(np.array(p["cov"]))
        return np.asarray(p["mean"]) + rng.standard_normal((size, 2)) @ chol.T
    else:
        alpha = p["alpha"]
        if len(alpha) == 2:
            b = rng.beta(alpha[0], alpha[1], size)
            return np.column_stack([b, 1.0 - b])
        return rng.dirichlet(alpha, size)
    return x.reshape(-1, 1)


def sample(spec: DistributionSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one sample as a vector of length ``dim``."""
    return sample_batch(spec, rng, 1)[0]


def sample_stream(spec: DistributionSpec, seed, n: int, block: int = STREAM_BLOCK):
    """Yield ``n`` samples from a fresh seeded generator in blocks of ``block`` rows."""
    rng = make_rng(seed)
    remaining = int(n)
    while remaining > 0:
        k = min(block, remaining)
        yield sample_batch(spec, rng, k)
        remaining -= k


def _frozen(spec):
    p = spec.params
    f = spec.family
    if f is Family.NORMAL:
        return stats.norm(p["mean"], p["sd"])
    if f is Family.GAMMA:
        return stats.gamma(p["shape"], scale=p["scale"])
    if f is Family.EXPONENTIAL:
        return stats.expon(scale=1.0 / p["rate"])
    if f is Family.WEIBULL:
        return stats.weibull_min(p["shape"], scale=p["scale"])
    if f is Family.BETA:
        return stats.beta(p["a"], p["b"])
    raise ConfigError(f"{f.value} is not univariate")


def density(spec: DistributionSpec, x) -> float:
    """Analytic density at ``x``; zero outside the closed support.

    The Dirichlet density is taken with respect to the first ``K - 1``
    coordinates on the simplex and is zero off the simplex.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (spec.dim,):
        raise ConfigError(f"expected a point of dimension {spec.dim}, got shape {x.shape}")
    f = spec.family
    if f is Family.BIVARIATE_NORMAL:
        return float(stats.multivariate_normal(spec.params["mean"], spec.params["cov"]).pdf(x))
    if f is Family.DIRICHLET:
        if np.any(x < 0) or abs(x.sum() - 1.0) > 1e-9:
            return 0.0
        alpha = spec.params["alpha"]
        if len(alpha) == 2:
            return univariate_pdf(make_distribution("beta", a=alpha[0], b=alpha[1]))(x[0])
        return float(stats.dirichlet(alpha).pdf(x / x.sum()))
    return univariate_pdf(spec)(x[0])


def univariate_pdf(spec: DistributionSpec):
    """Scalar closed-form pdf ``t -> f(t)`` of a univariate family, zero off the support."""
    p = spec.params
    f = spec.family
    if f is Family.NORMAL:
        mu, sd = p["mean"], p["sd"]
        c = 1.0 / (sd * math.sqrt(2.0 * math.pi))
        return lambda t: c * math.exp(-0.5 * ((t - mu) / sd) ** 2)
    if f is Family.GAMMA:
        k, th = p["shape"], p["scale"]
        logc = -math.lgamma(k) - k * math.log(th)
        if k == 1.0:
            return lambda t: math.exp(logc - t / th) if t >= 0 else 0.0
        return lambda t: math.exp(logc + (k - 1.0) * math.log(t) - t / th) if t > 0 else 0.0
    if f is Family.EXPONENTIAL:
        r = p["rate"]
        return lambda t: r * math.exp(-r * t) if t >= 0 else 0.0
    if f is Family.WEIBULL:
        k, lam = p["shape"], p["scale"]
        if k == 1.0:
            return lambda t: math.exp(-t / lam) / lam if t >= 0 else 0.0
        return lambda t: (k / lam) * (t / lam) ** (k - 1.0) * math.exp(-((t / lam) ** k)) if t > 0 else 0.0
    if f is Family.BETA:
        a, b = p["a"], p["b"]
        logc = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)

        def pdf(t):
            if not 0.0 <= t <= 1.0:
                return 0.0
            # a, b >= 1, so 0**0 = 1 gives the right boundary values
            return math.exp(logc) * t ** (a - 1.0) * (1.0 - t) ** (b - 1.0)
        return pdf
    raise ConfigError(f"{f.value} is not univariate")


def effective_support(spec: DistributionSpec, tail: float = 1e-12):
    """Per-coordinate ``(lo, hi)`` bounds holding all but ``tail`` of the mass.

    Returns arrays of length ``dim``. Bounded supports are returned exactly.
    """
    f = spec.family
    if f is Family.BIVARIATE_NORMAL:
        mean = np.array(spec.params["mean"])
        sd = np.sqrt(np.diag(np.array(spec.params["cov"])))
        z = stats.norm.isf(tail / 2)
        return mean - z * sd, mean + z * sd
    if f is Family.DIRICHLET:
        k = len(spec.params["alpha"])
        return np.zeros(k), np.ones(k)
    if f is Family.BETA:
        return np.array([0.0]), np.array([1.0])
    dist = _frozen(spec)
    lo = dist.ppf(tail / 2) if f is Family.NORMAL else 0.0
    return np.array([lo]), np.array([dist.isf(tail / 2)])
