"""Smoothing kernels, their bandwidth-scaled versions and analytic gradients.

Every family integrates to one. For bandwidth ``epsilon`` and dimension ``p``
the scaled kernel is ``K_eps(x) = epsilon**-p * K(x / epsilon)``.

=====================  ==========================================
family                 unscaled kernel ``K(u)``
=====================  ==========================================
gaussian               ``exp(-u**2 / 2) / sqrt(2 pi)``
cauchy                 ``1 / (pi (1 + u**2))``
fejer                  ``sin(u)**2 / (pi u**2)``
multivariate_gaussian  ``(2 pi)**(-p/2) exp(-u.u / 2)``
=====================  ==========================================

All functions accept a single point of shape ``(dim,)`` (a bare scalar is
accepted when ``dim == 1``) or a stack of points of shape ``(..., dim)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import ConfigError

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "kernel_value",
    "kernel_grad",
    "profile",
    "profile_derivative",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Below this |u| the Fejer kernel and its derivative use a Taylor series;
# the closed forms lose digits to cancellation near the removable singularity.
FEJER_SERIES_CUTOFF = 1e-2


class KernelFamily(str, Enum):
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"
    FEJER = "fejer"
    MULTIVARIATE_GAUSSIAN = "multivariate_gaussian"

    @property
    def univariate(self) -> bool:
        return self is not KernelFamily.MULTIVARIATE_GAUSSIAN


# integer codes understood by the compiled update loop
FAMILY_CODES = {
    KernelFamily.GAUSSIAN: 0,
    KernelFamily.CAUCHY: 1,
    KernelFamily.FEJER: 2,
    KernelFamily.MULTIVARIATE_GAUSSIAN: 3,
}


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family together with its bandwidth and dimension.

    Parameters
    ----------
    family : KernelFamily or str
        One of ``gaussian``, ``cauchy``, ``fejer``, ``multivariate_gaussian``.
    epsilon : float
        Bandwidth, strictly positive.
    dim : int
        Dimension of the points the kernel is evaluated at. The three
        univariate families require ``dim == 1``.
    """

    family: KernelFamily = KernelFamily.GAUSSIAN
    epsilon: float = 1.0
    dim: int = 1

    def __post_init__(self):
        try:
            family = KernelFamily(self.family)
        except ValueError:
            names = ", ".join(f.value for f in KernelFamily)
            raise ConfigError(f"unknown kernel family {self.family!r}; expected one of {names}") from None
        object.__setattr__(self, "family", family)

        epsilon = float(self.epsilon)
        if not math.isfinite(epsilon) or epsilon <= 0.0:
            raise ConfigError(f"kernel bandwidth must be a positive finite number, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", epsilon)

        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError(f"kernel dimension must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        if family.univariate and self.dim != 1:
            raise ConfigError(f"the {family.value} kernel is univariate; got dim={self.dim}")

    @classmethod
    def for_dim(cls, family, epsilon: float, dim: int) -> "KernelSpec":
        """Build a spec, promoting ``gaussian`` to its multivariate form when ``dim > 1``."""
        family = KernelFamily(family)
        if family is KernelFamily.GAUSSIAN and dim > 1:
            family = KernelFamily.MULTIVARIATE_GAUSSIAN
        return cls(family, epsilon, dim)

    @property
    def code(self) -> int:
        return FAMILY_CODES[self.family]


def profile(family, u):
    """Unscaled univariate kernel ``K(u)``, elementwise."""
    family = KernelFamily(family)
    u = np.asarray(u, dtype=float)
    if family in (KernelFamily.GAUSSIAN, KernelFamily.MULTIVARIATE_GAUSSIAN):
        return _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    if family is KernelFamily.CAUCHY:
        return 1.0 / (np.pi * (1.0 + u * u))
    return _fejer(u)


def profile_derivative(family, u):
    """Derivative ``K'(u)`` of the unscaled univariate kernel, elementwise."""
    family = KernelFamily(family)
    u = np.asarray(u, dtype=float)
    if family in (KernelFamily.GAUSSIAN, KernelFamily.MULTIVARIATE_GAUSSIAN):
        return -u * _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    if family is KernelFamily.CAUCHY:
        w = 1.0 + u * u
        return -2.0 * u / (np.pi * w * w)
    return _fejer_derivative(u)


def _fejer(u):
    small = np.abs(u) < FEJER_SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    s = np.sin(safe)
    closed = s * s / (np.pi * safe * safe)
    u2 = u * u
    # sin(u)^2/u^2 = 1 - u^2/3 + 2u^4/45 - u^6/315 + ...
    series = (1.0 - u2 / 3.0 + 2.0 * u2 * u2 / 45.0 - u2 * u2 * u2 / 315.0) / np.pi
    return np.where(small, series, closed)


def _fejer_derivative(u):
    small = np.abs(u) < FEJER_SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    closed = (safe * np.sin(2.0 * safe) - 2.0 * np.sin(safe) ** 2) / (np.pi * safe**3)
    u2 = u * u
    series = u * (-2.0 / 3.0 + 8.0 * u2 / 45.0 - 6.0 * u2 * u2 / 315.0 + 16.0 * u2 * u2 * u2 / 14175.0) / np.pi
    return np.where(small, series, closed)


def _as_points(spec: KernelSpec, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        if spec.dim != 1:
            raise ConfigError(f"expected a point of dimension {spec.dim}, got a scalar")
        return x.reshape(1), True
    if x.shape[-1] != spec.dim:
        raise ConfigError(f"expected points of dimension {spec.dim}, got shape {x.shape}")
    return x, x.ndim == 1


def kernel_value(spec: KernelSpec, x):
    """Evaluate the scaled kernel ``K_eps(x)``.

    Returns a float for a single point and an array of shape ``x.shape[:-1]``
    for a stack of points.
    """
    x, single = _as_points(spec, x)
    eps = spec.epsilon
    if spec.family is KernelFamily.MULTIVARIATE_GAUSSIAN:
        p = spec.dim
        r2 = np.sum(x * x, axis=-1) / (eps * eps)
        out = (2.0 * np.pi) ** (-0.5 * p) * np.exp(-0.5 * r2) / eps**p
    else:
        out = profile(spec.family, x[..., 0] / eps) / eps
    return float(out) if single else out


def kernel_grad(spec: KernelSpec, x):
    """Analytic gradient of ``K_eps`` at ``x``; same shape as the input points.

    For the Gaussian families ``grad K_eps(x) = -x / eps**(p+2) * K(x / eps)``.
    """
    x, single = _as_points(spec, x)
    eps = spec.epsilon
    if spec.family is KernelFamily.MULTIVARIATE_GAUSSIAN:
        p = spec.dim
        r2 = np.sum(x * x, axis=-1, keepdims=True) / (eps * eps)
        out = -x / eps ** (p + 2) * ((2.0 * np.pi) ** (-0.5 * p) * np.exp(-0.5 * r2))
    else:
        out = profile_derivative(spec.family, x / eps) / (eps * eps)
    return out.copy() if single else out
