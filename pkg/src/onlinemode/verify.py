"""Oracle consistency checks reported by ``onlinemode verify``."""

from __future__ import annotations

import numpy as np

from . import oracles
from .distributions import DistributionSpec, Family, density
from .kernels import KernelSpec, kernel_grad, kernel_value

_CONTINUOUS_AT_MODE = {Family.NORMAL, Family.GAMMA, Family.BIVARIATE_NORMAL}


def _check(name, value, tolerance):
    value = float(value)
    return {"name": name, "value": value, "tolerance": tolerance, "passed": bool(value < tolerance)}


def _probe_points(spec: DistributionSpec, kernel: KernelSpec):
    mode = spec.analytic_mode
    offsets = np.array([-0.7, -0.3, 0.4, 0.9]) * kernel.epsilon
    return [mode + d for d in offsets]


def run_checks(spec: DistributionSpec, kernel: KernelSpec, lam: float) -> list[dict]:
    """Return a list of ``{name, value, tolerance, passed}`` records."""
    checks = []

    checks.append(_check("kernel mass |1 - integral K_eps|", abs(1.0 - oracles.kernel_mass(kernel)), 1e-4))

    rng = np.random.default_rng(0)
    pts = rng.uniform(-4, 4, size=(100, kernel.dim)) * kernel.epsilon
    worst = 0.0
    for x in pts:
        fd = oracles.finite_difference_grad(lambda y: kernel_value(kernel, y), x)
        g = kernel_grad(kernel, x)
        worst = max(worst, float(np.max(np.abs(g - fd) / np.maximum(np.abs(g), 1e-4))))
    checks.append(_check("kernel gradient vs finite differences (relative)", worst, 1e-5))

    worst = 0.0
    for m in _probe_points(spec, kernel):
        g = oracles.smoothed_grad(spec, kernel, m)
        fd = oracles.finite_difference_grad(lambda y: oracles.smoothed_density(spec, kernel, y), m, h=1e-4)
        worst = max(worst, float(np.max(np.abs(g - fd) / np.maximum(np.abs(g), 1e-3))))
    checks.append(_check("smoothed gradient vs finite differences (relative)", worst, 1e-4))

    if spec.family in (Family.NORMAL, Family.BIVARIATE_NORMAL):
        worst = max(
            float(np.max(np.abs(oracles.smoothed_grad(spec, kernel, m) - oracles.grad_convolution(spec, kernel, m))))
            for m in _probe_points(spec, kernel)
        )
        checks.append(_check("gradient moves through the convolution", worst, 1e-6))

    if spec.family in _CONTINUOUS_AT_MODE:
        narrow = KernelSpec(kernel.family, 0.01, kernel.dim)
        gap = abs(oracles.smoothed_density(spec, narrow, spec.analytic_mode) - density(spec, spec.analytic_mode))
        checks.append(_check("identity approximation at the mode, eps = 0.01", gap, 1e-3))

    if spec.dim == 1 or spec.family is Family.BIVARIATE_NORMAL:
        m_hat = oracles.regularized_argmax(spec, kernel, lam)
        resid = np.linalg.norm(oracles.smoothed_grad(spec, kernel, m_hat) - lam * m_hat)
        checks.append(_check("stationarity of the regularized argmax", resid, 1e-6))
    return checks
