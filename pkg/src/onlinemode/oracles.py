"""Brute-force reference computations for checking the streaming estimator.

Nothing here is used by the estimator itself. The smoothed density
``f_eps(m) = E[K_eps(m - X)]`` and its gradient are computed by quadrature:
adaptive ``scipy.integrate.quad`` for univariate targets and for the
two-component Dirichlet (whose mass lies on a segment), composite
Gauss-Legendre tensor rules for the bivariate normal. Oracles are meant for
``dim <= 2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln

from .distributions import DistributionSpec, Family, effective_support, make_distribution, univariate_pdf
from .exceptions import ConfigError, GridError, OracleError
from .kernels import KernelFamily, KernelSpec, kernel_grad, kernel_value, profile, profile_derivative

__all__ = [
    "GridSpec",
    "smoothed_density",
    "smoothed_grad",
    "grad_convolution",
    "regularized_objective",
    "regularized_argmax",
    "kde_value",
    "kde_argmax",
    "finite_difference_grad",
    "kernel_mass",
]

# Gaussian kernels are integrated over m +/- WINDOW * eps only.
WINDOW = 10.0
EPSREL = 1e-10
EPSABS = 1e-14
_SUPPORT_TAIL = 1e-14


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Axis-aligned search grid with ``points_per_dim`` points on each axis."""

    lo: np.ndarray
    hi: np.ndarray
    points_per_dim: int = 401

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ConfigError(f"grid bounds must be vectors of equal length, got {lo.shape} and {hi.shape}")
        if not np.all(lo < hi):
            raise ConfigError(f"grid needs lo < hi componentwise, got {lo.tolist()} and {hi.tolist()}")
        if int(self.points_per_dim) != self.points_per_dim or self.points_per_dim < 3:
            raise ConfigError(f"points_per_dim must be an integer >= 3, got {self.points_per_dim!r}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "points_per_dim", int(self.points_per_dim))

    @classmethod
    def around(cls, center, half_width=10.0, points_per_dim=None):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if points_per_dim is None:
            points_per_dim = 401 if center.shape[0] == 1 else 21
        return cls(center - half_width, center + half_width, points_per_dim)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / (self.points_per_dim - 1)

    def axes(self):
        return [np.linspace(a, b, self.points_per_dim) for a, b in zip(self.lo, self.hi)]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)


def _check_dims(spec, kernel, m):
    if kernel.dim != spec.dim:
        raise ConfigError(f"kernel dimension {kernel.dim} does not match distribution dimension {spec.dim}")
    m = np.atleast_1d(np.asarray(m, dtype=float))
    if m.shape != (spec.dim,):
        raise ConfigError(f"expected a point of dimension {spec.dim}, got shape {m.shape}")
    return m


def _quad(fun, a, b, points=None, what="integral"):
    if not b > a:
        return 0.0
    pts = None
    if points:
        pts = sorted({p for p in points if a < p < b}) or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fun, a, b, points=pts, epsabs=EPSABS, epsrel=EPSREL, limit=2000)
        except integrate.IntegrationWarning as exc:
            raise OracleError(f"quadrature of {what} over [{a:.6g}, {b:.6g}] did not converge: {exc}") from None
    if abs(val) > 0 and err > 1e-6 * abs(val) + 1e-12:
        raise OracleError(f"quadrature of {what} over [{a:.6g}, {b:.6g}] has error estimate {err:.3g} for value {val:.6g}")
    return val


def _interval(spec, kernel, m):
    lo, hi = effective_support(spec, _SUPPORT_TAIL)
    lo, hi = float(lo[0]), float(hi[0])
    if kernel.family in (KernelFamily.GAUSSIAN, KernelFamily.MULTIVARIATE_GAUSSIAN):
        lo = max(lo, m - WINDOW * kernel.epsilon)
        hi = min(hi, m + WINDOW * kernel.epsilon)
    return lo, hi


def _breakpoints(spec, kernel, m):
    eps = kernel.epsilon
    return [m - eps, m, m + eps, float(spec.analytic_mode[0])]


def _gauss_legendre(a, b, width, order=10):
    """Composite Gauss-Legendre nodes/weights on [a, b] with panels no wider than ``width``."""
    panels = max(1, int(math.ceil((b - a) / width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _bivariate_rule(spec, kernel, m):
    lo, hi = effective_support(spec, _SUPPORT_TAIL)
    eps = kernel.epsilon
    lo = np.maximum(lo, m - WINDOW * eps)
    hi = np.minimum(hi, m + WINDOW * eps)
    if np.any(hi <= lo):
        return None
    sd = np.sqrt(np.diag(np.array(spec.params["cov"])))
    width = min(eps, float(sd.min()))
    (x0, w0), (x1, w1) = (_gauss_legendre(lo[j], hi[j], width) for j in range(2))
    t = np.stack(np.meshgrid(x0, x1, indexing="ij"), axis=-1).reshape(-1, 2)
    w = np.outer(w0, w1).ravel()
    mean = np.array(spec.params["mean"])
    cov = np.array(spec.params["cov"])
    prec = np.linalg.inv(cov)
    z = t - mean
    q = np.einsum("ij,jk,ik->i", z, prec, z)
    f = np.exp(-0.5 * q) / (2.0 * np.pi * math.sqrt(np.linalg.det(cov)))
    return t, w * f, z, prec


def _dirichlet_pair(spec):
    alpha = spec.params["alpha"]
    if len(alpha) != 2:
        raise OracleError("oracles support the two-component Dirichlet only")
    return univariate_pdf(make_distribution("beta", a=alpha[0], b=alpha[1]))


def smoothed_density(spec: DistributionSpec, kernel: KernelSpec, m) -> float:
    """``f_eps(m) = integral of f(t) K_eps(m - t) dt`` by quadrature."""
    m = _check_dims(spec, kernel, m)
    if spec.family is Family.BIVARIATE_NORMAL:
        rule = _bivariate_rule(spec, kernel, m)
        if rule is None:
            return 0.0
        t, wf, _, _ = rule
        return float(np.dot(wf, kernel_value(kernel, m - t)))
    if spec.family is Family.DIRICHLET:
        pdf = _dirichlet_pair(spec)
        return _quad(lambda b: pdf(b) * kernel_value(kernel, m - np.array([b, 1.0 - b])), 0.0, 1.0,
                     points=[0.5 * (1.0 + m[0] - m[1])], what="smoothed density")
    x = float(m[0])
    pdf = univariate_pdf(spec)
    eps = kernel.epsilon
    fam = kernel.family
    lo, hi = _interval(spec, kernel, x)
    return _quad(lambda t: pdf(t) * float(profile(fam, (x - t) / eps)) / eps, lo, hi,
                 points=_breakpoints(spec, kernel, x), what="smoothed density")


def smoothed_grad(spec: DistributionSpec, kernel: KernelSpec, m) -> np.ndarray:
    """``grad f_eps(m) = integral of grad K_eps(m - t) f(t) dt``, i.e. ``E[grad K_eps(m - X)]``."""
    m = _check_dims(spec, kernel, m)
    if spec.family is Family.BIVARIATE_NORMAL:
        rule = _bivariate_rule(spec, kernel, m)
        if rule is None:
            return np.zeros(2)
        t, wf, _, _ = rule
        return wf @ kernel_grad(kernel, m - t)
    if spec.family is Family.DIRICHLET:
        pdf = _dirichlet_pair(spec)
        split = [0.5 * (1.0 + m[0] - m[1])]
        return np.array([
            _quad(lambda b, j=j: pdf(b) * kernel_grad(kernel, m - np.array([b, 1.0 - b]))[j], 0.0, 1.0,
                  points=split, what="smoothed gradient")
            for j in range(2)
        ])
    x = float(m[0])
    pdf = univariate_pdf(spec)
    eps = kernel.epsilon
    fam = kernel.family
    lo, hi = _interval(spec, kernel, x)
    g = _quad(lambda t: pdf(t) * float(profile_derivative(fam, (x - t) / eps)) / (eps * eps), lo, hi,
              points=_breakpoints(spec, kernel, x), what="smoothed gradient")
    return np.array([g])


def grad_convolution(spec: DistributionSpec, kernel: KernelSpec, m) -> np.ndarray:
    """``integral of grad f(m - t) K_eps(t) dt`` using the analytic density gradient.

    Only normal targets have a density gradient here. By symmetry of
    differentiation under convolution this equals :func:`smoothed_grad`.
    """
    m = _check_dims(spec, kernel, m)
    if spec.family is Family.NORMAL:
        mu, sd = spec.params["mean"], spec.params["sd"]
        pdf = univariate_pdf(spec)
        x = float(m[0])
        eps = kernel.epsilon
        fam = kernel.family

        def integrand(t):
            y = x - t
            return -(y - mu) / (sd * sd) * pdf(y) * float(profile(fam, t / eps)) / eps

        lo, hi = effective_support(spec, _SUPPORT_TAIL)
        a, b = x - float(hi[0]), x - float(lo[0])
        if fam is KernelFamily.GAUSSIAN:
            a, b = max(a, -WINDOW * eps), min(b, WINDOW * eps)
        return np.array([_quad(integrand, a, b, points=[0.0, x - mu - sd, x - mu, x - mu + sd],
                               what="convolved density gradient")])
    if spec.family is Family.BIVARIATE_NORMAL:
        # substitute s = m - t so the rule is built around the density
        rule = _bivariate_rule(spec, kernel, m)
        if rule is None:
            return np.zeros(2)
        s, wf, z, prec = rule
        grad_f_over_f = -(z @ prec.T)
        return (wf * kernel_value(kernel, m - s)) @ grad_f_over_f
    raise OracleError(f"no analytic density gradient for {spec.family.value}")


def regularized_objective(spec: DistributionSpec, kernel: KernelSpec, lam: float, m) -> float:
    """``f_eps(m) - lam/2 * |m|^2``."""
    m = np.atleast_1d(np.asarray(m, dtype=float))
    return smoothed_density(spec, kernel, m) - 0.5 * lam * float(m @ m)


def _grid_argmax(values, grid, what):
    shape = (grid.points_per_dim,) * grid.dim
    idx = np.unravel_index(int(np.argmax(values)), shape)
    if any(i == 0 or i == grid.points_per_dim - 1 for i in idx):
        raise GridError(f"{what} attained on the grid boundary at index {idx}; widen the grid "
                        f"[{grid.lo.tolist()}, {grid.hi.tolist()}]")
    return np.array([ax[i] for ax, i in zip(grid.axes(), idx)])


def _refine(objective, start, grid, tol=1e-9, max_sweeps=200):
    """Coordinate-wise bounded Brent refinement within one grid cell of ``start``."""
    x = start.copy()
    h = grid.spacing
    for _ in range(max_sweeps):
        moved = 0.0
        for j in range(x.shape[0]):
            def f(v, j=j):
                y = x.copy()
                y[j] = v
                return -objective(y)
            res = optimize.minimize_scalar(f, bounds=(x[j] - h[j], x[j] + h[j]), method="bounded",
                                           options={"xatol": tol})
            moved = max(moved, abs(res.x - x[j]))
            x[j] = res.x
        if x.shape[0] == 1 or moved < tol:
            break
    return x


def regularized_argmax(spec: DistributionSpec, kernel: KernelSpec, lam: float, grid: GridSpec | None = None):
    """Maximise ``f_eps(m) - lam/2 |m|^2`` on a grid, then refine to well below ``1e-4``.

    The default grid spans ``analytic_mode +/- 10`` with 401 points (21 per
    axis in two dimensions).
    """
    if grid is None:
        grid = GridSpec.around(spec.analytic_mode)
    if grid.dim != spec.dim:
        raise ConfigError(f"grid dimension {grid.dim} does not match distribution dimension {spec.dim}")
    objective = lambda y: regularized_objective(spec, kernel, lam, y)  # noqa: E731
    values = np.array([objective(pt) for pt in grid.points()])
    start = _grid_argmax(values, grid, "regularized smoothed density")
    return _refine(objective, start, grid)


def kde_value(samples, kernel: KernelSpec, points, chunk: int = 1 << 22) -> np.ndarray:
    """Kernel density estimate ``(1/n) sum_i K_eps(m - X_i)`` at each row of ``points``."""
    samples = _as_samples(samples, kernel.dim)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if kernel.dim == 1 and points.shape[0] == 1 and points.shape[1] != 1:
        points = points.T
    out = np.zeros(points.shape[0])
    step = max(1, chunk // max(1, points.shape[0]))
    for start in range(0, samples.shape[0], step):
        block = samples[start:start + step]
        diff = points[:, None, :] - block[None, :, :]
        out += kernel_value(kernel, diff).sum(axis=1)
    return out / samples.shape[0]


def _as_samples(samples, p):
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1 and p == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[1] != p or arr.shape[0] == 0:
        raise ConfigError(f"samples must be a non-empty array with {p} column(s), got shape {arr.shape}")
    return arr


def kde_argmax(samples, kernel: KernelSpec, grid: GridSpec | None = None):
    """Grid argmax of the batch kernel density estimate, refined like :func:`regularized_argmax`.

    The default grid spans the sample range padded by ``3 * epsilon`` with 201
    points (41 per axis in two dimensions).
    """
    samples = _as_samples(samples, kernel.dim)
    if grid is None:
        pad = 3.0 * kernel.epsilon
        grid = GridSpec(samples.min(axis=0) - pad, samples.max(axis=0) + pad,
                        201 if kernel.dim == 1 else 41)
    values = kde_value(samples, kernel, grid.points())
    start = _grid_argmax(values, grid, "kernel density estimate")
    return _refine(lambda y: float(kde_value(samples, kernel, y[None, :])[0]), start, grid)


def finite_difference_grad(fun, x, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = np.empty_like(x)
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def kernel_mass(kernel: KernelSpec, inner: float = 0.0, outer: float | None = None) -> float:
    """``integral of |K_eps(x)|`` over the shell ``inner < |x| < outer``.

    Univariate kernels use a composite Gauss-Legendre rule with panels of a
    quarter period of the Fejer oscillation, truncated at ``1e5 * epsilon`` by
    default. The multivariate Gaussian is reduced to a radial integral.
    """
    eps = kernel.epsilon
    if kernel.family is KernelFamily.MULTIVARIATE_GAUSSIAN:
        p = kernel.dim
        outer = 40.0 * eps if outer is None else outer
        if outer <= inner:
            return 0.0
        r, w = _gauss_legendre(inner, outer, 0.5 * eps)
        sphere = 2.0 * math.pi ** (p / 2.0) / math.exp(gammaln(p / 2.0))
        dens = (2.0 * np.pi) ** (-0.5 * p) * np.exp(-0.5 * (r / eps) ** 2) / eps**p
        return float(np.dot(w, sphere * r ** (p - 1) * dens))
    outer = 1e5 * eps if outer is None else outer
    if outer <= inner:
        return 0.0
    u, w = _gauss_legendre(inner, outer, 0.5 * math.pi * eps)
    return 2.0 * float(np.dot(w, np.abs(profile(kernel.family, u / eps)) / eps))
