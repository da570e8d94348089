"""TOML run configuration with command-line overrides.

Example document (every key optional; defaults shown)::

    [kernel]
    family = "gaussian"
    epsilon = 1.0

    [estimator]
    lambda = 1e-5
    warmup = 1000

    [estimator.schedule]
    form = "harmonic"      # or "polynomial": a0 / (n + n0)**gamma
    a0 = 1.0
    n0 = 0
    gamma = 1.0

    [experiment]
    distribution = "normal"
    params = { mean = 10.0, sd = 1.0 }
    n_samples = 1000000
    n_runs = 100
    base_seed = 0
    initial_points = [5.0, 10.0, 15.0]

    [output]
    dir = "."
    trace_every = 1000

Unknown sections or keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .distributions import DistributionSpec, make_distribution
from .estimator import EstimatorConfig, StepSchedule
from .exceptions import ConfigError
from .kernels import KernelSpec

_SCHEMA = {
    "kernel": {"family", "epsilon"},
    "estimator": {"lambda", "warmup", "schedule"},
    "experiment": {"distribution", "params", "n_samples", "n_runs", "base_seed", "initial_points"},
    "output": {"dir", "trace_every"},
}
_SCHEDULE_KEYS = {"form", "a0", "n0", "gamma"}


@dataclass
class Settings:
    """Fully resolved settings for one CLI invocation."""

    kernel: str = "gaussian"
    epsilon: float = 1.0
    lam: float = 1e-5
    warmup: int = 1000
    schedule: StepSchedule = field(default_factory=StepSchedule)
    distribution: str = "normal"
    params: dict = field(default_factory=dict)
    n_samples: int = 1_000_000
    n_runs: int = 100
    base_seed: int = 0
    initial_points: list | None = None
    out_dir: str = "."
    trace_every: int | None = None

    def dist(self) -> DistributionSpec:
        return make_distribution(self.distribution, **self.params)

    def estimator_config(self, dim: int) -> EstimatorConfig:
        return EstimatorConfig(KernelSpec.for_dim(self.kernel, self.epsilon, dim), self.lam,
                               self.schedule, self.warmup)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["schedule"] = {"form": self.schedule.form.value, "a0": self.schedule.a0,
                         "n0": self.schedule.n0, "gamma": self.schedule.gamma}
        d["lambda"] = d.pop("lam")
        return d


def load_document(path) -> dict:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    validate_document(doc)
    return doc


def validate_document(doc: dict):
    for section, body in doc.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        unknown = set(body) - _SCHEMA[section]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {sorted(unknown)}")
    sched = doc.get("estimator", {}).get("schedule", {})
    if not isinstance(sched, dict):
        raise ConfigError("[estimator.schedule] must be a table")
    unknown = set(sched) - _SCHEDULE_KEYS
    if unknown:
        raise ConfigError(f"unknown key(s) in [estimator.schedule]: {sorted(unknown)}")


def _points(raw):
    if raw is None:
        return None
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError("initial_points must be a non-empty list")
    return [np.atleast_1d(np.asarray(p, dtype=float)).tolist() for p in raw]


def resolve(doc: dict | None = None, **overrides) -> Settings:
    """Merge a validated document with overrides (``None`` values are ignored)."""
    doc = doc or {}
    validate_document(doc)
    k, e, x, o = (doc.get(s, {}) for s in ("kernel", "estimator", "experiment", "output"))
    sched = dict(e.get("schedule", {}))
    flat = {
        "kernel": k.get("family"),
        "epsilon": k.get("epsilon"),
        "lam": e.get("lambda"),
        "warmup": e.get("warmup"),
        "distribution": x.get("distribution"),
        "params": x.get("params"),
        "n_samples": x.get("n_samples"),
        "n_runs": x.get("n_runs"),
        "base_seed": x.get("base_seed"),
        "initial_points": x.get("initial_points"),
        "out_dir": o.get("dir"),
        "trace_every": o.get("trace_every"),
    }
    for key in ("form", "a0", "n0", "gamma"):
        if overrides.get(key) is not None:
            sched[key] = overrides.pop(key)
        else:
            overrides.pop(key, None)
    for key, value in overrides.items():
        if key not in flat:
            raise ConfigError(f"unknown setting {key!r}")
        if value is None:
            continue
        if key == "params" and flat["params"]:
            value = {**flat["params"], **value}
        flat[key] = value

    settings = Settings(**{key: v for key, v in flat.items() if v is not None})
    try:
        settings.schedule = StepSchedule(**sched)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    settings.initial_points = _points(settings.initial_points)
    settings.params = dict(settings.params)
    # validate eagerly so a bad value fails before any work starts
    dist = settings.dist()
    settings.params = dist.to_dict()["params"]
    settings.estimator_config(dist.dim)
    for key in ("n_samples", "n_runs", "base_seed"):
        value = getattr(settings, key)
        if isinstance(value, bool) or int(value) != value or value < 0:
            raise ConfigError(f"{key} must be a non-negative integer, got {value!r}")
    if settings.trace_every is not None and (int(settings.trace_every) != settings.trace_every
                                             or settings.trace_every < 1):
        raise ConfigError(f"trace_every must be a positive integer, got {settings.trace_every!r}")
    return settings
