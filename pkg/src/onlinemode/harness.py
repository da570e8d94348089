"""Monte Carlo replication of the estimator over seeded sample streams.

``replicate`` reruns the estimator on ``n_runs`` independent streams (run ``i``
seeded with ``base_seed + i``) and summarises the final estimates.
``trace_from_initials`` records convergence paths from fixed starting
points. Runs are independent, so they may execute on a thread pool; the
compiled update loop releases the GIL and results are gathered in run order,
so the output does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import DistributionSpec, sample_stream
from .estimator import EstimatorConfig, run_blocks
from .exceptions import ConfigError, DataError, DivergenceError

__all__ = [
    "ExperimentPlan",
    "ReplicationReport",
    "LabeledTrajectory",
    "replicate",
    "trace_from_initials",
    "write_report_json",
    "write_trace_csv",
    "config_to_dict",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ExperimentPlan:
    dist: DistributionSpec
    config: EstimatorConfig
    n_samples: int
    n_runs: int = 1
    base_seed: int = 0
    initial_points: list | None = None

    def __post_init__(self):
        if self.config.dim != self.dist.dim:
            raise ConfigError(f"kernel dimension {self.config.dim} does not match "
                              f"the {self.dist.name} dimension {self.dist.dim}")
        if int(self.n_runs) != self.n_runs or self.n_runs < 1:
            raise ConfigError(f"n_runs must be a positive integer, got {self.n_runs!r}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 0:
            raise ConfigError(f"n_samples must be a non-negative integer, got {self.n_samples!r}")
        if self.n_samples < max(self.config.warmup, 1) and not self.initial_points:
            raise ConfigError(f"n_samples ({self.n_samples}) must be positive and cover the warm-up "
                              f"({self.config.warmup} samples)")
        if int(self.base_seed) != self.base_seed or not 0 <= self.base_seed < 2**64 - self.n_runs:
            raise ConfigError(f"base_seed must be an integer in [0, 2**64 - n_runs), got {self.base_seed!r}")
        if self.initial_points:
            if self.config.warmup != 0:
                raise ConfigError("initial_points require warmup = 0")
            points = [np.atleast_1d(np.asarray(p, dtype=float)) for p in self.initial_points]
            for p in points:
                if p.shape != (self.dist.dim,):
                    raise ConfigError(f"initial point {p.tolist()} does not have dimension {self.dist.dim}")
            object.__setattr__(self, "initial_points", points)
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "n_runs", int(self.n_runs))
        object.__setattr__(self, "base_seed", int(self.base_seed))

    def seed(self, run: int) -> int:
        return self.base_seed + run

    def to_dict(self) -> dict:
        return {
            "distribution": self.dist.to_dict(),
            "estimator": config_to_dict(self.config),
            "n_samples": self.n_samples,
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
            "initial_points": None if not self.initial_points else [p.tolist() for p in self.initial_points],
        }


def config_to_dict(config: EstimatorConfig) -> dict:
    s = config.schedule
    return {
        "kernel": {"family": config.kernel.family.value, "epsilon": config.kernel.epsilon, "dim": config.kernel.dim},
        "lambda": config.lam,
        "schedule": {"form": s.form.value, "a0": s.a0, "n0": s.n0, "gamma": s.gamma},
        "warmup": config.warmup,
    }


@dataclass(eq=False)
class ReplicationReport:
    """Final estimates of every run with their componentwise mean and sample std.

    ``wall_time_s`` is informational and is left out of :meth:`to_dict` so
    that serialised reports are reproducible byte for byte.
    """

    per_run_final: np.ndarray
    mean_estimate: np.ndarray
    std_estimate: np.ndarray
    analytic_mode: np.ndarray
    seeds: list = field(default_factory=list)
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "per_run_final": self.per_run_final.tolist(),
            "mean_estimate": self.mean_estimate.tolist(),
            "std_estimate": self.std_estimate.tolist(),
            "analytic_mode": self.analytic_mode.tolist(),
            "seeds": list(self.seeds),
        }


def _single_run(plan: ExperimentPlan, run: int, m0=None, trace_every=None):
    seed = plan.seed(run)
    blocks = sample_stream(plan.dist, seed, plan.n_samples)
    try:
        return run_blocks(plan.config, blocks, trace_every=trace_every, m0=m0)
    except (DivergenceError, DataError) as exc:
        raise type(exc)(f"run {run} (seed {seed}): {exc}", index=exc.index) from exc


def replicate(plan: ExperimentPlan, n_jobs: int = 1) -> ReplicationReport:
    """Run ``plan.n_runs`` independent streams and aggregate the final estimates."""
    if plan.config.warmup == 0:
        raise ConfigError("replicate starts every run from its warm-up average; set warmup > 0")
    start = time.perf_counter()
    runs = range(plan.n_runs)
    if n_jobs is None or n_jobs <= 1:
        finals = [_single_run(plan, i).final for i in runs]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            finals = [r.final for r in pool.map(lambda i: _single_run(plan, i), runs)]
    per_run = np.vstack(finals)
    std = per_run.std(axis=0, ddof=1) if plan.n_runs > 1 else np.zeros(plan.dist.dim)
    elapsed = time.perf_counter() - start
    logger.info("replicated %d runs of %s in %.2fs", plan.n_runs, plan.dist.name, elapsed)
    return ReplicationReport(
        per_run_final=per_run,
        mean_estimate=per_run.mean(axis=0),
        std_estimate=std,
        analytic_mode=plan.dist.analytic_mode.copy(),
        seeds=[plan.seed(i) for i in runs],
        wall_time_s=elapsed,
    )


@dataclass(eq=False)
class LabeledTrajectory:
    label: str
    seed: int
    n: np.ndarray
    m: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.m[-1]


def _label(point) -> str:
    return "m0=" + ";".join(repr(float(v)) for v in point)


def trace_from_initials(plan: ExperimentPlan, trace_every: int = 1) -> list:
    """Record the estimate path from each of ``plan.initial_points``.

    Trajectory ``i`` uses the stream seeded with ``base_seed + i`` and starts
    with the entry ``(0, m0)``; every sample is an update since warm-up is off.
    """
    if not plan.initial_points:
        raise ConfigError("trace_from_initials needs plan.initial_points")
    out = []
    for i, point in enumerate(plan.initial_points):
        result = _single_run(plan, i, m0=point, trace_every=trace_every)
        ns = [0] + [n for n, _ in result.trajectory]
        ms = [point] + [m for _, m in result.trajectory]
        out.append(LabeledTrajectory(_label(point), plan.seed(i), np.array(ns, dtype=np.int64), np.vstack(ms)))
    return out


def write_report_json(path, plan: ExperimentPlan, report: ReplicationReport, extra: dict | None = None):
    doc = {"plan": plan.to_dict(), "report": report.to_dict()}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")


def write_trace_csv(path, trajectories, config_echo: dict | None = None):
    """Write ``label,n,m_1,...,m_p`` rows; an optional leading ``#`` line echoes the config."""
    p = trajectories[0].m.shape[1]
    with open(path, "w", newline="") as fh:
        if config_echo is not None:
            fh.write("# config: " + json.dumps(config_echo, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["label", "n"] + [f"m_{j + 1}" for j in range(p)])
        for tr in trajectories:
            for n, m in zip(tr.n, tr.m):
                writer.writerow([tr.label, int(n)] + [repr(float(v)) for v in m])
