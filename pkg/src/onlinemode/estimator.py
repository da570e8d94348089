"""Streaming mode estimation by regularized kernel-gradient ascent.

Each sample ``X`` moves the estimate along a noisy gradient of the smoothed
density minus a small ridge penalty::

    d     = grad K_eps(m_n - X) - lam * m_n
    m_n+1 = m_n + a_n+1 * d

The first ``warmup`` samples are averaged into the starting point and do not
drive any update. Nothing but the current estimate and two counters is kept,
so memory use is independent of the stream length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple

import numpy as np

from . import _engine
from .exceptions import ConfigError, DataError, DivergenceError
from .kernels import KernelSpec

__all__ = [
    "ScheduleForm",
    "StepSchedule",
    "EstimatorConfig",
    "Phase",
    "EstimatorState",
    "StreamResult",
    "step_size",
    "init_state",
    "observe",
    "run_stream",
    "run_blocks",
]


class ScheduleForm(str, Enum):
    HARMONIC = "harmonic"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``a_n``.

    ``harmonic`` is ``a_n = 1/n`` and ignores the other fields;
    ``polynomial`` is ``a_n = a0 / (n + n0)**gamma``. Restricting ``gamma`` to
    ``(0.5, 1]`` keeps ``sum a_n`` divergent and ``sum a_n**2`` finite.
    """

    form: ScheduleForm = ScheduleForm.HARMONIC
    a0: float = 1.0
    n0: int = 0
    gamma: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "form", ScheduleForm(self.form))
        except ValueError:
            raise ConfigError(f"unknown step schedule {self.form!r}; expected 'harmonic' or 'polynomial'") from None
        a0 = float(self.a0)
        if not math.isfinite(a0) or a0 <= 0:
            raise ConfigError(f"a0 must be positive, got {self.a0!r}")
        if isinstance(self.n0, bool) or int(self.n0) != self.n0 or self.n0 < 0:
            raise ConfigError(f"n0 must be a non-negative integer, got {self.n0!r}")
        gamma = float(self.gamma)
        if not 0.5 < gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0.5, 1], got {self.gamma!r}")
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "n0", int(self.n0))
        object.__setattr__(self, "gamma", gamma)

    @property
    def code(self) -> int:
        return _engine.HARMONIC if self.form is ScheduleForm.HARMONIC else _engine.POLYNOMIAL

    def __call__(self, n: int) -> float:
        return step_size(self, n)


def step_size(schedule: StepSchedule, n: int) -> float:
    """Return ``a_n`` for ``n >= 1``."""
    if n < 1:
        raise ConfigError(f"step index must be >= 1, got {n}")
    if schedule.form is ScheduleForm.HARMONIC:
        return 1.0 / n
    return schedule.a0 / (n + schedule.n0) ** schedule.gamma


@dataclass(frozen=True)
class EstimatorConfig:
    """Hyperparameters of the estimator.

    The defaults are a unit-bandwidth Gaussian kernel, ``lam = 1e-5``,
    harmonic steps and a 1000-sample warm-up average. ``lam = 0`` is accepted
    for ablations but removes the stabilising pull towards the origin.
    """

    kernel: KernelSpec = field(default_factory=KernelSpec)
    lam: float = 1e-5
    schedule: StepSchedule = field(default_factory=StepSchedule)
    warmup: int = 1000

    def __post_init__(self):
        if not isinstance(self.kernel, KernelSpec):
            raise ConfigError("kernel must be a KernelSpec")
        if not isinstance(self.schedule, StepSchedule):
            raise ConfigError("schedule must be a StepSchedule")
        lam = float(self.lam)
        if not math.isfinite(lam) or lam < 0:
            raise ConfigError(f"lam must be a non-negative finite number, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)
        if isinstance(self.warmup, bool) or int(self.warmup) != self.warmup or self.warmup < 0:
            raise ConfigError(f"warmup must be a non-negative integer, got {self.warmup!r}")
        object.__setattr__(self, "warmup", int(self.warmup))

    @property
    def dim(self) -> int:
        return self.kernel.dim

    @property
    def regularized(self) -> bool:
        return self.lam > 0


class Phase(str, Enum):
    WARMING_UP = "warming_up"
    RUNNING = "running"


@dataclass(frozen=True, eq=False)
class EstimatorState:
    """Snapshot of the estimator. ``n`` counts gradient updates only."""

    phase: Phase
    m: np.ndarray
    n: int
    warmup_sum: np.ndarray
    warmup_count: int

    def __eq__(self, other):
        if not isinstance(other, EstimatorState):
            return NotImplemented
        return (
            self.phase == other.phase
            and self.n == other.n
            and self.warmup_count == other.warmup_count
            and np.array_equal(self.m, other.m)
            and np.array_equal(self.warmup_sum, other.warmup_sum)
        )


class StreamResult(NamedTuple):
    final: np.ndarray
    trajectory: list
    state: EstimatorState


def init_state(config: EstimatorConfig, m0=None) -> EstimatorState:
    """Create the initial state.

    A starting point ``m0`` must be given exactly when ``config.warmup == 0``.
    """
    p = config.dim
    if config.warmup == 0:
        if m0 is None:
            raise ConfigError("warmup=0 requires an explicit starting point m0")
        m = _as_vector(m0, p, "m0")
        return EstimatorState(Phase.RUNNING, m, 0, np.zeros(p), 0)
    if m0 is not None:
        raise ConfigError("m0 is only accepted when warmup=0; otherwise the warm-up average is used")
    return EstimatorState(Phase.WARMING_UP, np.zeros(p), 0, np.zeros(p), 0)


def _as_vector(v, p, name):
    v = np.atleast_1d(np.asarray(v, dtype=float)).copy()
    if v.shape != (p,):
        raise ConfigError(f"{name} must have dimension {p}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConfigError(f"{name} must be finite")
    return v


class _Runner:
    """Mutable working copy of a state, fed block by block."""

    def __init__(self, config: EstimatorConfig, state: EstimatorState, trace_every=None):
        self.config = config
        self.m = np.array(state.m, dtype=float)
        self.wsum = np.array(state.warmup_sum, dtype=float)
        self.counters = np.array([state.n, state.warmup_count], dtype=np.int64)
        if trace_every is not None and (int(trace_every) != trace_every or trace_every < 1):
            raise ConfigError(f"trace_every must be a positive integer, got {trace_every!r}")
        self.trace_every = int(trace_every) if trace_every else 0
        self.trajectory = []
        self.seen = 0

    def feed(self, block):
        cfg = self.config
        block = _as_block(block, cfg.dim, self.seen)
        if block.shape[0] == 0:
            return
        cap = block.shape[0] // self.trace_every + 1 if self.trace_every else 1
        trace_n = np.empty(cap, dtype=np.int64)
        trace_m = np.empty((cap, cfg.dim))
        sched = cfg.schedule
        status, row, ntr = _engine.ascend(
            self.m, self.wsum, self.counters, cfg.warmup, block,
            cfg.kernel.code, cfg.kernel.epsilon, cfg.lam,
            sched.code, sched.a0, float(sched.n0), sched.gamma,
            self.trace_every, trace_n, trace_m,
        )
        for k in range(ntr):
            self.trajectory.append((int(trace_n[k]), trace_m[k].copy()))
        if status == _engine.BAD_SAMPLE:
            index = self.seen + row
            self.seen = index
            raise DataError(f"sample {index} is not finite: {block[row].tolist()}", index=index)
        if status == _engine.DIVERGED:
            index = self.seen + row
            self.seen = index
            raise DivergenceError(
                f"estimate left the divergence guard (|m| > {_engine.GUARD:g}) at sample {index}, "
                f"update {int(self.counters[0]) + 1}", index=index)
        self.seen += block.shape[0]

    def state(self) -> EstimatorState:
        n, wcount = int(self.counters[0]), int(self.counters[1])
        phase = Phase.WARMING_UP if wcount < self.config.warmup else Phase.RUNNING
        return EstimatorState(phase, self.m.copy(), n, self.wsum.copy(), wcount)

    def finish_trajectory(self):
        n = int(self.counters[0])
        if n > 0 and (not self.trajectory or self.trajectory[-1][0] != n):
            self.trajectory.append((n, self.m.copy()))
        return self.trajectory


def _as_block(block, p, offset):
    arr = np.asarray(block, dtype=float)
    if arr.ndim == 1 and p == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim == 0 and p == 1:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[1] != p:
        raise DataError(f"samples must have {p} column(s), got shape {arr.shape}", index=offset)
    return np.ascontiguousarray(arr)


def observe(state: EstimatorState, config: EstimatorConfig, sample) -> EstimatorState:
    """Consume one sample and return the new state; ``state`` is left untouched.

    During warm-up the sample is accumulated. Afterwards it triggers exactly
    one update ``m + a_{n+1} * (grad K_eps(m - X) - lam * m)``.
    """
    sample = np.atleast_1d(np.asarray(sample, dtype=float))
    if sample.shape != (config.dim,):
        raise DataError(f"sample must have dimension {config.dim}, got shape {sample.shape}", index=0)
    runner = _Runner(config, state)
    runner.feed(sample.reshape(1, -1))
    return runner.state()


def run_blocks(config: EstimatorConfig, blocks: Iterable, trace_every=None, m0=None,
               state: EstimatorState | None = None) -> StreamResult:
    """Fold an iterable of sample blocks (each ``(k, p)``) through the estimator.

    Errors carry the zero-based index of the offending sample across all
    blocks. The stream must at least complete the warm-up.
    """
    if state is None:
        state = init_state(config, m0)
    runner = _Runner(config, state, trace_every)
    for block in blocks:
        runner.feed(block)
    final_state = runner.state()
    if final_state.phase is Phase.WARMING_UP:
        raise DataError(
            f"stream ended during warm-up: got {final_state.warmup_count} samples, "
            f"need at least {config.warmup}", index=runner.seen)
    trajectory = runner.finish_trajectory()
    return StreamResult(final_state.m, trajectory, final_state)


def run_stream(config: EstimatorConfig, samples, trace_every=None, m0=None) -> StreamResult:
    """Run the estimator over an in-memory sample array of shape ``(n, p)``.

    ``trajectory`` holds ``(n, m_n)`` every ``trace_every`` updates and always
    ends with the final estimate when at least one update happened.
    """
    return run_blocks(config, [samples], trace_every=trace_every, m0=m0)
