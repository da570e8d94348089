"""Online estimation of the mode of a smooth unimodal density from a sample stream."""

__version__ = "0.1.0"

from .api import OnlineModeEstimator
from .distributions import PRESETS, DistributionSpec, make_distribution, make_rng, sample, sample_batch
from .estimator import (EstimatorConfig, EstimatorState, Phase, ScheduleForm, StepSchedule, init_state, observe,
                        run_blocks, run_stream, step_size)
from .exceptions import ConfigError, DataError, DivergenceError, GridError, OracleError
from .harness import ExperimentPlan, ReplicationReport, replicate, trace_from_initials
from .kernels import KernelFamily, KernelSpec, kernel_grad, kernel_value

__all__ = [
    "OnlineModeEstimator",
    "PRESETS",
    "DistributionSpec",
    "make_distribution",
    "make_rng",
    "sample",
    "sample_batch",
    "EstimatorConfig",
    "EstimatorState",
    "Phase",
    "ScheduleForm",
    "StepSchedule",
    "init_state",
    "observe",
    "run_blocks",
    "run_stream",
    "step_size",
    "ConfigError",
    "DataError",
    "DivergenceError",
    "GridError",
    "OracleError",
    "ExperimentPlan",
    "ReplicationReport",
    "replicate",
    "trace_from_initials",
    "KernelFamily",
    "KernelSpec",
    "kernel_grad",
    "kernel_value",
]
