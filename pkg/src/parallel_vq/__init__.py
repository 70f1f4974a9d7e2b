"""Parallel stochastic vector quantization: kernels, simulators and estimators."""

from .asynchronous import AsyncConfig, DelayModel, run_async
from .core import (
    StepSchedule,
    h_term,
    nearest_prototype,
    run_sequential,
    step_value,
    vq_step,
)
from .datagen import MixtureSpec, ShardedDataset, init_prototypes, make_sharded, sample_mixture
from .estimator import OnlineVQ, ParallelVQ
from .metrics import PerformanceCurve, distortion, time_to_threshold
from .sync import AVERAGING, DELTA_MERGE, SyncConfig, average_merge, delta_merge, run_sync

__all__ = [
    "AVERAGING",
    "DELTA_MERGE",
    "AsyncConfig",
    "DelayModel",
    "MixtureSpec",
    "OnlineVQ",
    "ParallelVQ",
    "PerformanceCurve",
    "ShardedDataset",
    "StepSchedule",
    "SyncConfig",
    "average_merge",
    "delta_merge",
    "distortion",
    "h_term",
    "init_prototypes",
    "make_sharded",
    "nearest_prototype",
    "run_async",
    "run_sequential",
    "run_sync",
    "sample_mixture",
    "step_value",
    "time_to_threshold",
    "vq_step",
]

__version__ = "0.1.0"
