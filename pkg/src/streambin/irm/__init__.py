"""Intelligent resource management: container queue, bin-packing allocator,
workload profiler, load predictor and worker autoscaling."""

from streambin.irm.config import IrmConfig
from streambin.irm.profiler import ImageProfile, WorkerProfiler
from streambin.irm.queues import ContainerQueue, ContainerRequest
from streambin.irm.predictor import LoadPredictor, QueueMetrics, ScalingDecision
from streambin.irm.allocator import packing_run
from streambin.irm.autoscaler import idle_buffer, target_workers

__all__ = [
    "IrmConfig",
    "ImageProfile",
    "WorkerProfiler",
    "ContainerQueue",
    "ContainerRequest",
    "LoadPredictor",
    "QueueMetrics",
    "ScalingDecision",
    "packing_run",
    "idle_buffer",
    "target_workers",
]
