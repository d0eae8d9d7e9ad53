from streambin.harness.metrics import MetricsFrame, WorkerSample, build_frame
from streambin.harness.scenario import Scenario, ScenarioError, load_scenario

__all__ = [
    "MetricsFrame",
    "WorkerSample",
    "build_frame",
    "Scenario",
    "ScenarioError",
    "load_scenario",
]
