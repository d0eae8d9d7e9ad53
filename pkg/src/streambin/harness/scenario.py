"""Experiment scenario definitions: workload mix, submission schedule,
cluster limits and resource-manager overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from streambin.irm.config import IrmConfig

MODES = ("simulated", "process")


class ScenarioError(ValueError):
    """Validation failure; message lists every violated field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid scenario: " + "; ".join(self.problems))


@dataclass
class Workload:
    image: str
    target_cpu: float
    duration_s: float
    tag: str = "latest"


@dataclass
class BatchSpec:
    at_s: float
    batch_size: int
    workload: object  # index into workloads, or "mixed"


@dataclass
class ClusterSpec:
    max_workers: int = 5
    worker_startup_delay_s: float = 0.0
    pe_startup_delay_s: float = 0.0
    backend: str = "simulated"  # PE backend for process mode


@dataclass
class Scenario:
    seed: int
    workloads: list
    schedule: list
    cluster: ClusterSpec = field(default_factory=ClusterSpec)
    irm: dict = field(default_factory=dict)
    mode: str = "simulated"
    max_duration_s: float = 3600.0
    quiescence_s: float = 3.0

    def irm_config(self) -> IrmConfig:
        overrides = dict(self.irm)
        overrides["max_workers"] = self.cluster.max_workers
        return IrmConfig.from_dict(overrides)

    def validate(self):
        problems = []
        if not isinstance(self.seed, int):
            problems.append("seed: must be an integer")
        if not self.workloads:
            problems.append("workloads: must be nonempty")
        for i, w in enumerate(self.workloads):
            if not w.image:
                problems.append(f"workloads[{i}].image: must be nonempty")
            if not (0.0 < w.target_cpu <= 1.0):
                problems.append(f"workloads[{i}].target_cpu: {w.target_cpu} outside (0, 1]")
            if w.duration_s < 0:
                problems.append(f"workloads[{i}].duration_s: must be >= 0")
        prev = None
        for i, b in enumerate(self.schedule):
            if b.batch_size < 1:
                problems.append(f"schedule[{i}].batch_size: must be >= 1")
            if prev is not None and b.at_s < prev:
                problems.append(f"schedule[{i}].at_s: times must be nondecreasing")
            prev = b.at_s
            if b.workload != "mixed" and not (
                isinstance(b.workload, int) and 0 <= b.workload < len(self.workloads)
            ):
                problems.append(f"schedule[{i}].workload: bad index {b.workload!r}")
        if self.mode not in MODES:
            problems.append(f"mode: {self.mode!r} not in {MODES}")
        if self.cluster.max_workers < 1:
            problems.append("cluster.max_workers: must be >= 1")
        if self.cluster.worker_startup_delay_s < 0:
            problems.append("cluster.worker_startup_delay_s: must be >= 0")
        if self.cluster.pe_startup_delay_s < 0:
            problems.append("cluster.pe_startup_delay_s: must be >= 0")
        try:
            self.irm_config()
        except ValueError as exc:
            problems.append(f"irm: {exc}")
        if problems:
            raise ScenarioError(problems)
        return self


def scenario_from_dict(data: dict) -> Scenario:
    workloads = [Workload(**w) for w in data.get("workloads", [])]
    schedule = [BatchSpec(**b) for b in data.get("schedule", [])]
    cluster = ClusterSpec(**data.get("cluster", {}))
    scenario = Scenario(
        seed=data.get("seed", 0),
        workloads=workloads,
        schedule=schedule,
        cluster=cluster,
        irm=data.get("irm", {}),
        mode=data.get("mode", "simulated"),
        max_duration_s=data.get("max_duration_s", 3600.0),
        quiescence_s=data.get("quiescence_s", 3.0),
    )
    return scenario.validate()


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))
