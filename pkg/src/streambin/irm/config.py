"""Tunables for the resource manager. JSON config keys match the field
names one to one."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields


@dataclass
class IrmConfig:
    packing_interval: float = 2.0
    profiler_window_n: int = 10
    report_interval: float = 1.0
    container_idle_timeout: float = 1.0
    default_cpu_estimate: float = 0.5
    ttl_initial: int = 3
    len_low: int = 10
    len_high: int = 50
    roc_low: float = 1.0
    roc_high: float = 5.0
    scale_small: int = 1
    scale_large: int = 4
    predictor_interval: float = 2.0
    predictor_timeout: float = 10.0
    worker_grace: float = 30.0
    max_workers: int = 5

    def __post_init__(self):
        if not self.len_low < self.len_high:
            raise ValueError("len_low must be < len_high")
        if not self.roc_low < self.roc_high:
            raise ValueError("roc_low must be < roc_high")
        if not self.scale_small <= self.scale_large:
            raise ValueError("scale_small must be <= scale_large")

    @classmethod
    def from_dict(cls, data: dict) -> "IrmConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "IrmConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
