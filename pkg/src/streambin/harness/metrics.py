"""Per-second metrics frames and their CSV form.

CSV schema (one row per (t, worker), cluster columns repeated):
t,worker_id,scheduled_cpu,measured_cpu,error_pp,queue_length,active_workers,target_workers,ideal_bins
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

CSV_HEADER = [
    "t", "worker_id", "scheduled_cpu", "measured_cpu", "error_pp",
    "queue_length", "active_workers", "target_workers", "ideal_bins",
]


@dataclass
class WorkerSample:
    worker_id: str
    scheduled_cpu: float
    measured_cpu: float

    @property
    def error_pp(self) -> float:
        """Scheduled minus measured, in percentage points, clamped."""
        return min(100.0, max(-100.0, 100.0 * (self.scheduled_cpu - self.measured_cpu)))


@dataclass
class MetricsFrame:
    t: float
    per_worker: list
    queue_length: int
    active_workers: int
    target_workers: int
    ideal_bins: int

    def to_json(self) -> dict:
        return {
            "type": "MetricsFrame",
            "t": self.t,
            "per_worker": [
                {
                    "worker_id": s.worker_id,
                    "scheduled_cpu": s.scheduled_cpu,
                    "measured_cpu": s.measured_cpu,
                    "error_pp": s.error_pp,
                }
                for s in self.per_worker
            ],
            "queue_length": self.queue_length,
            "active_workers": self.active_workers,
            "target_workers": self.target_workers,
            "ideal_bins": self.ideal_bins,
        }


def ideal_bins(total_scheduled: float) -> int:
    """Fluid lower bound on workers: ceil of the total scheduled CPU."""
    if total_scheduled <= 1e-9:
        return 0
    return math.ceil(total_scheduled - 1e-9)


def build_frame(master, t: float) -> MetricsFrame:
    per_worker = []
    total_scheduled = 0.0
    for record in master.workers.values():
        if record.state == "removed":
            continue
        scheduled = record.scheduled_total()
        total_scheduled += scheduled
        per_worker.append(WorkerSample(record.worker_id, scheduled, record.measured_total()))
    return MetricsFrame(
        t=t,
        per_worker=per_worker,
        queue_length=len(master.backlog),
        active_workers=len(master.active_records()),
        target_workers=master.last_desired_target,
        ideal_bins=ideal_bins(total_scheduled),
    )


def write_csv(frames, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for frame in frames:
            for sample in frame.per_worker:
                writer.writerow([
                    f"{frame.t:.1f}",
                    sample.worker_id,
                    f"{sample.scheduled_cpu:.6f}",
                    f"{sample.measured_cpu:.6f}",
                    f"{sample.error_pp:.4f}",
                    frame.queue_length,
                    frame.active_workers,
                    frame.target_workers,
                    frame.ideal_bins,
                ])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = []
        for row in csv.DictReader(fh):
            rows.append({
                "t": float(row["t"]),
                "worker_id": row["worker_id"],
                "scheduled_cpu": float(row["scheduled_cpu"]),
                "measured_cpu": float(row["measured_cpu"]),
                "error_pp": float(row["error_pp"]),
                "queue_length": int(row["queue_length"]),
                "active_workers": int(row["active_workers"]),
                "target_workers": int(row["target_workers"]),
                "ideal_bins": int(row["ideal_bins"]),
            })
        return rows
