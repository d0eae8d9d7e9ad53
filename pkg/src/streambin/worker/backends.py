"""PE job backends. Containers are abstracted behind two implementations:
a pure-virtual one for deterministic simulation, and one that runs the
synthetic load job as an OS subprocess and measures it via OS accounting.
"""

from __future__ import annotations

import subprocess
import sys

SYNTHETIC_IMAGE = "synthetic-load"


class SimulatedBackend:
    """Virtual jobs: completion is a timestamp, CPU is the target while busy."""

    name = "simulated"

    def resolves(self, image: str) -> bool:
        return True

    def job_start(self, params: dict, now: float):
        duration = float(params.get("duration_s", 0.0))
        return {
            "target_cpu": float(params.get("target_cpu", 0.0)),
            "completion_at": now + duration,
        }

    def job_done(self, job, now: float) -> bool:
        return now >= job["completion_at"]

    def job_stop(self, job):
        pass

    def cpu_sample(self, job, now: float) -> float:
        if job is None or self.job_done(job, now):
            return 0.0
        return min(max(job["target_cpu"], 0.0), 1.0)


class SyntheticProcessBackend:
    """Each message spawns the bundled duty-cycle job runner as a subprocess;
    CPU is sampled from per-process accounting deltas."""

    name = "synthetic_process"

    def resolves(self, image: str) -> bool:
        return image == SYNTHETIC_IMAGE

    def job_start(self, params: dict, now: float):
        import psutil

        proc = subprocess.Popen(
            [
                sys.executable, "-m", "streambin.worker.jobrunner",
                "--target-cpu", str(float(params.get("target_cpu", 0.0))),
                "--duration", str(float(params.get("duration_s", 0.0))),
            ],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        return {
            "proc": proc,
            "ps": psutil.Process(proc.pid),
            "last_cpu_time": 0.0,
            "last_sample_at": now,
        }

    def job_done(self, job, now: float) -> bool:
        return job["proc"].poll() is not None

    def job_stop(self, job):
        if job["proc"].poll() is None:
            job["proc"].kill()
            job["proc"].wait()

    def cpu_sample(self, job, now: float) -> float:
        if job is None:
            return 0.0
        try:
            times = job["ps"].cpu_times()
            cpu_time = times.user + times.system
        except Exception:
            return 0.0
        window = now - job["last_sample_at"]
        if window <= 0:
            return 0.0
        used = cpu_time - job["last_cpu_time"]
        job["last_cpu_time"] = cpu_time
        job["last_sample_at"] = now
        return min(max(used / window, 0.0), 1.0)


def make_backend(name: str):
    if name == "simulated":
        return SimulatedBackend()
    if name in ("synthetic", "synthetic_process"):
        return SyntheticProcessBackend()
    raise ValueError(f"unknown backend {name!r}")
