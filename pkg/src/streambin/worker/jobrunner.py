"""Synthetic CPU load job: busies the CPU at a target level for a duration.

Shaping is duty-cycled over 100 ms periods (spin for k*100 ms, sleep the
rest), coarse enough to survive OS scheduling jitter yet fine enough for
1 s sampling. Runs standalone as `python -m streambin.worker.jobrunner`.
"""

from __future__ import annotations

import argparse
import time

PERIOD_S = 0.1


def burn(target_cpu: float, duration_s: float, period_s: float = PERIOD_S):
    """Consume roughly target_cpu of one core for duration_s wall seconds."""
    if duration_s <= 0:
        return
    target_cpu = min(max(target_cpu, 0.0), 1.0)
    end = time.perf_counter() + duration_s
    while True:
        now = time.perf_counter()
        if now >= end:
            break
        busy_until = min(now + target_cpu * period_s, end)
        while time.perf_counter() < busy_until:
            pass
        sleep_until = min(now + period_s, end)
        remaining = sleep_until - time.perf_counter()
        if remaining > 0:
            time.sleep(remaining)


def main(argv=None):
    parser = argparse.ArgumentParser(description="synthetic CPU load job")
    parser.add_argument("--target-cpu", type=float, required=True)
    parser.add_argument("--duration", type=float, required=True)
    args = parser.parse_args(argv)
    burn(args.target_cpu, args.duration)


if __name__ == "__main__":
    main()
