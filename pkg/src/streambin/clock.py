"""Clocks. The simulation harness injects a VirtualClock everywhere a
component would otherwise read wall time, which is what makes simulated
runs deterministic."""

from __future__ import annotations

import time


class WallClock:
    def now(self) -> float:
        """Seconds since the Unix epoch."""
        return time.time()


class VirtualClock:
    """Time advances only when the harness steps it."""

    def __init__(self, start: float = 0.0, tick: float = 0.1):
        self.time = start
        self.tick = tick

    def now(self) -> float:
        return self.time

    def advance(self) -> float:
        self.time += self.tick
        return self.time


def to_millis(t: float) -> int:
    """Protocol timestamps are integer milliseconds."""
    return int(round(t * 1000.0))
