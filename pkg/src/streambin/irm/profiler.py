"""Master-side half of the workload profiler: per-image moving averages of
CPU usage, fed by worker reports."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

# Items must have size > 0; an image profiled at ~0 still occupies a sliver.
SIZE_FLOOR = 0.01


@dataclass
class ImageProfile:
    image: str
    window: deque = field(default_factory=deque)
    sample_count: int = 0

    @property
    def moving_avg(self) -> float:
        if not self.window:
            return 0.0
        return sum(self.window) / len(self.window)


class WorkerProfiler:
    """Keeps the last N CPU samples per image; unseen images fall back to a
    configurable default estimate."""

    def __init__(self, window_n: int = 10, default_estimate: float = 0.5):
        self.window_n = window_n
        self.default_estimate = default_estimate
        self.profiles: dict[str, ImageProfile] = {}

    def add_sample(self, image: str, cpu_fraction: float) -> ImageProfile:
        if not (0.0 <= cpu_fraction <= 1.0):
            raise ValueError(f"cpu_fraction {cpu_fraction} outside [0, 1]")
        profile = self.profiles.get(image)
        if profile is None:
            profile = ImageProfile(image, deque(maxlen=self.window_n))
            self.profiles[image] = profile
        profile.window.append(cpu_fraction)
        profile.sample_count += 1
        return profile

    def estimate(self, image: str) -> float:
        """Item size for packing: the moving average, floored so it stays a
        valid (0, 1] item; the default when the image was never sampled."""
        profile = self.profiles.get(image)
        if profile is None or profile.sample_count == 0:
            return self.default_estimate
        return max(profile.moving_avg, SIZE_FLOOR)

    def snapshot(self) -> dict[str, float]:
        return {image: self.estimate(image) for image in self.profiles}
