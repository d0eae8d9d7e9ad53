"""Worker autoscaling: packing demand plus a warm idle buffer that grows
logarithmically with cluster size."""

from __future__ import annotations

import math


def idle_buffer(active: int) -> int:
    """Warm workers kept beyond packing demand; never less than one."""
    return max(1, math.ceil(math.log2(active + 1)))


def desired_workers(bins_needed: int, active: int) -> int:
    """Uncapped demand: what the manager would provision if it could."""
    return bins_needed + idle_buffer(active)


def target_workers(bins_needed: int, active: int, max_workers: int) -> int:
    """Provisioning target, capped by the resource limit."""
    return min(max_workers, desired_workers(bins_needed, active))
