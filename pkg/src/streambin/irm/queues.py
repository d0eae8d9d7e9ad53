"""Container hosting requests and the FIFO container queue feeding the
bin-packing runs."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Optional

_request_counter = itertools.count()


def next_request_id() -> str:
    return f"req-{next(_request_counter)}"


@dataclass
class ContainerRequest:
    request_id: str
    image: str
    tag: str
    ttl: int
    estimated_cpu: float
    target_worker: Optional[str] = None
    enqueued_at: float = 0.0


class ContainerQueue:
    """FIFO of hosting requests, from autoscaling decisions and manual asks.

    Queued requests are periodically refreshed with the profiler's current
    estimates so each packing run packs up-to-date item sizes.
    """

    def __init__(self, events=None):
        self.entries: deque[ContainerRequest] = deque()
        self.events = events

    def __len__(self):
        return len(self.entries)

    def push(self, request: ContainerRequest, now: float = 0.0) -> bool:
        """Enqueue; a request with an exhausted TTL is dropped instead."""
        if request.ttl <= 0:
            if self.events is not None:
                self.events.emit(
                    "request_dropped",
                    now,
                    request=request.request_id,
                    image=request.image,
                    reason="ttl_exhausted",
                )
            return False
        request.enqueued_at = now
        self.entries.append(request)
        return True

    def drain(self) -> list[ContainerRequest]:
        """Remove and return all queued requests, oldest first."""
        out = list(self.entries)
        self.entries.clear()
        return out

    def requeue_front(self, requests):
        """Put overflow from a packing run back, preserving FIFO order."""
        for request in reversed(list(requests)):
            self.entries.appendleft(request)

    def refresh(self, profiler):
        for request in self.entries:
            request.estimated_cpu = profiler.estimate(request.image)
