"""Master-side system state: worker registry, PE directory with reservation
semantics, and the priority backlog queue.

All mutation goes through the methods here; the REST front end and the
resource-manager loops serialize on one lock around them.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from streambin.irm.profiler import WorkerProfiler
from streambin.protocol import PeEndpoint, StreamMessage, WorkerReport

# A PE handed out by find_available_pe stays off the market this long; the
# P2P handoff needs a race-free notion of "available".
RESERVATION_WINDOW = 5.0

# Missing this many consecutive reports costs a worker its active state.
LIVENESS_FACTOR = 3


class UnknownWorkerError(KeyError):
    """Report from a worker the master does not know; it must re-register."""


@dataclass
class PeInfo:
    pe_id: str
    image: str
    tag: str
    state: str = "starting"  # starting | idle | busy
    measured_cpu: float = 0.0
    scheduled_cpu: float = 0.0
    last_activity: float = 0.0
    reserved_until: float = 0.0


@dataclass
class WorkerRecord:
    worker_id: str
    host: str
    port: int
    index: int
    state: str = "provisioning"  # provisioning | active | draining | removed
    pes: dict = field(default_factory=dict)
    last_report: float = 0.0
    draining_since: float = 0.0

    def scheduled_total(self) -> float:
        return sum(pe.scheduled_cpu for pe in self.pes.values())

    def measured_total(self) -> float:
        return sum(pe.measured_cpu for pe in self.pes.values())


def _report_state_to_master(state: str) -> str:
    return "busy" if state == "running" else state


class MasterState:
    def __init__(self, config, events, transport=None):
        self.config = config
        self.events = events
        self.transport = transport
        self.workers: dict[str, WorkerRecord] = {}
        self._by_address: dict[tuple, str] = {}
        self.backlog: deque[StreamMessage] = deque()
        self.backlog_high_water = 0
        self.profiler = WorkerProfiler(
            config.profiler_window_n, config.default_cpu_estimate
        )
        self.accepted_ids: set[str] = set()
        # PE ids stopped on purpose; a report sampled before the stop must
        # not resurrect them through stray-PE adoption.
        self.retired_pes: set[str] = set()
        self.dispatched_count = 0
        # Autoscaler bookkeeping surfaced in metrics: raw demand vs capped.
        self.last_desired_target = 0
        self.last_capped_target = 0
        self.last_bins_needed = 0

    # -- registry -----------------------------------------------------------

    def register_worker(self, host: str, port: int, now: float) -> str:
        key = (host, port)
        existing = self._by_address.get(key)
        if existing is not None:
            return existing
        index = len(self.workers)
        worker_id = f"w{index}"
        self.workers[worker_id] = WorkerRecord(worker_id, host, port, index)
        self._by_address[key] = worker_id
        self.events.emit("worker_registered", now, worker=worker_id, host=host, port=port)
        return worker_id

    def active_records(self) -> list[WorkerRecord]:
        return [r for r in self.workers.values() if r.state == "active"]

    def worker_loads(self) -> list[tuple]:
        """(worker_id, scheduled total, PE count) per active worker, in bin
        index order. Input to the packing run."""
        return [
            (r.worker_id, r.scheduled_total(), len(r.pes))
            for r in self.active_records()
        ]

    def liveness_check(self, now: float):
        horizon = LIVENESS_FACTOR * self.config.report_interval
        for record in self.workers.values():
            if record.state == "active" and now - record.last_report > horizon:
                record.state = "provisioning"
                self.events.emit("worker_lapsed", now, worker=record.worker_id)

    # -- report ingestion ----------------------------------------------------

    def ingest_report(self, report: WorkerReport, now: float):
        record = self.workers.get(report.worker_id)
        if record is None:
            raise UnknownWorkerError(report.worker_id)
        record.last_report = now
        if record.state == "provisioning":
            record.state = "active"
            self.events.emit("worker_active", now, worker=record.worker_id)

        for stat in report.pe_stats:
            pe = record.pes.get(stat.pe_id)
            if pe is None:
                if stat.pe_id in self.retired_pes:
                    continue
                # Reconciliation: adopt PEs the master did not start itself.
                pe = PeInfo(
                    stat.pe_id,
                    stat.image,
                    stat.tag,
                    scheduled_cpu=stat.cpu_fraction,
                    last_activity=now,
                )
                record.pes[stat.pe_id] = pe
            pe.measured_cpu = stat.cpu_fraction
            new_state = _report_state_to_master(stat.state)
            if new_state == "idle" and pe.state != "idle":
                pe.last_activity = now
            pe.state = new_state

        # The profile only learns from PEs actually processing; idle and
        # starting ones would drag the average toward zero.
        by_image: dict[str, list] = {}
        for stat in report.pe_stats:
            if stat.state == "running":
                by_image.setdefault(stat.image, []).append(stat.cpu_fraction)
        for image, samples in by_image.items():
            self.profiler.add_sample(image, sum(samples) / len(samples))

        if self.transport is not None:
            self.drain_backlog(now)

    def reconcile_pe_states(self, worker_id: str, states: dict, now: float):
        """Zero-latency state sync used by the simulation harness in place of
        waiting for the next periodic report. Does not touch CPU samples."""
        record = self.workers.get(worker_id)
        if record is None:
            return
        for pe_id, state in states.items():
            pe = record.pes.get(pe_id)
            if pe is None:
                continue
            if state == "idle" and pe.state != "idle":
                pe.last_activity = now
            pe.state = state

    # -- PE directory --------------------------------------------------------

    def add_pe(self, worker_id: str, pe_id: str, image: str, tag: str,
               scheduled_cpu: float, now: float, state: str = "starting"):
        record = self.workers[worker_id]
        record.pes[pe_id] = PeInfo(
            pe_id, image, tag, state=state,
            scheduled_cpu=scheduled_cpu, last_activity=now,
        )

    def remove_pe(self, worker_id: str, pe_id: str):
        self.retired_pes.add(pe_id)
        record = self.workers.get(worker_id)
        if record is not None:
            record.pes.pop(pe_id, None)

    def find_available_pe(self, image: str, tag: str, now: float) -> Optional[PeEndpoint]:
        """An idle, unreserved PE for image/tag, reserved on return.

        Backlog has priority: idle PEs first absorb queued messages, and no
        endpoint is handed out while an older same-image message still waits.
        """
        if self.transport is not None:
            self.drain_backlog(now)
        if any(m.image == image and m.tag == tag for m in self.backlog):
            return None
        for record in self.active_records():
            for pe in record.pes.values():
                if (
                    pe.state == "idle"
                    and pe.reserved_until <= now
                    and pe.image == image
                    and pe.tag == tag
                ):
                    pe.reserved_until = now + RESERVATION_WINDOW
                    return PeEndpoint(
                        record.worker_id, record.host, record.port,
                        pe.pe_id, image, tag,
                    )
        return None

    # -- backlog -------------------------------------------------------------

    def enqueue_backlog(self, message: StreamMessage, now: float) -> int:
        self.backlog.append(message)
        self.accepted_ids.add(message.message_id)
        self.backlog_high_water = max(self.backlog_high_water, len(self.backlog))
        self.events.emit(
            "message_queued", now,
            message_id=message.message_id, image=message.image,
            queue_length=len(self.backlog),
        )
        return len(self.backlog)

    def drain_backlog(self, now: float):
        """Push queued messages to idle PEs, oldest message per image first.

        A failed push leaves the message at its queue position and backs the
        PE off for one reservation window.
        """
        if self.transport is None or not self.backlog:
            return
        progress = True
        while progress and self.backlog:
            progress = False
            for record in self.active_records():
                for pe in record.pes.values():
                    if pe.state != "idle" or pe.reserved_until > now:
                        continue
                    message = next(
                        (m for m in self.backlog
                         if m.image == pe.image and m.tag == pe.tag),
                        None,
                    )
                    if message is None:
                        continue
                    if self.transport.send_stream(record, message):
                        self.backlog.remove(message)
                        pe.state = "busy"
                        pe.last_activity = now
                        self.dispatched_count += 1
                        progress = True
                        self.events.emit(
                            "message_dispatched", now,
                            message_id=message.message_id, worker=record.worker_id,
                            pe=pe.pe_id, via="backlog",
                        )
                    else:
                        pe.reserved_until = now + RESERVATION_WINDOW
                        self.events.emit(
                            "dispatch_failed", now,
                            message_id=message.message_id, worker=record.worker_id,
                            pe=pe.pe_id,
                        )
