"""Worker-side state: the PE table, message handoff and CPU reporting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from streambin.clock import to_millis
from streambin.protocol import PeStat, StreamMessage, WorkerReport, make_report


class WorkerNotReady(Exception):
    """Start refused while the worker is still provisioning."""


class ResourceExhausted(Exception):
    """Start refused: PE slots exhausted or image not resolvable."""


@dataclass
class ProcessingEngine:
    pe_id: str
    image: str
    tag: str
    estimated_cpu: float
    state: str = "starting"  # starting -> idle <-> busy
    ready_at: float = 0.0
    last_activity: float = 0.0
    job: Optional[object] = None
    current_message_id: Optional[str] = None
    params: dict = field(default_factory=dict)


class WorkerState:
    def __init__(self, host, port, backend, events,
                 pe_startup_delay: float = 2.0, ready_at: float = 0.0,
                 max_pes: Optional[int] = None):
        self.worker_id = ""
        self.host = host
        self.port = port
        self.backend = backend
        self.events = events
        self.pe_startup_delay = pe_startup_delay
        self.ready_at = ready_at
        self.max_pes = max_pes
        self.pes: dict[str, ProcessingEngine] = {}

    # -- PE lifecycle ---------------------------------------------------------

    def start_pe(self, image: str, tag: str, pe_id: str, estimated_cpu: float,
                 now: float) -> ProcessingEngine:
        if now < self.ready_at:
            raise WorkerNotReady(f"worker ready at {self.ready_at}")
        existing = self.pes.get(pe_id)
        if existing is not None:
            return existing  # idempotent restart
        if not self.backend.resolves(image):
            raise ResourceExhausted(f"image {image!r} not resolvable")
        if self.max_pes is not None and len(self.pes) >= self.max_pes:
            raise ResourceExhausted("PE slots exhausted")
        pe = ProcessingEngine(
            pe_id, image, tag, estimated_cpu,
            ready_at=now + self.pe_startup_delay,
        )
        self.pes[pe_id] = pe
        self.poll(now)  # zero startup delay makes the PE idle immediately
        return pe

    def stop_pe(self, pe_id: str, now: float) -> bool:
        pe = self.pes.pop(pe_id, None)
        if pe is None:
            return False
        if pe.job is not None:
            self.backend.job_stop(pe.job)
        return True

    def poll(self, now: float):
        """Advance PE states: boot completions and finished jobs."""
        for pe in self.pes.values():
            if pe.state == "starting" and now >= pe.ready_at:
                pe.state = "idle"
                pe.last_activity = now
            elif pe.state == "busy" and self.backend.job_done(pe.job, now):
                self.events.emit(
                    "message_completed", now,
                    message_id=pe.current_message_id,
                    worker=self.worker_id, pe=pe.pe_id,
                )
                pe.state = "idle"
                pe.last_activity = now
                pe.job = None
                pe.current_message_id = None

    # -- streaming ---------------------------------------------------------------

    def receive_stream(self, message: StreamMessage, now: float) -> bool:
        """Hand the message to an idle local PE; False means the caller must
        fall back to the master backlog."""
        self.poll(now)
        for pe in self.pes.values():
            if pe.state == "idle" and pe.image == message.image and pe.tag == message.tag:
                params = _parse_params(message.payload)
                pe.job = self.backend.job_start(params, now)
                pe.state = "busy"
                pe.current_message_id = message.message_id
                pe.last_activity = now
                self.events.emit(
                    "message_accepted", now,
                    message_id=message.message_id,
                    worker=self.worker_id, pe=pe.pe_id,
                )
                return True
        return False

    # -- reporting ----------------------------------------------------------------

    def sample_and_report(self, now: float) -> WorkerReport:
        """One report per interval; sent even with no PEs (liveness)."""
        self.poll(now)
        stats = []
        for pe in self.pes.values():
            if pe.state == "busy":
                cpu = self.backend.cpu_sample(pe.job, now)
                state = "running"
            else:
                cpu = 0.0
                state = pe.state
            stats.append(PeStat(pe.pe_id, pe.image, pe.tag, cpu, state))
        return make_report(self.worker_id, to_millis(now), stats)

    def pe_states(self) -> dict[str, str]:
        return {
            pe_id: ("busy" if pe.state == "busy" else pe.state)
            for pe_id, pe in self.pes.items()
        }


def _parse_params(payload: bytes) -> dict:
    try:
        params = json.loads(payload.decode("utf-8"))
        return params if isinstance(params, dict) else {}
    except (ValueError, UnicodeDecodeError):
        return {}
