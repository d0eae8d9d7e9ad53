"""Wire-level message schemas and the endpoint contract shared by master,
workers and stream connectors.

Control-plane bodies are UTF-8 JSON, self-describing via a ``type``
discriminator. Stream payloads travel as raw binary HTTP bodies with
metadata in headers (no base64 overhead on large objects); the generic
codec below base64-wraps payloads only for frame round-trips.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field, fields

# Master endpoints
MASTER_REGISTER = "/api/worker/register"
MASTER_REPORT = "/api/worker/report"
MASTER_PE_QUERY = "/api/pe"
MASTER_STREAM = "/api/stream"
MASTER_PE_REQUEST = "/api/pe/request"
MASTER_STATUS = "/api/status"

# Worker endpoints
WORKER_STREAM = "/api/stream"
WORKER_PE_START = "/api/pe/start"
WORKER_PE_STOP = "/api/pe/stop"

# Stream metadata headers
HDR_IMAGE = "X-Stream-Image"
HDR_TAG = "X-Stream-Tag"
HDR_MESSAGE_ID = "X-Message-Id"

PE_STATES = ("starting", "running", "idle")


class MalformedFrameError(ValueError):
    """Frame failed to parse; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class StreamMessage:
    payload: bytes
    image: str
    tag: str
    message_id: str
    created_at: int  # ms since epoch

    def __post_init__(self):
        if not self.image:
            raise ValueError("StreamMessage.image must be nonempty")


@dataclass(frozen=True)
class PeEndpoint:
    worker_id: str
    host: str
    port: int
    pe_id: str
    image: str
    tag: str

    def __post_init__(self):
        if not (1 <= self.port <= 65535):
            raise ValueError(f"port {self.port} outside [1, 65535]")


@dataclass(frozen=True)
class PeStat:
    pe_id: str
    image: str
    tag: str
    cpu_fraction: float
    state: str

    def __post_init__(self):
        if not (0.0 <= self.cpu_fraction <= 1.0):
            raise ValueError(f"cpu_fraction {self.cpu_fraction} outside [0, 1]")
        if self.state not in PE_STATES:
            raise ValueError(f"unknown PE state {self.state!r}")


@dataclass(frozen=True)
class WorkerReport:
    worker_id: str
    sent_at: int
    pe_stats: tuple = ()
    per_image_avg: dict = field(default_factory=dict)


def make_report(worker_id: str, sent_at: int, pe_stats) -> WorkerReport:
    """Build a report with per_image_avg derived from the PE stats."""
    pe_stats = tuple(pe_stats)
    sums: dict[str, list] = {}
    for stat in pe_stats:
        acc = sums.setdefault(stat.image, [0.0, 0])
        acc[0] += stat.cpu_fraction
        acc[1] += 1
    avgs = {image: total / count for image, (total, count) in sums.items()}
    return WorkerReport(worker_id, sent_at, pe_stats, avgs)


_TYPES = {
    cls.__name__: cls
    for cls in (StreamMessage, PeEndpoint, PeStat, WorkerReport)
}


def _to_jsonable(value):
    if isinstance(value, bytes):
        return base64.b64encode(value).decode("ascii")
    if isinstance(value, tuple):
        return [_to_jsonable(v) for v in value]
    if hasattr(value, "__dataclass_fields__"):
        out = {"type": type(value).__name__}
        for f in fields(value):
            out[f.name] = _to_jsonable(getattr(value, f.name))
        return out
    return value


def encode(message) -> bytes:
    """Serialize any protocol value to a self-describing JSON frame."""
    if type(message).__name__ not in _TYPES:
        raise TypeError(f"not a protocol type: {type(message).__name__}")
    return json.dumps(_to_jsonable(message), sort_keys=True).encode("utf-8")


def _build(cls, obj: dict):
    kwargs = {}
    for f in fields(cls):
        if f.name not in obj:
            continue  # absent optional field; defaults apply
        value = obj[f.name]
        if f.name == "payload":
            value = base64.b64decode(value)
        elif f.name == "pe_stats":
            value = tuple(_build(PeStat, v) for v in value)
        kwargs[f.name] = value
    return cls(**kwargs)


def decode(data: bytes, expected):
    """Parse a frame, checking the ``type`` discriminator against ``expected``.

    Unknown keys are ignored for forward compatibility.
    """
    try:
        obj = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise MalformedFrameError("frame is not UTF-8", exc.start) from exc
    except json.JSONDecodeError as exc:
        raise MalformedFrameError(f"bad JSON: {exc.msg}", exc.pos) from exc
    if not isinstance(obj, dict):
        raise MalformedFrameError("frame is not an object")
    declared = obj.get("type")
    if declared != expected.__name__:
        raise MalformedFrameError(
            f"frame type {declared!r}, expected {expected.__name__!r}"
        )
    try:
        return _build(expected, obj)
    except (TypeError, ValueError) as exc:
        raise MalformedFrameError(f"bad {declared} frame: {exc}") from exc
