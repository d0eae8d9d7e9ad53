"""Structured event log: one `key=value ...` line per event.

Both the live services and the simulation write through this, so run
audits (message conservation, spill checks) read one format.
"""

from __future__ import annotations


def format_event(event: str, t: float, **fields) -> str:
    parts = [f"event={event}", f"t={t:.3f}"]
    for key, value in fields.items():
        if isinstance(value, float):
            parts.append(f"{key}={value:.4f}")
        else:
            parts.append(f"{key}={value}")
    return " ".join(parts)


def parse_event(line: str) -> dict:
    out = {}
    for token in line.strip().split():
        key, _, value = token.partition("=")
        out[key] = value
    return out


class EventLog:
    """Collects events in memory; optionally tees each line to a sink."""

    def __init__(self, sink=None):
        self.lines: list[str] = []
        self.sink = sink

    def emit(self, event: str, t: float, **fields):
        line = format_event(event, t, **fields)
        self.lines.append(line)
        if self.sink is not None:
            self.sink(line)

    def write(self, path):
        with open(path, "w") as fh:
            for line in self.lines:
                fh.write(line + "\n")

    def select(self, event: str) -> list[dict]:
        prefix = f"event={event} "
        return [parse_event(l) for l in self.lines if l.startswith(prefix)]
