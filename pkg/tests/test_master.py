"""Master state: registry and liveness, report ingestion, PE directory
reservation semantics and backlog priority."""

import pytest

from streambin.events import EventLog
from streambin.irm.config import IrmConfig
from streambin.master.state import (
    RESERVATION_WINDOW,
    MasterState,
    UnknownWorkerError,
)
from streambin.protocol import PeStat, StreamMessage, make_report


def make_master(transport=None, **cfg):
    events = EventLog()
    return MasterState(IrmConfig(**cfg), events, transport), events


def message(mid="m-1", image="img", tag="latest"):
    return StreamMessage(b"{}", image, tag, mid, 0)


class ScriptedTransport:
    """send_stream returns scripted outcomes; defaults to success."""

    def __init__(self, outcomes=None):
        self.outcomes = list(outcomes or [])
        self.sent = []

    def send_stream(self, record, msg):
        self.sent.append((record.worker_id, msg.message_id))
        return self.outcomes.pop(0) if self.outcomes else True


# -- registry ---------------------------------------------------------------


def test_register_assigns_sequential_ids():
    master, _ = make_master()
    assert master.register_worker("h", 1, 0.0) == "w0"
    assert master.register_worker("h", 2, 0.0) == "w1"
    assert master.workers["w1"].index == 1


def test_register_is_idempotent_per_address():
    master, _ = make_master()
    first = master.register_worker("h", 1, 0.0)
    assert master.register_worker("h", 1, 5.0) == first
    assert len(master.workers) == 1


def test_worker_activates_on_first_report():
    master, _ = make_master()
    wid = master.register_worker("h", 1, 0.0)
    assert master.workers[wid].state == "provisioning"
    master.ingest_report(make_report(wid, 0, []), now=0.5)
    assert master.workers[wid].state == "active"


def test_liveness_lapse_after_three_missed_reports():
    master, events = make_master(report_interval=1.0)
    wid = master.register_worker("h", 1, 0.0)
    master.ingest_report(make_report(wid, 0, []), now=0.0)
    master.liveness_check(3.0)
    assert master.workers[wid].state == "active"  # exactly at horizon, not past
    master.liveness_check(3.1)
    assert master.workers[wid].state == "provisioning"
    assert events.select("worker_lapsed")


def test_unknown_worker_report_rejected():
    master, _ = make_master()
    with pytest.raises(UnknownWorkerError):
        master.ingest_report(make_report("ghost", 0, []), now=0.0)


# -- report ingestion ----------------------------------------------------------


def test_report_updates_measured_cpu_and_profiler():
    master, _ = make_master()
    wid = master.register_worker("h", 1, 0.0)
    master.add_pe(wid, "pe-0", "img", "latest", 0.5, now=0.0)
    report = make_report(wid, 0, [PeStat("pe-0", "img", "latest", 0.4, "running")])
    master.ingest_report(report, now=1.0)
    assert master.workers[wid].pes["pe-0"].measured_cpu == pytest.approx(0.4)
    assert master.profiler.estimate("img") == pytest.approx(0.4)


def test_unknown_pe_adopted():
    master, _ = make_master()
    wid = master.register_worker("h", 1, 0.0)
    report = make_report(wid, 0, [PeStat("stray", "img", "latest", 0.3, "running")])
    master.ingest_report(report, now=1.0)
    assert "stray" in master.workers[wid].pes


def test_profiler_aggregates_across_workers():
    master, _ = make_master(profiler_window_n=10)
    w0 = master.register_worker("h", 1, 0.0)
    w1 = master.register_worker("h", 2, 0.0)
    master.ingest_report(
        make_report(w0, 0, [PeStat("a", "img", "latest", 0.3, "running")]), now=1.0)
    master.ingest_report(
        make_report(w1, 0, [PeStat("b", "img", "latest", 0.5, "running")]), now=1.0)
    assert master.profiler.estimate("img") == pytest.approx(0.4)


def test_idle_pes_do_not_feed_profiler():
    master, _ = make_master()
    wid = master.register_worker("h", 1, 0.0)
    master.ingest_report(
        make_report(wid, 0, [PeStat("a", "img", "latest", 0.0, "idle")]), now=1.0)
    assert master.profiler.estimate("img") == master.config.default_cpu_estimate


def test_bin_invariant_holds_under_reports():
    master, _ = make_master()
    wid = master.register_worker("h", 1, 0.0)
    master.add_pe(wid, "a", "img", "latest", 0.6, now=0.0)
    master.add_pe(wid, "b", "img", "latest", 0.4, now=0.0)
    assert master.workers[wid].scheduled_total() <= 1.0 + 1e-9


# -- PE directory and reservations ------------------------------------------------


def activate(master, wid):
    master.ingest_report(make_report(wid, 0, []), now=0.0)


def test_find_available_pe_reserves():
    master, _ = make_master()
    wid = master.register_worker("h", 7070, 0.0)
    activate(master, wid)
    master.add_pe(wid, "pe-0", "img", "latest", 0.5, now=0.0, state="idle")

    endpoint = master.find_available_pe("img", "latest", now=1.0)
    assert endpoint is not None
    assert (endpoint.worker_id, endpoint.pe_id, endpoint.port) == (wid, "pe-0", 7070)
    # Second immediate call: the only PE is reserved.
    assert master.find_available_pe("img", "latest", now=1.0) is None
    # Reservation lapses after the window.
    assert master.find_available_pe("img", "latest", 1.0 + RESERVATION_WINDOW) is not None


def test_find_available_pe_requires_image_match():
    master, _ = make_master()
    wid = master.register_worker("h", 1, 0.0)
    activate(master, wid)
    master.add_pe(wid, "pe-0", "imgA", "latest", 0.5, now=0.0, state="idle")
    assert master.find_available_pe("imgB", "latest", now=1.0) is None


def test_no_pes_at_all():
    master, _ = make_master()
    assert master.find_available_pe("img", "latest", now=0.0) is None


# -- backlog priority ----------------------------------------------------------------


def test_backlog_drained_before_pe_advertised():
    transport = ScriptedTransport()
    master, events = make_master(transport)
    wid = master.register_worker("h", 1, 0.0)
    activate(master, wid)
    master.enqueue_backlog(message("m-1"), now=0.0)
    master.enqueue_backlog(message("m-2"), now=0.0)

    master.add_pe(wid, "pe-0", "img", "latest", 0.5, now=1.0, state="idle")
    # The idle PE absorbs m-1; a concurrent connector query gets nothing
    # because m-2 still waits.
    assert master.find_available_pe("img", "latest", now=1.0) is None
    assert transport.sent == [(wid, "m-1")]
    dispatched = events.select("message_dispatched")
    assert [d["message_id"] for d in dispatched] == ["m-1"]
    assert dispatched[0]["via"] == "backlog"


def test_empty_backlog_advertises_normally():
    master, _ = make_master(ScriptedTransport())
    wid = master.register_worker("h", 1, 0.0)
    activate(master, wid)
    master.add_pe(wid, "pe-0", "img", "latest", 0.5, now=0.0, state="idle")
    assert master.find_available_pe("img", "latest", now=1.0) is not None


def test_failed_dispatch_keeps_message_at_front():
    transport = ScriptedTransport(outcomes=[False, True])
    master, events = make_master(transport)
    wid = master.register_worker("h", 1, 0.0)
    activate(master, wid)
    master.enqueue_backlog(message("m-1"), now=0.0)

    master.add_pe(wid, "pe-0", "img", "latest", 0.5, now=1.0, state="idle")
    master.drain_backlog(now=1.0)
    assert master.backlog[0].message_id == "m-1"  # still queued, at the front
    assert events.select("dispatch_failed")
    # The failed PE is backed off; a fresh idle PE picks the message up.
    master.add_pe(wid, "pe-1", "img", "latest", 0.5, now=2.0, state="idle")
    master.drain_backlog(now=2.0)
    assert not master.backlog
    assert transport.sent[-1] == (wid, "m-1")


def test_oldest_same_image_message_first():
    transport = ScriptedTransport()
    master, _ = make_master(transport)
    wid = master.register_worker("h", 1, 0.0)
    activate(master, wid)
    master.enqueue_backlog(message("m-1", image="other"), now=0.0)
    master.enqueue_backlog(message("m-2", image="img"), now=0.0)
    master.enqueue_backlog(message("m-3", image="img"), now=0.0)
    master.add_pe(wid, "pe-0", "img", "latest", 0.5, now=1.0, state="idle")
    master.drain_backlog(now=1.0)
    assert transport.sent == [(wid, "m-2")]
    assert [m.message_id for m in master.backlog] == ["m-1", "m-3"]


def test_backlog_high_water():
    master, _ = make_master()
    for i in range(5):
        master.enqueue_backlog(message(f"m-{i}"), now=0.0)
    assert master.backlog_high_water == 5
