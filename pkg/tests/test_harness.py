"""Harness behavior: scenario validation, deterministic simulation output,
metrics CSV round-trips, replay profiling effects and plot generation."""

import copy
import json
from pathlib import Path

import pytest

from streambin.events import EventLog, format_event, parse_event
from streambin.harness.metrics import (
    CSV_HEADER,
    MetricsFrame,
    WorkerSample,
    ideal_bins,
    read_csv,
    write_csv,
)
from streambin.harness.plots import KINDS, plot
from streambin.harness.runner import replay_runs, run
from streambin.harness.scenario import (
    ScenarioError,
    load_scenario,
    scenario_from_dict,
)
from streambin.harness.simulate import SimCluster

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def base_scenario(**overrides):
    data = {
        "seed": 1,
        "workloads": [
            {"image": "synthetic-load", "target_cpu": 0.4, "duration_s": 3.0},
        ],
        "schedule": [
            {"at_s": 0.0, "batch_size": 4, "workload": 0},
            {"at_s": 2.0, "batch_size": 4, "workload": 0},
        ],
        "cluster": {"max_workers": 5},
        "irm": {"default_cpu_estimate": 0.4, "worker_grace": 2.0},
        "max_duration_s": 300.0,
    }
    data.update(overrides)
    return scenario_from_dict(data)


# -- events ------------------------------------------------------------------


def test_event_line_roundtrip():
    line = format_event("pe_started", 1.25, worker="w0", est=0.5, pe="pe-1")
    parsed = parse_event(line)
    assert parsed["event"] == "pe_started"
    assert parsed["t"] == "1.250"
    assert parsed["worker"] == "w0"
    assert parsed["est"] == "0.5000"


def test_event_log_select():
    log = EventLog()
    log.emit("a", 0.0, x=1)
    log.emit("b", 1.0)
    log.emit("a", 2.0, x=2)
    assert [e["x"] for e in log.select("a")] == ["1", "2"]


# -- scenario validation --------------------------------------------------------


def test_validation_lists_every_problem():
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict({
            "seed": "not-an-int",
            "workloads": [{"image": "", "target_cpu": 1.5, "duration_s": -1}],
            "schedule": [
                {"at_s": 5.0, "batch_size": 0, "workload": 9},
                {"at_s": 1.0, "batch_size": 1, "workload": 0},
            ],
            "cluster": {"max_workers": 0},
            "mode": "quantum",
            "irm": {"len_low": 50, "len_high": 10},
        })
    problems = err.value.problems
    joined = "\n".join(problems)
    for needle in ("seed", "image", "target_cpu", "duration_s", "batch_size",
                   "workload", "nondecreasing", "max_workers", "mode", "irm"):
        assert needle in joined, f"missing {needle!r} in: {joined}"
    assert len(problems) >= 9


def test_shipped_scenarios_are_valid():
    for name in ("synthetic_peaks.json", "single_batch_767.json"):
        scenario = load_scenario(SCENARIOS / name)
        assert scenario.cluster.max_workers == 5


# -- metrics -----------------------------------------------------------------------


def test_error_pp_definition_and_clamp():
    assert WorkerSample("w0", 0.6, 0.4).error_pp == pytest.approx(20.0)
    assert WorkerSample("w0", 0.0, 0.5).error_pp == pytest.approx(-50.0)
    assert WorkerSample("w0", 1.0, 0.0).error_pp == 100.0


def test_ideal_bins_is_fluid_ceiling():
    assert ideal_bins(0.0) == 0
    assert ideal_bins(0.3) == 1
    assert ideal_bins(1.0) == 1
    assert ideal_bins(1.01) == 2
    assert ideal_bins(2.0) == 2


def test_csv_roundtrip(tmp_path):
    frames = [
        MetricsFrame(
            t=float(t),
            per_worker=[WorkerSample("w0", 0.5, 0.5), WorkerSample("w1", 0.25, 0.0)],
            queue_length=t,
            active_workers=2,
            target_workers=3,
            ideal_bins=1,
        )
        for t in range(3)
    ]
    path = tmp_path / "metrics.csv"
    write_csv(frames, path)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(CSV_HEADER)
    rows = read_csv(path)
    assert len(rows) == 6
    assert rows[1]["worker_id"] == "w1"
    assert rows[1]["error_pp"] == pytest.approx(25.0)
    assert rows[4]["queue_length"] == 2


# -- simulation determinism ----------------------------------------------------------


def test_same_seed_gives_byte_identical_csv(tmp_path):
    scenario = base_scenario()
    out_a = run(scenario, tmp_path / "a")
    out_b = run(base_scenario(), tmp_path / "b")
    csv_a = (out_a.out_dir / "metrics.csv").read_bytes()
    csv_b = (out_b.out_dir / "metrics.csv").read_bytes()
    assert csv_a == csv_b
    assert out_a.event_lines == out_b.event_lines


def test_different_seed_changes_mixed_assignment():
    data = {
        "seed": 1,
        "workloads": [
            {"image": "synthetic-load", "target_cpu": 0.2, "duration_s": 2.0},
            {"image": "synthetic-load", "target_cpu": 0.6, "duration_s": 2.0},
        ],
        "schedule": [{"at_s": 0.0, "batch_size": 12, "workload": "mixed"}],
    }
    a = SimCluster(scenario_from_dict(copy.deepcopy(data)))
    data["seed"] = 2
    b = SimCluster(scenario_from_dict(copy.deepcopy(data)))
    payloads_a = [m.payload for _, m in a.pending]
    payloads_b = [m.payload for _, m in b.pending]
    assert payloads_a != payloads_b


def test_single_job_trace(tmp_path):
    scenario = base_scenario(
        workloads=[{"image": "synthetic-load", "target_cpu": 0.4, "duration_s": 3.0}],
        schedule=[{"at_s": 0.0, "batch_size": 1, "workload": 0}],
    )
    result = run(scenario, tmp_path)
    peaks = {}
    for frame in result.frames:
        for s in frame.per_worker:
            peaks[s.worker_id] = max(peaks.get(s.worker_id, 0.0), s.scheduled_cpu)
    assert max(peaks.values()) == pytest.approx(0.4)
    assert sum(1 for p in peaks.values() if p > 0) == 1
    # Drains back to zero at the end.
    assert all(s.scheduled_cpu == 0.0 for s in result.frames[-1].per_worker)


def test_conservation_small_batch(tmp_path):
    scenario = base_scenario(
        schedule=[{"at_s": 0.0, "batch_size": 10, "workload": 0}],
        irm={"default_cpu_estimate": 0.4, "len_low": 2, "len_high": 6,
             "predictor_interval": 1.0, "predictor_timeout": 2.0,
             "worker_grace": 2.0},
    )
    result = run(scenario, tmp_path)
    conservation = result.summary["conservation"]
    assert conservation["sent"] == 10
    assert conservation["conserved"] is True
    assert result.frames[-1].queue_length == 0


def test_report_cadence():
    scenario = base_scenario()
    cluster = SimCluster(scenario)
    counts = {}
    original = cluster.master.ingest_report

    def counting(report, now):
        counts[report.worker_id] = counts.get(report.worker_id, 0) + 1
        return original(report, now)

    cluster.master.ingest_report = counting
    cluster.run()
    duration = cluster.now()
    for wid, sim in cluster.sim_workers.items():
        if not sim.alive:
            continue
        alive_for = duration - sim.boot_done_at
        expected = alive_for / cluster.config.report_interval
        assert abs(counts.get(wid, 0) - expected) <= 1.5


def test_backlog_spills_are_logged(tmp_path):
    scenario = base_scenario(
        schedule=[{"at_s": 0.0, "batch_size": 30, "workload": 0}],
        irm={"default_cpu_estimate": 0.4, "len_low": 2, "len_high": 6,
             "predictor_interval": 1.0, "predictor_timeout": 2.0,
             "scale_large": 8, "worker_grace": 2.0},
    )
    result = run(scenario, tmp_path)
    assert result.summary["conservation"]["conserved"] is True
    queued = [l for l in result.event_lines if l.startswith("event=message_queued")]
    dispatched = [l for l in result.event_lines
                  if l.startswith("event=message_dispatched")]
    assert queued, "a 30-message burst must overflow into the backlog"
    assert len(dispatched) == 30


# -- replay -----------------------------------------------------------------------


def replay_scenario():
    return base_scenario(
        workloads=[{"image": "synthetic-load", "target_cpu": 0.2, "duration_s": 4.0}],
        schedule=[{"at_s": float(t), "batch_size": 2, "workload": 0}
                  for t in range(0, 20)],
        cluster={"max_workers": 5, "pe_startup_delay_s": 2.0},
        irm={"default_cpu_estimate": 0.5, "worker_grace": 2.0},
    )


def test_replay_learns_across_runs(tmp_path):
    summaries = replay_runs(replay_scenario(), runs=3, out_dir=tmp_path)
    errors = [s["mean_abs_error_pp"] for s in summaries]
    assert errors[0] > errors[1]
    assert (tmp_path / "replay_summary.json").exists()
    assert (tmp_path / "run01" / "metrics.csv").exists()


def test_replay_pinned_profiles_identical():
    summaries = replay_runs(replay_scenario(), runs=2, pin_profiles=True)
    a, b = summaries
    assert a["mean_abs_error_pp"] == b["mean_abs_error_pp"]
    assert a["makespan_s"] == b["makespan_s"]


def test_replay_requires_two_runs():
    with pytest.raises(ValueError):
        replay_runs(replay_scenario(), runs=1)


# -- plots -----------------------------------------------------------------------------


def test_plot_kinds(tmp_path):
    result = run(base_scenario(), tmp_path / "run")
    for kind in KINDS:
        path = plot(result.out_dir, kind)
        assert path.exists() and path.stat().st_size > 0


def test_plot_rejects_unknown_kind(tmp_path):
    run(base_scenario(), tmp_path / "run")
    with pytest.raises(ValueError):
        plot(tmp_path / "run", "pie3d")


# -- summary files -------------------------------------------------------------------


def test_run_writes_all_outputs(tmp_path):
    result = run(base_scenario(), tmp_path)
    for name in ("metrics.csv", "events.log", "summary.json"):
        assert (tmp_path / name).exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["conservation"]["conserved"] is True
