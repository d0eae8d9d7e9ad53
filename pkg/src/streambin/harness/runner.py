"""Experiment runner: executes a scenario (simulated or real processes),
writes metrics.csv + events.log + summary.json into a run directory."""

from __future__ import annotations

import json
import socket
import subprocess
import sys
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from streambin.clock import to_millis
from streambin.events import parse_event
from streambin.harness.metrics import MetricsFrame, WorkerSample, write_csv
from streambin.harness.scenario import Scenario, load_scenario
from streambin.harness.simulate import SimCluster
from streambin.protocol import MASTER_STATUS, StreamMessage


@dataclass
class RunResult:
    out_dir: Path
    frames: list
    event_lines: list
    summary: dict


def _mean_abs_error(frames) -> float:
    errors = [abs(s.error_pp) for f in frames for s in f.per_worker]
    return sum(errors) / len(errors) if errors else 0.0


def _conservation(event_lines, sent_ids) -> dict:
    completed = [
        parse_event(l)["message_id"]
        for l in event_lines
        if l.startswith("event=message_completed ")
    ]
    return {
        "sent": len(sent_ids),
        "completed": len(completed),
        "duplicates": len(completed) - len(set(completed)),
        "missing": sorted(set(sent_ids) - set(completed)),
        "conserved": sorted(completed) == sorted(sent_ids),
    }


def _summarize(frames, event_lines, sent_ids) -> dict:
    return {
        "makespan_s": frames[-1].t if frames else 0.0,
        "mean_abs_error_pp": _mean_abs_error(frames),
        "conservation": _conservation(event_lines, sent_ids),
    }


def _write_outputs(out_dir, frames, event_lines, summary) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(frames, out_dir / "metrics.csv")
    with open(out_dir / "events.log", "w") as fh:
        for line in event_lines:
            fh.write(line + "\n")
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return out_dir


def run(scenario: Scenario, out_dir) -> RunResult:
    scenario.validate()
    if scenario.mode == "process":
        return run_process(scenario, out_dir)
    cluster = SimCluster(scenario).run()
    sent_ids = [mid for mid, _ in cluster.delivery_log]
    summary = _summarize(cluster.frames, cluster.events.lines, sent_ids)
    _write_outputs(out_dir, cluster.frames, cluster.events.lines, summary)
    return RunResult(Path(out_dir), cluster.frames, cluster.events.lines, summary)


def run_scenario_file(path, out_dir) -> RunResult:
    return run(load_scenario(path), out_dir)


def replay_runs(scenario: Scenario, runs: int, out_dir=None, pin_profiles=False):
    """Repeated runs sharing master profiling state, submission order
    reshuffled per run. Returns per-run summaries."""
    if runs < 2:
        raise ValueError("replay needs runs >= 2")
    summaries = []
    profiler = None
    results = []
    for run_idx in range(runs):
        order_seed = scenario.seed if pin_profiles else scenario.seed * 1000 + run_idx
        cluster = SimCluster(
            scenario,
            profiler=None if pin_profiles else profiler,
            order_seed=order_seed,
        )
        cluster.run()
        if not pin_profiles:
            profiler = cluster.master.profiler
        sent_ids = [mid for mid, _ in cluster.delivery_log]
        summary = _summarize(cluster.frames, cluster.events.lines, sent_ids)
        summary["run"] = run_idx + 1
        summaries.append(summary)
        results.append(cluster)
        if out_dir is not None:
            _write_outputs(
                Path(out_dir) / f"run{run_idx + 1:02d}",
                cluster.frames, cluster.events.lines, summary,
            )
    if out_dir is not None:
        with open(Path(out_dir) / "replay_summary.json", "w") as fh:
            json.dump(summaries, fh, indent=2)
    return summaries


# -- process mode -----------------------------------------------------------------


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def _frame_from_status(obj) -> MetricsFrame:
    return MetricsFrame(
        t=obj["t"],
        per_worker=[
            WorkerSample(s["worker_id"], s["scheduled_cpu"], s["measured_cpu"])
            for s in obj["per_worker"]
        ],
        queue_length=obj["queue_length"],
        active_workers=obj["active_workers"],
        target_workers=obj["target_workers"],
        ideal_bins=obj["ideal_bins"],
    )


def _scenario_messages(scenario: Scenario):
    """Flat (at_s, StreamMessage) list, mirroring the simulated build."""
    import random

    rng = random.Random(scenario.seed)
    out = []
    i = 0
    for batch in scenario.schedule:
        for _ in range(batch.batch_size):
            idx = (rng.randrange(len(scenario.workloads))
                   if batch.workload == "mixed" else batch.workload)
            w = scenario.workloads[idx]
            payload = json.dumps(
                {"target_cpu": w.target_cpu, "duration_s": w.duration_s}
            ).encode()
            out.append((batch.at_s, StreamMessage(
                payload=payload, image=w.image, tag=w.tag,
                message_id=f"m-{i:05d}", created_at=to_millis(batch.at_s),
            )))
            i += 1
    return out


def run_process(scenario: Scenario, out_dir, concurrency: int = 8) -> RunResult:
    """Launch master and workers as real processes on localhost and drive the
    schedule through the connector on the wall clock."""
    from streambin import connector

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = scenario.irm_config()
    config_path = out_dir / "irm_config.json"
    with open(config_path, "w") as fh:
        json.dump({k: getattr(config, k) for k in config.__dataclass_fields__}, fh)

    master_port = free_port()
    master_addr = f"127.0.0.1:{master_port}"
    # Every process's stdout is pumped continuously; a full pipe would block
    # the emitting thread inside the service, wedging the whole cluster.
    event_lines: list[str] = []
    pumps = []

    def _spawn(argv):
        proc = subprocess.Popen(
            argv, stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True
        )
        pump = threading.Thread(target=_pump_events, args=(proc, event_lines),
                                daemon=True)
        pump.start()
        pumps.append(pump)
        return proc

    procs = [_spawn(
        [sys.executable, "-m", "streambin.master.cli",
         "--config", str(config_path), "--listen", master_addr],
    )]
    try:
        _wait_http(f"http://{master_addr}{MASTER_STATUS}")
        for _ in range(scenario.cluster.max_workers):
            procs.append(_spawn(
                [sys.executable, "-m", "streambin.worker.cli",
                 "--master", master_addr,
                 "--backend", scenario.cluster.backend,
                 "--report-interval", str(config.report_interval),
                 "--pe-startup-delay", str(scenario.cluster.pe_startup_delay_s)],
            ))
        time.sleep(2 * config.report_interval)  # let workers register and report

        frames = []
        stop_polling = threading.Event()

        def poll_status():
            while not stop_polling.wait(1.0):
                try:
                    resp = requests.get(f"http://{master_addr}{MASTER_STATUS}", timeout=5)
                    frames.append(_frame_from_status(resp.json()))
                except requests.RequestException:
                    pass

        poller = threading.Thread(target=poll_status, daemon=True)
        poller.start()

        t0 = time.time()
        sent_ids = []
        for at_s, group in _group_schedule(_scenario_messages(scenario)):
            delay = t0 + at_s - time.time()
            if delay > 0:
                time.sleep(delay)
            deliveries = connector.send_batch(group, master_addr, concurrency)
            sent_ids.extend(d.message_id for d in deliveries)

        deadline = time.time() + scenario.max_duration_s
        quiet_since = None
        while time.time() < deadline:
            time.sleep(0.5)
            try:
                status = requests.get(
                    f"http://{master_addr}{MASTER_STATUS}", timeout=5
                ).json()
            except requests.RequestException:
                continue
            busy = status["queue_length"] > 0 or any(
                s["scheduled_cpu"] > 0 for s in status["per_worker"]
            )
            if busy:
                quiet_since = None
            elif quiet_since is None:
                quiet_since = time.time()
            elif time.time() - quiet_since >= scenario.quiescence_s:
                break
        stop_polling.set()
        poller.join(timeout=2)
    finally:
        for proc in procs:
            proc.terminate()
        for proc in procs:
            try:
                proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
        for pump in pumps:
            pump.join(timeout=5)

    summary = _summarize(frames, event_lines, sent_ids)
    _write_outputs(out_dir, frames, event_lines, summary)
    return RunResult(out_dir, frames, event_lines, summary)


def _pump_events(proc, sink: list):
    """Drain one process's stdout as it runs, keeping event lines."""
    for line in proc.stdout:
        line = line.rstrip("\n")
        if line.startswith("event="):
            sink.append(line)
    proc.stdout.close()


def _group_schedule(messages):
    groups = []
    for at_s, message in messages:
        if groups and groups[-1][0] == at_s:
            groups[-1][1].append(message)
        else:
            groups.append((at_s, [message]))
    return groups


def _wait_http(url, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        try:
            if requests.get(url, timeout=2).status_code == 200:
                return
        except requests.RequestException:
            pass
        time.sleep(0.2)
    raise TimeoutError(f"service at {url} did not come up")
