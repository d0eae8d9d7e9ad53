"""In-process deterministic simulation of a full cluster on a virtual clock.

Master, workers and connector run as plain objects; time advances in fixed
100 ms ticks and every source of randomness is seeded, so identical
scenario+seed gives byte-identical output.
"""

from __future__ import annotations

import json
import random

from streambin.clock import VirtualClock, to_millis
from streambin.events import EventLog
from streambin.harness.metrics import build_frame
from streambin.irm.engine import IrmEngine
from streambin.master.state import MasterState
from streambin.protocol import StreamMessage
from streambin.worker.backends import SimulatedBackend
from streambin.worker.state import ResourceExhausted, WorkerNotReady, WorkerState

TICK = 0.1


class SimWorker:
    def __init__(self, state: WorkerState, boot_done_at: float):
        self.state = state
        self.boot_done_at = boot_done_at
        self.alive = True


class DirectTransport:
    """Master-to-worker calls as plain method dispatch."""

    def __init__(self, cluster):
        self.cluster = cluster

    def _worker(self, record):
        sim = self.cluster.sim_workers.get(record.worker_id)
        return sim if sim is not None and sim.alive else None

    def send_stream(self, record, message) -> bool:
        sim = self._worker(record)
        if sim is None:
            return False
        return sim.state.receive_stream(message, self.cluster.now())

    def start_pe(self, record, image, tag, pe_id, estimated_cpu) -> bool:
        sim = self._worker(record)
        if sim is None:
            return False
        try:
            sim.state.start_pe(image, tag, pe_id, estimated_cpu, self.cluster.now())
            return True
        except (WorkerNotReady, ResourceExhausted):
            return False

    def stop_pe(self, record, pe_id) -> bool:
        sim = self._worker(record)
        if sim is None:
            return False
        return sim.state.stop_pe(pe_id, self.cluster.now())


class SimProvisioner:
    def __init__(self, cluster):
        self.cluster = cluster

    def provision(self, count, now):
        for _ in range(count):
            self.cluster.spawn_worker(now)

    def decommission(self, worker_id, now):
        sim = self.cluster.sim_workers.get(worker_id)
        if sim is not None:
            sim.alive = False


class SimCluster:
    def __init__(self, scenario, events=None, profiler=None, order_seed=None):
        scenario.validate()
        self.scenario = scenario
        self.config = scenario.irm_config()
        self.clock = VirtualClock(tick=TICK)
        self.tick_index = 0
        self.events = events if events is not None else EventLog()
        self.transport = DirectTransport(self)
        self.master = MasterState(self.config, self.events, self.transport)
        if profiler is not None:
            self.master.profiler = profiler
        self.engine = IrmEngine(
            self.master, self.config, self.events, self.transport,
            provisioner=SimProvisioner(self),
        )
        self.sim_workers: dict[str, SimWorker] = {}
        self.rng = random.Random(scenario.seed)
        self.pending = self._build_messages(order_seed)
        self.frames = []
        self.delivery_log = []  # (message_id, "p2p"|"queued")
        self._quiet_since = None
        self._worker_count = 0

        self._packing_ticks = self._interval_ticks(self.config.packing_interval)
        self._predictor_ticks = self._interval_ticks(self.config.predictor_interval)
        self._report_ticks = self._interval_ticks(self.config.report_interval)
        self._frame_ticks = self._interval_ticks(1.0)

    @staticmethod
    def _interval_ticks(interval: float) -> int:
        return max(1, round(interval / TICK))

    def now(self) -> float:
        return self.tick_index * TICK

    # -- message schedule -------------------------------------------------------

    def _build_messages(self, order_seed):
        entries = []
        for batch in self.scenario.schedule:
            for _ in range(batch.batch_size):
                if batch.workload == "mixed":
                    idx = self.rng.randrange(len(self.scenario.workloads))
                else:
                    idx = batch.workload
                entries.append([batch.at_s, idx])
        if order_seed is not None:
            shuffler = random.Random(order_seed)
            assignment = [e[1] for e in entries]
            shuffler.shuffle(assignment)
            for entry, idx in zip(entries, assignment):
                entry[1] = idx
        messages = []
        for i, (at_s, idx) in enumerate(entries):
            w = self.scenario.workloads[idx]
            payload = json.dumps(
                {"target_cpu": w.target_cpu, "duration_s": w.duration_s}
            ).encode()
            messages.append((at_s, StreamMessage(
                payload=payload, image=w.image, tag=w.tag,
                message_id=f"m-{i:05d}", created_at=to_millis(at_s),
            )))
        return messages

    # -- worker lifecycle ----------------------------------------------------------

    def spawn_worker(self, now: float):
        self._worker_count += 1
        port = 20000 + self._worker_count
        boot_done = now + self.scenario.cluster.worker_startup_delay_s
        state = WorkerState(
            host="sim", port=port, backend=SimulatedBackend(), events=self.events,
            pe_startup_delay=self.scenario.cluster.pe_startup_delay_s,
            ready_at=boot_done,
        )
        worker_id = self.master.register_worker("sim", port, now)
        state.worker_id = worker_id
        self.sim_workers[worker_id] = SimWorker(state, boot_done)
        return worker_id

    # -- connector path ---------------------------------------------------------------

    def send_message(self, message: StreamMessage, now: float) -> str:
        self.master.accepted_ids.add(message.message_id)
        endpoint = self.master.find_available_pe(message.image, message.tag, now)
        if endpoint is not None:
            record = self.master.workers[endpoint.worker_id]
            if self.transport.send_stream(record, message):
                pe = record.pes.get(endpoint.pe_id)
                if pe is not None:
                    pe.state = "busy"
                    pe.last_activity = now
                    pe.reserved_until = 0.0
                self.master.dispatched_count += 1
                self.events.emit(
                    "message_dispatched", now,
                    message_id=message.message_id,
                    worker=endpoint.worker_id, pe=endpoint.pe_id, via="p2p",
                )
                return "p2p"
        self.master.enqueue_backlog(message, now)
        return "queued"

    # -- main loop ------------------------------------------------------------------------

    def _sync_pe_states(self, now: float):
        for worker_id, sim in self.sim_workers.items():
            if sim.alive:
                sim.state.poll(now)
                self.master.reconcile_pe_states(worker_id, sim.state.pe_states(), now)

    def step(self):
        t = self.now()
        self.clock.time = t

        self._sync_pe_states(t)
        self.master.drain_backlog(t)

        while self.pending and self.pending[0][0] <= t + 1e-9:
            _, message = self.pending.pop(0)
            self.delivery_log.append((message.message_id, self.send_message(message, t)))

        if self.tick_index % self._predictor_ticks == 0:
            self.engine.predictor_tick(t)
        if self.tick_index % self._packing_ticks == 0:
            self.engine.packing_tick(t)

        self._sync_pe_states(t)
        self.master.drain_backlog(t)
        self.engine.reaper_tick(t)
        self.master.liveness_check(t)

        if self.tick_index % self._report_ticks == 0:
            for sim in self.sim_workers.values():
                if sim.alive and t >= sim.boot_done_at:
                    report = sim.state.sample_and_report(t)
                    self.master.ingest_report(report, t)

        if self.tick_index % self._frame_ticks == 0:
            self.frames.append(build_frame(self.master, t))

        self.tick_index += 1

    def _is_quiet(self) -> bool:
        if self.pending or self.master.backlog:
            return False
        if len(self.engine.container_queue) or self.engine.allocation_queue:
            return False
        for sim in self.sim_workers.values():
            if sim.alive and sim.state.pes:
                return False
        return True

    def run(self):
        """Step until the system has fully drained and stayed quiet."""
        max_ticks = round(self.scenario.max_duration_s / TICK)
        quiet_ticks_needed = round(self.scenario.quiescence_s / TICK)
        quiet_run = 0
        while self.tick_index <= max_ticks:
            self.step()
            if self._is_quiet():
                quiet_run += 1
                if quiet_run >= quiet_ticks_needed:
                    break
            else:
                quiet_run = 0
        return self
