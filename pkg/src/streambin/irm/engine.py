"""Ties the resource-management pieces into the periodic control loops:
packing/allocation, load prediction, idle reaping and worker autoscaling.

The engine owns no timers. The simulation harness calls the *_tick methods
on its virtual clock; the live master service calls them from interval
threads. Either way all state changes funnel through MasterState.
"""

from __future__ import annotations

import itertools
from collections import deque

from streambin.irm.allocator import packing_run
from streambin.irm.autoscaler import desired_workers
from streambin.irm.predictor import LoadPredictor
from streambin.irm.queues import ContainerQueue, ContainerRequest, next_request_id


class IrmEngine:
    def __init__(self, master, config, events, transport, provisioner=None):
        self.master = master
        self.config = config
        self.events = events
        self.transport = transport
        self.provisioner = provisioner
        self.container_queue = ContainerQueue(events)
        self.allocation_queue: deque[ContainerRequest] = deque()
        self.predictor = LoadPredictor(config)
        self._pe_counter = itertools.count()

    # -- container requests ---------------------------------------------------

    def request_pes(self, image: str, tag: str, count: int, now: float):
        for _ in range(count):
            request = ContainerRequest(
                request_id=next_request_id(),
                image=image,
                tag=tag,
                ttl=self.config.ttl_initial,
                estimated_cpu=self.master.profiler.estimate(image),
            )
            self.container_queue.push(request, now)

    # -- packing loop -----------------------------------------------------------

    def packing_tick(self, now: float):
        """Refresh estimates, run First-Fit, start PEs, adjust worker target."""
        profiler = self.master.profiler
        self.container_queue.refresh(profiler)
        for request in self.allocation_queue:
            request.estimated_cpu = profiler.estimate(request.image)

        queued = self.container_queue.drain()
        loads = self.master.worker_loads()
        allocations, overflow, bins_needed = packing_run(queued, loads)
        # Overflow already opened bins past the available workers, so
        # bins_needed carries the unmet demand.
        self.container_queue.requeue_front(overflow)
        self.master.last_bins_needed = bins_needed

        self.allocation_queue.extend(allocations)
        while self.allocation_queue:
            self.allocate(self.allocation_queue.popleft(), now)

        self.autoscale(bins_needed, now)

    def allocate(self, request: ContainerRequest, now: float) -> str:
        """Start the PE on the request's target worker; failures strip the
        target, burn one TTL and requeue."""
        record = self.master.workers.get(request.target_worker)
        started = False
        pe_id = f"pe-{next(self._pe_counter)}"
        if record is not None and record.state == "active":
            started = self.transport.start_pe(
                record, request.image, request.tag, pe_id, request.estimated_cpu
            )
        if started:
            residuals = "|".join(
                f"{max(0.0, 1.0 - r.scheduled_total()):.4f}"
                for r in self.master.active_records()
            )
            self.master.add_pe(
                record.worker_id, pe_id, request.image, request.tag,
                request.estimated_cpu, now,
            )
            self.events.emit(
                "pe_started", now,
                worker=record.worker_id, pe=pe_id, image=request.image,
                est=request.estimated_cpu, residuals=residuals,
            )
            return "started"

        failed_worker = request.target_worker
        request.target_worker = None
        request.ttl -= 1
        if request.ttl > 0:
            self.events.emit(
                "request_requeued", now,
                request=request.request_id, image=request.image,
                failed_worker=failed_worker, ttl=request.ttl,
            )
            self.container_queue.push(request, now)
            return "requeued"
        self.container_queue.push(request, now)  # drops and logs at ttl 0
        return "dropped"

    # -- predictor loop ---------------------------------------------------------

    def predictor_tick(self, now: float):
        metrics = self.predictor.sample(len(self.master.backlog), now)
        decision = self.predictor.evaluate(metrics)
        self.events.emit(
            "predictor_decision", now,
            kind=decision.kind, count=decision.count,
            length=metrics.length, roc=metrics.roc,
        )
        if decision.kind != "none" and self.master.backlog:
            oldest = self.master.backlog[0]
            self.request_pes(oldest.image, oldest.tag, decision.count, now)
        # Starvation guard: a trickle too small to trip any threshold must
        # still get capacity, or a lone message would sit queued forever.
        for image, tag in self._starved_images():
            self.request_pes(image, tag, 1, now)
        return decision

    def _starved_images(self):
        """Backlog (image, tag) pairs with no PE hosted, queued or allocating."""
        waiting = []
        for message in self.master.backlog:
            key = (message.image, message.tag)
            if key not in waiting:
                waiting.append(key)
        if not waiting:
            return []
        covered = set()
        for record in self.master.workers.values():
            if record.state == "removed":
                continue
            for pe in record.pes.values():
                covered.add((pe.image, pe.tag))
        for request in self.container_queue.entries:
            covered.add((request.image, request.tag))
        for request in self.allocation_queue:
            covered.add((request.image, request.tag))
        return [key for key in waiting if key not in covered]

    # -- idle reaper --------------------------------------------------------------

    def reaper_tick(self, now: float) -> list[str]:
        """Stop PEs idle past the timeout; their capacity returns to the bin."""
        stopped = []
        for record in self.master.workers.values():
            if record.state == "removed":
                continue
            for pe in list(record.pes.values()):
                if (
                    pe.state == "idle"
                    and pe.reserved_until <= now
                    and now - pe.last_activity >= self.config.container_idle_timeout
                ):
                    self.transport.stop_pe(record, pe.pe_id)
                    self.master.remove_pe(record.worker_id, pe.pe_id)
                    stopped.append(pe.pe_id)
                    self.events.emit(
                        "pe_stopped", now,
                        worker=record.worker_id, pe=pe.pe_id, image=pe.image,
                        released=pe.scheduled_cpu,
                    )
        return stopped

    # -- worker autoscaling ----------------------------------------------------------

    def autoscale(self, bins_needed: int, now: float):
        master = self.master
        active = [r for r in master.workers.values() if r.state == "active"]
        provisioning = [r for r in master.workers.values() if r.state == "provisioning"]
        draining = [r for r in master.workers.values() if r.state == "draining"]

        desired = desired_workers(bins_needed, len(active))
        capped = min(self.config.max_workers, desired)
        master.last_desired_target = desired
        master.last_capped_target = capped

        coming = len(active) + len(provisioning)
        if capped > coming:
            need = capped - coming
            # Draining workers are reclaimed before new ones are provisioned.
            for record in sorted(draining, key=lambda r: r.index):
                if need == 0:
                    break
                record.state = "active"
                need -= 1
            if need > 0:
                self.events.emit(
                    "scale_up", now, count=need, desired=desired,
                    target=capped, active=len(active),
                )
                if self.provisioner is not None:
                    self.provisioner.provision(need, now)
        elif capped < len(active):
            surplus = len(active) - capped
            empty = [r for r in reversed(active) if not r.pes]
            for record in empty[:surplus]:
                record.state = "draining"
                record.draining_since = now
                self.events.emit("scale_down", now, worker=record.worker_id,
                                 desired=desired, target=capped)

        for record in list(draining):
            if (
                record.state == "draining"
                and not record.pes
                and now - record.draining_since >= self.config.worker_grace
            ):
                record.state = "removed"
                self.events.emit("worker_removed", now, worker=record.worker_id)
                if self.provisioner is not None:
                    self.provisioner.decommission(record.worker_id, now)
