"""Bin-packing manager: turns queued container requests into per-worker
placements via First-Fit over the workers' remaining CPU capacity."""

from __future__ import annotations

from streambin.binpack import Bin, PackItem, pack_sequence


def packing_run(queued, worker_loads):
    """One First-Fit run over the queued hosting requests.

    ``worker_loads`` is the active workers in bin-index order, as tuples
    ``(worker_id, scheduled_cpu_total, pe_count)``. Requests that land on an
    existing worker get ``target_worker`` set; requests that land in bins
    beyond the available workers stay unplaced and only raise demand.

    Returns ``(allocations, overflow, bins_needed)`` where allocations is a
    list of requests with target_worker set, overflow the still-queued rest,
    and bins_needed the total bins occupied at the end of the run.
    """
    bins = []
    for idx, (worker_id, scheduled, pe_count) in enumerate(worker_loads):
        residual = max(0.0, 1.0 - scheduled)
        occupants = ["_existing"] * min(pe_count, 1)
        bins.append(Bin(index=idx, residual=residual, items=occupants))

    items = [PackItem(id=r.request_id, size=r.estimated_cpu) for r in queued]
    plan = pack_sequence(items, bins)

    allocations, overflow = [], []
    for request in queued:
        bin_index = plan.placements[request.request_id]
        if bin_index < len(worker_loads):
            request.target_worker = worker_loads[bin_index][0]
            allocations.append(request)
        else:
            request.target_worker = None
            overflow.append(request)
    return allocations, overflow, plan.bins_used
