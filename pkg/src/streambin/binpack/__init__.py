"""Online bin-packing: the Any-Fit family with First-Fit as the default,
plus an exact brute-force optimum used as a test oracle.

Items are CPU fractions in (0, 1], bins have unit capacity. The placement
loop and the exact oracle run on a compiled kernel when the ``_ffcore``
extension is available, falling back to the pure-Python twin otherwise
(force the fallback with ``STREAMBIN_PURE_KERNEL=1``).
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field

if os.environ.get("STREAMBIN_PURE_KERNEL"):
    from streambin.binpack import _pure as _kernel
else:
    try:
        from streambin.binpack import _ffcore as _kernel  # type: ignore[no-redef]
    except ImportError:
        from streambin.binpack import _pure as _kernel  # type: ignore[no-redef]

KERNEL = "compiled" if _kernel.__name__.endswith("_ffcore") else "pure"

# Fit slack: items are measured CPU averages, so exact fills may be off by
# rounding noise and must not be rejected.
FIT_EPS = 1e-9

DEFAULT_ORACLE_LIMIT = 12


class InvalidItemError(ValueError):
    """Item size outside (0, 1]."""


class InstanceTooLargeError(ValueError):
    """Instance exceeds the exhaustive-search limit of the oracle."""


class FitCriterion(enum.Enum):
    FIRST_FIT = "first_fit"


@dataclass(frozen=True)
class PackItem:
    id: object
    size: float

    def __post_init__(self):
        if not (0.0 < self.size <= 1.0):
            raise InvalidItemError(
                f"item {self.id!r}: size {self.size} outside (0, 1]"
            )


@dataclass
class Bin:
    """A unit-capacity bin. Closed bins keep their index but accept nothing."""

    index: int
    capacity: float = 1.0
    residual: float = 1.0
    items: list = field(default_factory=list)
    open: bool = True


@dataclass
class PackingPlan:
    placements: dict  # item id -> bin index
    bins_used: int
    opened_bins: list


def _check_item(item):
    if not (0.0 < item.size <= 1.0):
        raise InvalidItemError(f"item {item.id!r}: size {item.size} outside (0, 1]")


def pack_sequence(items, bins=None, criterion=FitCriterion.FIRST_FIT):
    """Pack items one by one, in order, without lookahead.

    ``bins`` is mutated in place (residuals and item lists updated; new bins
    appended). Returns a PackingPlan; bins_used counts every bin holding at
    least one item, pre-existing contents included.
    """
    if criterion is not FitCriterion.FIRST_FIT:
        raise ValueError(f"unsupported fit criterion: {criterion}")
    if bins is None:
        bins = []
    for item in items:
        _check_item(item)

    sizes = [item.size for item in items]
    residuals = [b.residual if b.open else -1.0 for b in bins]
    assign, _ = _kernel.first_fit(sizes, residuals, FIT_EPS)

    placements = {}
    opened = []
    for item, j in zip(items, assign):
        while j >= len(bins):
            bins.append(Bin(index=len(bins)))
            opened.append(bins[-1].index)
        target = bins[j]
        target.items.append(item.id)
        target.residual -= item.size
        placements[item.id] = j
    bins_used = sum(1 for b in bins if b.items)
    return PackingPlan(placements=placements, bins_used=bins_used, opened_bins=opened)


def first_fit_place(item, bins):
    """Place one item into the lowest-index open bin that fits it.

    Appends a fresh bin when none fits. Mutates ``bins``; returns the
    chosen bin index.
    """
    plan = pack_sequence([item], bins)
    return plan.placements[item.id]


def optimal_bins(items, limit=DEFAULT_ORACLE_LIMIT):
    """Exact minimum bin count over all partitions (exhaustive search)."""
    for item in items:
        _check_item(item)
    if len(items) > limit:
        raise InstanceTooLargeError(
            f"{len(items)} items exceeds oracle limit {limit}"
        )
    return _kernel.min_bins([item.size for item in items], FIT_EPS)
