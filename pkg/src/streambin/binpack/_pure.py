"""Pure-Python packing kernels.

Fallback for the compiled extension in ``_ffcore``; both expose the same
two functions and must produce identical results.
"""

from __future__ import annotations

import math


def first_fit(sizes, residuals, eps):
    """Place sizes in order, each into the lowest-index bin it fits.

    ``residuals`` holds remaining capacity per bin; a negative value marks a
    closed bin that is skipped. Items that fit nowhere open a new unit bin
    appended after the existing ones.

    Returns (assignments, final residuals).
    """
    res = list(residuals)
    assign = []
    for size in sizes:
        placed = -1
        for j, r in enumerate(res):
            if r >= 0.0 and r + eps >= size:
                placed = j
                break
        if placed < 0:
            res.append(1.0)
            placed = len(res) - 1
        res[placed] -= size
        assign.append(placed)
    return assign, res


def min_bins(sizes, eps):
    """Exact minimum number of unit bins, by branch and bound.

    Items are sorted descending; open bins with equal residuals are
    interchangeable and only the first is branched on. The bound is
    bins opened so far plus the capacity still missing for the suffix.
    """
    items = sorted(sizes, reverse=True)
    n = len(items)
    if n == 0:
        return 0
    lower = math.ceil(sum(items) - eps)
    # First-fit-decreasing gives the initial upper bound.
    _, ffd_res = first_fit(items, [], eps)
    best = len(ffd_res)
    if best <= lower:
        return best

    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + items[i]
    bins = []

    def dfs(i):
        nonlocal best
        if best <= lower:
            return
        if i == n:
            best = min(best, len(bins))
            return
        free = sum(bins)
        need = suffix[i] - free
        bound = len(bins) + (math.ceil(need - eps) if need > eps else 0)
        if bound >= best:
            return
        size = items[i]
        for j, r in enumerate(bins):
            if r + eps < size:
                continue
            if any(bins[k] == r for k in range(j)):
                continue
            bins[j] = r - size
            dfs(i + 1)
            bins[j] = r
            if best <= lower:
                return
        if len(bins) + 1 < best:
            bins.append(1.0 - size)
            dfs(i + 1)
            bins.pop()

    dfs(0)
    return best
