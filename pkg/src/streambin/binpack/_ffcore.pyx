# cython: boundscheck=False, wraparound=False
"""Compiled packing kernels: first-fit placement and exact minimum bins.

Mirrors ``_pure`` exactly; selected at import in ``streambin.binpack``.
"""

from libc.stdlib cimport malloc, free
from libc.math cimport ceil


def first_fit(sizes, residuals, double eps):
    """Place sizes in order, each into the lowest-index bin it fits.

    Negative residuals mark closed bins. Returns (assignments, residuals).
    """
    cdef Py_ssize_t n = len(sizes)
    cdef Py_ssize_t m0 = len(residuals)
    cdef double* res = <double*> malloc((m0 + n) * sizeof(double))
    if res == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, j, placed
    cdef Py_ssize_t m = m0
    cdef double s
    assign = []
    try:
        for j in range(m0):
            res[j] = residuals[j]
        for i in range(n):
            s = sizes[i]
            placed = -1
            for j in range(m):
                if res[j] >= 0.0 and res[j] + eps >= s:
                    placed = j
                    break
            if placed < 0:
                res[m] = 1.0
                placed = m
                m += 1
            res[placed] -= s
            assign.append(placed)
        return assign, [res[j] for j in range(m)]
    finally:
        free(res)


cdef int _dfs(double* items, Py_ssize_t n, Py_ssize_t i,
              double* bins, int nbins, double* suffix,
              int best, int lower, double eps):
    if best <= lower:
        return best
    if i == n:
        return nbins if nbins < best else best
    cdef double free_cap = 0.0
    cdef Py_ssize_t j, k
    for j in range(nbins):
        free_cap += bins[j]
    cdef double need = suffix[i] - free_cap
    cdef int bound = nbins
    if need > eps:
        bound += <int> ceil(need - eps)
    if bound >= best:
        return best
    cdef double s = items[i]
    cdef bint dup
    for j in range(nbins):
        if bins[j] + eps < s:
            continue
        dup = False
        for k in range(j):
            if bins[k] == bins[j]:
                dup = True
                break
        if dup:
            continue
        bins[j] -= s
        best = _dfs(items, n, i + 1, bins, nbins, suffix, best, lower, eps)
        bins[j] += s
        if best <= lower:
            return best
    if nbins + 1 < best:
        bins[nbins] = 1.0 - s
        best = _dfs(items, n, i + 1, bins, nbins + 1, suffix, best, lower, eps)
    return best


def min_bins(sizes, double eps):
    """Exact minimum number of unit bins, by branch and bound."""
    items = sorted(sizes, reverse=True)
    cdef Py_ssize_t n = len(items)
    if n == 0:
        return 0
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        total += items[i]
    cdef int lower = <int> ceil(total - eps)
    _, ffd_res = first_fit(items, [], eps)
    cdef int best = len(ffd_res)
    if best <= lower:
        return best

    cdef double* c_items = <double*> malloc(n * sizeof(double))
    cdef double* suffix = <double*> malloc((n + 1) * sizeof(double))
    cdef double* bins = <double*> malloc(n * sizeof(double))
    if c_items == NULL or suffix == NULL or bins == NULL:
        free(c_items); free(suffix); free(bins)
        raise MemoryError()
    try:
        for i in range(n):
            c_items[i] = items[i]
        suffix[n] = 0.0
        for i in range(n - 1, -1, -1):
            suffix[i] = suffix[i + 1] + c_items[i]
        return _dfs(c_items, n, 0, bins, 0, suffix, best, lower, eps)
    finally:
        free(c_items)
        free(suffix)
        free(bins)
