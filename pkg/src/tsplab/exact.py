"""Exact TSP solvers used as ground-truth oracles at desk scale.

``brute_force`` enumerates every distinct tour (n <= 10) and is the
independent oracle; ``held_karp`` is the bitmask dynamic program (n <= 20)
that stands in for an industrial exact solver when labeling datasets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import SizeError
from .geometry import DistanceMatrix, Tour, tour_length

BRUTE_FORCE_MAX_N = 10
# 2^19 * 19 float64 cost cells for n = 20 is ~80 MB, still desk feasible.
HELD_KARP_MAX_N = 20

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap if not (args and callable(args[0])) else args[0]


@dataclass(frozen=True)
class ExactResult:
    tour: Tour  # canonical
    length: float
    nodes_expanded: int


def brute_force(m: DistanceMatrix) -> ExactResult:
    """Enumerate all (n-1)!/2 distinct tours and return the best.

    City 0 is fixed first and orientation is halved by requiring the second
    city to be smaller than the last, so each candidate is already in
    canonical form. Ties go to the lexicographically smallest tour.
    """
    n = m.n
    if not 2 <= n <= BRUTE_FORCE_MAX_N:
        raise SizeError(f"brute_force supports 2 <= n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if n == 2:
        tour = Tour([0, 1])
        return ExactResult(tour, tour_length(m, tour), nodes_expanded=1)

    rest = [p for p in itertools.permutations(range(1, n)) if p[0] < p[-1]]
    perms = np.array(rest, dtype=np.intp)
    orders = np.concatenate([np.zeros((len(perms), 1), dtype=np.intp), perms], axis=1)
    lengths = np.sum(m.entries[orders, np.roll(orders, -1, axis=1)], axis=1)
    best = lengths.min()
    candidates = np.flatnonzero(lengths == best)
    # rows of `orders` are generated in lexicographic order already
    winner = orders[candidates[0]]
    tour = Tour(winner)
    return ExactResult(tour, tour_length(m, tour), nodes_expanded=len(orders))


@njit(cache=True)
def _held_karp_core(w):  # pragma: no cover - exercised via held_karp
    n = w.shape[0]
    m = n - 1
    full = (1 << m) - 1
    dp = np.empty((full + 1, m), dtype=np.float64)
    parent = np.empty((full + 1, m), dtype=np.int8)
    for j in range(m):
        dp[1 << j, j] = w[0, j + 1]
        parent[1 << j, j] = -1
    expanded = m
    bits = np.empty(m, dtype=np.int64)
    for mask in range(3, full + 1):
        nbits = 0
        for j in range(m):
            if mask >> j & 1:
                bits[nbits] = j
                nbits += 1
        if nbits < 2:
            continue
        for a in range(nbits):
            j = bits[a]
            prev = mask ^ (1 << j)
            best = np.inf
            best_k = -1
            for b in range(nbits):
                k = bits[b]
                if k == j:
                    continue
                expanded += 1
                c = dp[prev, k] + w[k + 1, j + 1]
                if c < best:
                    best = c
                    best_k = k
            dp[mask, j] = best
            parent[mask, j] = best_k
    best = np.inf
    best_j = -1
    for j in range(m):
        c = dp[full, j] + w[j + 1, 0]
        if c < best:
            best = c
            best_j = j
    order = np.zeros(n, dtype=np.int64)
    mask = full
    j = best_j
    for pos in range(n - 1, 0, -1):
        order[pos] = j + 1
        pj = parent[mask, j]
        mask ^= 1 << j
        j = pj
    return best, order, expanded


def _held_karp_py(w: np.ndarray):
    # Pure-python mirror of the jitted core; only used when numba is absent.
    n = w.shape[0]
    m = n - 1
    full = (1 << m) - 1
    dp = np.empty((full + 1, m))
    parent = np.empty((full + 1, m), dtype=np.int8)
    for j in range(m):
        dp[1 << j, j] = w[0, j + 1]
        parent[1 << j, j] = -1
    expanded = m
    for mask in range(3, full + 1):
        bits = [j for j in range(m) if mask >> j & 1]
        if len(bits) < 2:
            continue
        for j in bits:
            prev = mask ^ (1 << j)
            best = np.inf
            best_k = -1
            for k in bits:
                if k == j:
                    continue
                expanded += 1
                c = dp[prev, k] + w[k + 1, j + 1]
                if c < best:
                    best = c
                    best_k = k
            dp[mask, j] = best
            parent[mask, j] = best_k
    best = np.inf
    best_j = -1
    for j in range(m):
        c = dp[full, j] + w[j + 1, 0]
        if c < best:
            best = c
            best_j = j
    order = np.zeros(n, dtype=np.int64)
    mask = full
    j = best_j
    for pos in range(n - 1, 0, -1):
        order[pos] = j + 1
        pj = int(parent[mask, j])
        mask ^= 1 << j
        j = pj
    return best, order, expanded


def held_karp(m: DistanceMatrix) -> ExactResult:
    """Exact optimum by dynamic programming over city subsets, O(2^n n^2)."""
    n = m.n
    if not 2 <= n <= HELD_KARP_MAX_N:
        raise SizeError(f"held_karp supports 2 <= n <= {HELD_KARP_MAX_N}, got {n}")
    w = np.ascontiguousarray(m.entries, dtype=np.float64)
    core = _held_karp_core if _HAVE_NUMBA else _held_karp_py
    _, order, expanded = core(w)
    tour = Tour(order).canonical()
    return ExactResult(tour, tour_length(m, tour), nodes_expanded=int(expanded))
