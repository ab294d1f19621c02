"""Classical construction heuristics, tree-based heuristics, and 2-opt.

The source descriptions of these methods fix no tie-breaking, so every
operation here states its own deterministic rule (generally: lowest city
index, then lowest position). Identical (matrix, config, seed) always
produces an identical tour.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SizeError
from .geometry import DistanceMatrix, Tour

# Exact minimum-weight matching by subset DP is kept to <= 18 odd vertices
# (2^18 states); beyond that christofides falls back to greedy matching.
MATCHING_EXACT_MAX_ODD = 18

TWO_OPT_EPS = 1e-10  # improvement threshold; avoids float cycling

RANDOM_START = "random"


@dataclass(frozen=True)
class HeuristicConfig:
    start_city: int | str = 0  # city index, or "random" (drawn from seed)
    seed: int = 0
    two_opt: str = "off"  # off | first_improvement | best_improvement
    restarts: int = 1

    def resolve_start(self, n: int) -> int:
        if self.start_city == RANDOM_START:
            return int(np.random.default_rng(self.seed).integers(n))
        start = int(self.start_city)
        if not 0 <= start < n:
            raise ConfigError(f"start_city {start} out of range for n={n}")
        return start


_DEFAULT_CFG = HeuristicConfig()


def nearest_neighbor(m: DistanceMatrix, cfg: HeuristicConfig = _DEFAULT_CFG) -> Tour:
    """Greedy nearest unvisited city from the start; ties to lowest index."""
    n = m.n
    if n < 2:
        raise SizeError(f"nearest_neighbor needs n >= 2, got {n}")
    w = m.entries
    cur = cfg.resolve_start(n)
    visited = np.zeros(n, dtype=bool)
    visited[cur] = True
    order = [cur]
    for _ in range(n - 1):
        row = np.where(visited, np.inf, w[cur])
        cur = int(np.argmin(row))
        visited[cur] = True
        order.append(cur)
    return Tour(order).canonical()


INSERTION_VARIANTS = ("NEAREST", "FARTHEST", "RANDOM", "CHEAPEST")


def insertion(m: DistanceMatrix, variant: str, cfg: HeuristicConfig = _DEFAULT_CFG) -> Tour:
    """Insertion heuristics sharing one skeleton.

    Start from the two mutually nearest cities (mutually farthest for
    FARTHEST), then repeatedly select the next city per variant and insert
    it at the position of least length increase. Selection ties go to the
    lowest city index, position ties to the lowest position.
    """
    variant = variant.upper()
    if variant not in INSERTION_VARIANTS:
        raise ConfigError(f"unknown insertion variant: {variant}")
    n = m.n
    if n < 3:
        raise SizeError(f"insertion needs n >= 3, got {n}")
    w = m.entries

    iu, ju = np.triu_indices(n, 1)
    vals = w[iu, ju]
    # upper triangle is emitted row-major, so first occurrence = smallest (i, j)
    k = int(np.argmax(vals)) if variant == "FARTHEST" else int(np.argmin(vals))
    tour = [int(iu[k]), int(ju[k])]
    in_tour = np.zeros(n, dtype=bool)
    in_tour[tour] = True
    min_dist = np.minimum(w[tour[0]], w[tour[1]])
    rng = np.random.default_rng(cfg.seed) if variant == "RANDOM" else None

    while len(tour) < n:
        remaining = np.flatnonzero(~in_tour)
        t_arr = np.asarray(tour, dtype=np.intp)
        nxt = np.roll(t_arr, -1)
        base = w[t_arr, nxt]
        if variant == "CHEAPEST":
            delta = w[np.ix_(remaining, t_arr)] + w[np.ix_(remaining, nxt)] - base[None, :]
            flat = int(np.argmin(delta))
            r, pos = divmod(flat, len(tour))
            city = int(remaining[r])
        else:
            if variant == "NEAREST":
                city = int(remaining[np.argmin(min_dist[remaining])])
            elif variant == "FARTHEST":
                city = int(remaining[np.argmax(min_dist[remaining])])
            else:  # RANDOM
                city = int(remaining[rng.integers(len(remaining))])
            pos = int(np.argmin(w[city, t_arr] + w[city, nxt] - base))
        tour.insert(pos + 1, city)
        in_tour[city] = True
        min_dist = np.minimum(min_dist, w[city])
    return Tour(tour).canonical()


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        self.parent[self.find(a)] = self.find(b)


def cheapest_link(m: DistanceMatrix) -> Tour:
    """Greedily add the cheapest edge that keeps degrees <= 2 and closes no
    premature circuit; ties break lexicographically on (i, j)."""
    n = m.n
    if n < 3:
        raise SizeError(f"cheapest_link needs n >= 3, got {n}")
    w = m.entries
    iu, ju = np.triu_indices(n, 1)
    vals = w[iu, ju]
    order_idx = np.lexsort((ju, iu, vals))
    deg = np.zeros(n, dtype=np.int64)
    uf = _UnionFind(n)
    adj: list[list[int]] = [[] for _ in range(n)]
    count = 0
    for e in order_idx:
        i, j = int(iu[e]), int(ju[e])
        if deg[i] == 2 or deg[j] == 2:
            continue
        if uf.find(i) == uf.find(j) and count < n - 1:
            continue  # would close a sub-circuit
        uf.union(i, j)
        deg[i] += 1
        deg[j] += 1
        adj[i].append(j)
        adj[j].append(i)
        count += 1
        if count == n:
            break
    order = [0]
    prev = -1
    while len(order) < n:
        nbrs = sorted(adj[order[-1]])
        nxt = nbrs[0] if nbrs[0] != prev else nbrs[1]
        prev = order[-1]
        order.append(nxt)
    return Tour(order).canonical()


def _prim_mst(w: np.ndarray) -> np.ndarray:
    """Parent array of Prim's MST rooted at 0; vertex ties to lowest index,
    equal-key parent updates keep the earlier parent."""
    n = w.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    key = w[0].copy()
    parent = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    key[0] = np.inf
    for _ in range(n - 1):
        v = int(np.argmin(np.where(in_tree, np.inf, key)))
        in_tree[v] = True
        better = ~in_tree & (w[v] < key)
        key[better] = w[v][better]
        parent[better] = v
        key[v] = np.inf
    return parent


def _preorder(parent: np.ndarray) -> list[int]:
    n = len(parent)
    children: list[list[int]] = [[] for _ in range(n)]
    for v in range(1, n):
        children[int(parent[v])].append(v)
    order = []
    stack = [0]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(sorted(children[v], reverse=True))
    return order


def mst_walk(m: DistanceMatrix) -> Tour:
    """Preorder walk of the minimum spanning tree with repeats shortcut."""
    n = m.n
    if n < 2:
        raise SizeError(f"mst_walk needs n >= 2, got {n}")
    parent = _prim_mst(m.entries)
    return Tour(_preorder(parent)).canonical()


def _matching_exact(w: np.ndarray, odd: list[int]) -> list[tuple[int, int]]:
    """Minimum-weight perfect matching on the odd vertices by subset DP."""
    k = len(odd)
    size = 1 << k
    dp = np.full(size, np.inf)
    choice = np.full(size, -1, dtype=np.int64)
    dp[0] = 0.0
    for mask in range(3, size):
        if mask.bit_count() % 2:
            continue
        i = (mask & -mask).bit_length() - 1
        best = np.inf
        best_j = -1
        for j in range(i + 1, k):
            if mask >> j & 1:
                c = dp[mask ^ (1 << i) ^ (1 << j)] + w[odd[i], odd[j]]
                if c < best:
                    best = c
                    best_j = j
        dp[mask] = best
        choice[mask] = best_j
    pairs = []
    mask = size - 1
    while mask:
        i = (mask & -mask).bit_length() - 1
        j = int(choice[mask])
        pairs.append((odd[i], odd[j]))
        mask ^= (1 << i) | (1 << j)
    return pairs


def _matching_greedy(w: np.ndarray, odd: list[int]) -> list[tuple[int, int]]:
    cand = sorted(
        (w[odd[a], odd[b]], odd[a], odd[b])
        for a in range(len(odd))
        for b in range(a + 1, len(odd))
    )
    matched = set()
    pairs = []
    for _, i, j in cand:
        if i in matched or j in matched:
            continue
        pairs.append((i, j))
        matched.update((i, j))
    return pairs


def _euler_circuit(adj: list[list[int]], start: int) -> list[int]:
    """Hierholzer's algorithm; consumes the smallest remaining neighbor first."""
    adj = [sorted(nbrs) for nbrs in adj]
    stack = [start]
    circuit = []
    while stack:
        v = stack[-1]
        if adj[v]:
            u = adj[v].pop(0)
            adj[u].remove(v)
            stack.append(u)
        else:
            circuit.append(stack.pop())
    return circuit[::-1]


def christofides_detail(m: DistanceMatrix) -> tuple[Tour, str]:
    """Christofides tour plus which matching was used (EXACT or GREEDY)."""
    n = m.n
    if n < 3:
        raise SizeError(f"christofides needs n >= 3, got {n}")
    w = m.entries
    parent = _prim_mst(w)
    deg = np.zeros(n, dtype=np.int64)
    adj: list[list[int]] = [[] for _ in range(n)]
    for v in range(1, n):
        p = int(parent[v])
        adj[v].append(p)
        adj[p].append(v)
        deg[v] += 1
        deg[p] += 1
    odd = [v for v in range(n) if deg[v] % 2 == 1]
    if len(odd) <= MATCHING_EXACT_MAX_ODD:
        pairs = _matching_exact(w, odd)
        kind = "EXACT"
    else:
        pairs = _matching_greedy(w, odd)
        kind = "GREEDY"
    for i, j in pairs:
        adj[i].append(j)
        adj[j].append(i)
    circuit = _euler_circuit(adj, 0)
    seen = np.zeros(n, dtype=bool)
    order = []
    for v in circuit:
        if not seen[v]:
            seen[v] = True
            order.append(v)
    return Tour(order).canonical(), kind


def christofides(m: DistanceMatrix) -> Tour:
    return christofides_detail(m)[0]


TWO_OPT_MODES = ("first_improvement", "best_improvement")


def _best_move(w: np.ndarray, order: list[int]) -> tuple[int, int] | None:
    """Max-gain 2-exchange; ties resolve to the lexicographically first (i, j)."""
    n = len(order)
    arr = np.asarray(order, dtype=np.intp)
    nxt = np.roll(arr, -1)
    edge = w[arr, nxt]  # length of edge (order[i], order[i+1 mod n])
    best_gain = TWO_OPT_EPS
    best = None
    for i in range(n - 1):
        a, b = order[i], order[i + 1]
        j_lo = i + 2
        j_hi = n - 1 if i == 0 else n  # (0, n-1) touches the same edge pair
        if j_lo >= j_hi:
            continue
        cs = arr[j_lo:j_hi]
        ds = nxt[j_lo:j_hi]
        gains = edge[i] + edge[j_lo:j_hi] - w[a, cs] - w[b, ds]
        k = int(np.argmax(gains))
        if gains[k] > best_gain:
            best_gain = float(gains[k])
            best = (i, j_lo + k)
    return best


def two_opt(m: DistanceMatrix, t: Tour, mode: str = "first_improvement") -> Tour:
    """Repeatedly apply improving 2-exchanges until none remains.

    first_improvement scans (i, j) lexicographically and restarts after each
    applied move; best_improvement applies the max-gain move per sweep.
    """
    if mode not in TWO_OPT_MODES:
        raise ConfigError(f"unknown two_opt mode: {mode}")
    t.validate(m.n)
    w = m.entries
    order = list(t.order)
    n = len(order)
    improved = n > 3
    while improved:
        improved = False
        if mode == "best_improvement":
            move = _best_move(w, order)
            if move is not None:
                i, j = move
                order[i + 1 : j + 1] = order[i + 1 : j + 1][::-1]
                improved = True
            continue
        for i in range(n - 1):
            a, b = order[i], order[i + 1]
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue  # same pair of edges
                c, d = order[j], order[(j + 1) % n]
                if w[a, b] + w[c, d] - w[a, c] - w[b, d] > TWO_OPT_EPS:
                    order[i + 1 : j + 1] = order[i + 1 : j + 1][::-1]
                    improved = True
                    break
            if improved:
                break
    return Tour(order).canonical()


def improving_two_opt_moves(m: DistanceMatrix, t: Tour) -> list[tuple[int, int]]:
    """Exhaustive scan for improving exchanges; empty at a 2-opt local optimum."""
    w = m.entries
    order = list(t.order)
    n = len(order)
    moves = []
    for i in range(n - 1):
        a, b = order[i], order[i + 1]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            c, d = order[j], order[(j + 1) % n]
            if w[a, b] + w[c, d] - w[a, c] - w[b, d] > TWO_OPT_EPS:
                moves.append((i, j))
    return moves
