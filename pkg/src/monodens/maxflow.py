"""Minimum s-t cuts with Dinic's algorithm, compiled with numba.

A :class:`FlowGraph` fixes the arc structure once; each solve only supplies
capacities.  The grid isotonic solvers reuse one graph per grid shape across
thousands of cuts, so building it is off the hot path.
"""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True)
def _bfs_levels(n, s, adj_ptr, adj_arc, to, res, eps, level, queue):
    for i in range(n):
        level[i] = -1
    level[s] = 0
    head = 0
    tail = 0
    queue[tail] = s
    tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        for p in range(adj_ptr[u], adj_ptr[u + 1]):
            a = adj_arc[p]
            v = to[a]
            if level[v] < 0 and res[a] > eps:
                level[v] = level[u] + 1
                queue[tail] = v
                tail += 1


@nb.njit(cache=True)
def dinic(n, s, t, adj_ptr, adj_arc, to, cap, eps):
    """Maximum flow value and the final residual capacities.

    Arc ``a`` and arc ``a ^ 1`` are mutual reverses.
    """
    res = cap.copy()
    level = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    it = np.empty(n, np.int64)
    path = np.empty(n, np.int64)
    flow = 0.0
    while True:
        _bfs_levels(n, s, adj_ptr, adj_arc, to, res, eps, level, queue)
        if level[t] < 0:
            break
        for i in range(n):
            it[i] = adj_ptr[i]
        depth = 0
        u = s
        while True:
            if u == t:
                f = np.inf
                for k in range(depth):
                    if res[path[k]] < f:
                        f = res[path[k]]
                for k in range(depth):
                    res[path[k]] -= f
                    res[path[k] ^ 1] += f
                flow += f
                depth = 0
                u = s
                continue
            advanced = False
            while it[u] < adj_ptr[u + 1]:
                a = adj_arc[it[u]]
                v = to[a]
                if res[a] > eps and level[v] == level[u] + 1:
                    path[depth] = a
                    depth += 1
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                if u == s:
                    break
                level[u] = -1
                depth -= 1
                u = to[path[depth] ^ 1]
                it[u] += 1
    return flow, res


@nb.njit(cache=True)
def source_side(n, s, adj_ptr, adj_arc, to, res, eps):
    level = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    _bfs_levels(n, s, adj_ptr, adj_arc, to, res, eps, level, queue)
    return level >= 0


class FlowGraph:
    """Directed graph with paired forward/reverse arcs in CSR adjacency form."""

    def __init__(self, n: int, tails, heads):
        tails = np.asarray(tails, dtype=np.int64)
        heads = np.asarray(heads, dtype=np.int64)
        m = len(tails)
        self.n = int(n)
        self.n_edges = m
        to = np.empty(2 * m, dtype=np.int64)
        frm = np.empty(2 * m, dtype=np.int64)
        to[0::2], to[1::2] = heads, tails
        frm[0::2], frm[1::2] = tails, heads
        order = np.argsort(frm, kind="stable")
        self.to = to
        self.adj_arc = order.astype(np.int64)
        self.adj_ptr = np.concatenate([[0], np.cumsum(np.bincount(frm, minlength=n))]).astype(np.int64)

    def arc_capacities(self, caps) -> np.ndarray:
        full = np.zeros(2 * self.n_edges)
        full[0::2] = caps
        return full

    def min_cut(self, caps, source: int, sink: int, eps: float = 1e-12):
        """Return ``(cut value, source-side mask)`` for per-edge capacities."""
        caps = np.asarray(caps, dtype=float)
        if np.any(caps < 0):
            raise ValueError("capacities must be nonnegative")
        full = self.arc_capacities(caps)
        flow, res = dinic(self.n, source, sink, self.adj_ptr, self.adj_arc, self.to, full, eps)
        return flow, source_side(self.n, source, self.adj_ptr, self.adj_arc, self.to, res, eps)


def min_cut(n, tails, heads, caps, source, sink, eps: float = 1e-12):
    """One-shot minimum cut on an edge list."""
    return FlowGraph(n, tails, heads).min_cut(caps, source, sink, eps)
