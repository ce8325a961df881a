"""Isotonic regression onto the cone of coordinate-wise nonincreasing arrays.

An array ``c`` shaped like a grid is in the cone when ``c[j + e_k] <= c[j]``
for every cell ``j`` and axis ``k``.

The multivariate solvers split cells recursively into groups by binary
min-cut problems.  A group produced this way is always order-convex (an
intersection of down-sets and up-sets of the lattice), so its induced
order is generated by the grid adjacencies inside it and every group at
one recursion depth can share a single cut graph.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numba as nb
import numpy as np

from .maxflow import FlowGraph, dinic, source_side

MONOTONE_TOL = 1e-10


def _check_finite(theta: np.ndarray) -> None:
    if not np.all(np.isfinite(theta)):
        raise ValueError("isotonization input contains NaN or infinite values")


def _weights(theta: np.ndarray, weights) -> np.ndarray:
    if weights is None:
        return np.ones(theta.shape)
    w = np.broadcast_to(np.asarray(weights, dtype=float), theta.shape)
    if not np.all(w > 0):
        raise ValueError("weights must be positive")
    return np.array(w)


def is_monotone(theta: np.ndarray, tol: float = MONOTONE_TOL) -> bool:
    """True when ``theta`` is nonincreasing along every axis (adjacent cells suffice)."""
    theta = np.asarray(theta, dtype=float)
    return all(np.all(np.diff(theta, axis=k) <= tol) for k in range(theta.ndim))


def _adjacent_pairs(shape: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Flat index pairs ``(lo, hi)`` with ``hi = lo + e_k`` for every axis."""
    idx = np.arange(math.prod(shape)).reshape(shape)
    lo, hi = [], []
    for k in range(len(shape)):
        a = np.take(idx, range(shape[k] - 1), axis=k).ravel()
        b = np.take(idx, range(1, shape[k]), axis=k).ravel()
        lo.append(a)
        hi.append(b)
    if not lo:
        return np.empty(0, int), np.empty(0, int)
    return np.concatenate(lo), np.concatenate(hi)


# ---------------------------------------------------------------- d = 1


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    """Weighted median; the midpoint of the median interval when it is not a point."""
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    cw = np.cumsum(w)
    half = cw[-1] / 2.0
    k = int(np.searchsorted(cw, half))
    if k < len(v) - 1 and math.isclose(cw[k], half, rel_tol=1e-12, abs_tol=0.0):
        return 0.5 * (v[k] + v[k + 1])
    return float(v[k])


def pava_l1(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Nonincreasing L1 fit of a sequence by pooling adjacent violators."""
    blocks: list[list[int]] = []  # [start, stop)
    level: list[float] = []
    for i in range(len(y)):
        blocks.append([i, i + 1])
        level.append(float(y[i]))
        while len(level) > 1 and level[-1] > level[-2]:
            start = blocks[-2][0]
            stop = blocks[-1][1]
            blocks.pop()
            level.pop()
            blocks[-1] = [start, stop]
            level[-1] = _weighted_median(y[start:stop], w[start:stop])
    out = np.empty(len(y))
    for (a, b), v in zip(blocks, level):
        out[a:b] = v
    return out


def pava_l2(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Nonincreasing least-squares fit of a sequence."""
    sums: list[float] = []
    wts: list[float] = []
    sizes: list[int] = []
    for yi, wi in zip(y, w):
        sums.append(yi * wi)
        wts.append(wi)
        sizes.append(1)
        while len(sums) > 1 and sums[-1] / wts[-1] > sums[-2] / wts[-2]:
            s, ww, n = sums.pop(), wts.pop(), sizes.pop()
            sums[-1] += s
            wts[-1] += ww
            sizes[-1] += n
    return np.repeat([s / ww for s, ww in zip(sums, wts)], sizes)


# ---------------------------------------------------------------- d >= 2


@lru_cache(maxsize=32)
def _grid_flow(shape: tuple[int, ...]):
    """Cut graph for a grid: order arcs ``hi -> lo``, then ``s -> j``, then ``j -> t``."""
    n = math.prod(shape)
    lo, hi = _adjacent_pairs(shape)
    cells = np.arange(n)
    s, t = n, n + 1
    tails = np.concatenate([hi, np.full(n, s), cells])
    heads = np.concatenate([lo, cells, np.full(n, t)])
    return lo, hi, FlowGraph(n + 2, tails, heads)


@nb.njit(cache=True)
def _group_flags(z, group, ngroups, lo, hi):
    mono = np.ones(ngroups, dtype=np.bool_)
    for e in range(len(lo)):
        g = group[lo[e]]
        if group[hi[e]] == g and z[hi[e]] > z[lo[e]]:
            mono[g] = False
    return mono


@nb.njit(cache=True)
def _cut(costs, group, active, lo, hi, adj_ptr, adj_arc, to, eps):
    """Upper-label mask solving each active group's binary problem."""
    n = len(costs)
    m = len(lo)
    big = 1.0
    for j in range(n):
        big += abs(costs[j])
    full = np.zeros(2 * (m + 2 * n))
    for e in range(m):
        g = group[lo[e]]
        if group[hi[e]] == g and active[g]:
            full[2 * e] = big
    for j in range(n):
        if active[group[j]]:
            if costs[j] < 0:
                full[2 * (m + j)] = -costs[j]
            elif costs[j] > 0:
                full[2 * (m + n + j)] = costs[j]
    _, res = dinic(n + 2, n, n + 1, adj_ptr, adj_arc, to, full, eps)
    side = source_side(n + 2, n, adj_ptr, adj_arc, to, res, eps)
    return side[:n]


@nb.njit(cache=True)
def _split_groups(group, ngroups, active, upper):
    """Move the lower part of every active group to a fresh id."""
    n_up = np.zeros(ngroups, np.int64)
    n_dn = np.zeros(ngroups, np.int64)
    for j in range(len(group)):
        g = group[j]
        if active[g]:
            if upper[j]:
                n_up[g] += 1
            else:
                n_dn[g] += 1
    new_id = -np.ones(ngroups, np.int64)
    nxt = ngroups
    for g in range(ngroups):
        if active[g] and n_up[g] > 0 and n_dn[g] > 0:
            new_id[g] = nxt
            nxt += 1
    for j in range(len(group)):
        g = group[j]
        if active[g] and not upper[j] and new_id[g] >= 0:
            group[j] = new_id[g]
    return nxt, new_id, n_up, n_dn


@nb.njit(cache=True)
def _l1_partition(z, w, lo, hi, adj_ptr, adj_arc, to, eps):
    n = len(z)
    z = z.copy()
    group = np.zeros(n, np.int64)
    ngroups = 1
    active = np.zeros(n + 1, np.bool_)
    active[0] = True
    split_a = np.zeros(n + 1)
    split_b = np.zeros(n + 1)
    costs = np.zeros(n)
    while True:
        mono = _group_flags(z, group, ngroups, lo, hi)
        any_active = False
        for g in range(ngroups):
            if not active[g]:
                continue
            if mono[g]:
                active[g] = False
                continue
            vals = np.unique(z[group == g])
            if len(vals) == 1:
                active[g] = False
                continue
            k = (len(vals) - 1) // 2
            split_a[g] = vals[k]
            split_b[g] = vals[k + 1]
            any_active = True
        if not any_active:
            break
        for j in range(n):
            g = group[j]
            if active[g]:
                costs[j] = -w[j] if z[j] >= split_b[g] else w[j]
            else:
                costs[j] = 0.0
        upper = _cut(costs, group, active, lo, hi, adj_ptr, adj_arc, to, eps)
        old = group.copy()
        for j in range(n):
            g = old[j]
            if active[g]:
                if upper[j]:
                    z[j] = max(z[j], split_b[g])
                else:
                    z[j] = min(z[j], split_a[g])
        nxt, new_id, n_up, n_dn = _split_groups(group, ngroups, active, upper)
        for g in range(ngroups, nxt):
            active[g] = True
        ngroups = nxt
    return z


@nb.njit(cache=True)
def _l2_partition(y, w, lo, hi, adj_ptr, adj_arc, to, eps, rtol):
    n = len(y)
    out = np.empty(n)
    group = np.zeros(n, np.int64)
    ngroups = 1
    active = np.zeros(n + 1, np.bool_)
    active[0] = True
    mean = np.zeros(n + 1)
    costs = np.zeros(n)
    scale = max(1.0, np.abs(y).max())
    while True:
        mono = _group_flags(y, group, ngroups, lo, hi)
        any_active = False
        for g in range(ngroups):
            if active[g] and mono[g]:
                for j in range(n):
                    if group[j] == g:
                        out[j] = y[j]
                active[g] = False
            elif active[g]:
                sw = 0.0
                swy = 0.0
                for j in range(n):
                    if group[j] == g:
                        sw += w[j]
                        swy += w[j] * y[j]
                mean[g] = swy / sw
                any_active = True
        if not any_active:
            break
        for j in range(n):
            g = group[j]
            c = 0.0
            if active[g]:
                c = w[j] * (mean[g] - y[j])
                if abs(c) <= rtol * scale * w[j]:
                    c = 0.0
            costs[j] = c
        upper = _cut(costs, group, active, lo, hi, adj_ptr, adj_arc, to, eps)
        old = group.copy()
        nxt, new_id, n_up, n_dn = _split_groups(group, ngroups, active, upper)
        for g in range(ngroups):
            if active[g] and new_id[g] < 0:
                # trivial cut: the whole group is one level set
                for j in range(n):
                    if old[j] == g:
                        out[j] = mean[g]
                active[g] = False
        for g in range(ngroups, nxt):
            active[g] = True
        ngroups = nxt
    return out


def _isotonize_l1_partition(theta: np.ndarray, w: np.ndarray) -> np.ndarray:
    lo, hi, fg = _grid_flow(theta.shape)
    z = _l1_partition(theta.ravel().astype(float), w.ravel().astype(float), lo, hi,
                      fg.adj_ptr, fg.adj_arc, fg.to, 1e-12 * float(w.min()))
    return z.reshape(theta.shape)


def _isotonize_l2_partition(theta: np.ndarray, w: np.ndarray) -> np.ndarray:
    lo, hi, fg = _grid_flow(theta.shape)
    y = theta.ravel().astype(float)
    eps = 1e-15 * max(1.0, float(np.abs(y).max())) * float(w.min())
    out = _l2_partition(y, w.ravel().astype(float), lo, hi, fg.adj_ptr, fg.adj_arc, fg.to, eps, 1e-13)
    return out.reshape(theta.shape)


def isotonize_l1(theta: np.ndarray, weights=None) -> np.ndarray:
    """Weighted L1 projection of ``theta`` onto the nonincreasing cone.

    One-dimensional inputs use pooling with midpoint weighted medians; higher
    dimensions take values among the input values.  The minimizer need not
    be unique; the optimal cost is.
    """
    theta = np.asarray(theta, dtype=float)
    _check_finite(theta)
    w = _weights(theta, weights)
    if theta.ndim == 0 or theta.size <= 1:
        return theta.copy()
    if theta.ndim == 1:
        return pava_l1(theta, w)
    if is_monotone(theta, tol=0.0):
        return theta.copy()
    return _isotonize_l1_partition(theta, w)


def isotonize_l2(theta: np.ndarray, weights=None) -> np.ndarray:
    """Weighted least-squares projection onto the nonincreasing cone."""
    theta = np.asarray(theta, dtype=float)
    _check_finite(theta)
    w = _weights(theta, weights)
    if theta.ndim == 0 or theta.size <= 1:
        return theta.copy()
    if theta.ndim == 1:
        return pava_l2(theta, w)
    if is_monotone(theta, tol=0.0):
        return theta.copy()
    return _isotonize_l2_partition(theta, w)


def l1_cost(theta, fit, weights=None) -> float:
    theta = np.asarray(theta, dtype=float)
    return float(np.sum(_weights(theta, weights) * np.abs(np.asarray(fit) - theta)))


def l1_distance_to_cone(theta: np.ndarray) -> float:
    """``sum_j |theta_j - c_j|`` for an L1-optimal monotone ``c``.

    For step densities on a common grid this is the L1 distance between the
    density and its monotone projection.
    """
    theta = np.asarray(theta, dtype=float)
    return l1_cost(theta, isotonize_l1(theta))


# ---------------------------------------------------------------- oracles

BRUTE_FORCE_MAX_CELLS = 12


@lru_cache(maxsize=64)
def _monotone_patterns(shape: tuple[int, ...], levels: int) -> np.ndarray:
    """All monotone arrays with entries in ``range(levels)``, one per row.

    Cells are filled in row-major order, a linear extension of the partial
    order, so each cell is capped by its filled predecessors ``j - e_k``.
    """
    n = math.prod(shape)
    strides = [math.prod(shape[k + 1:]) for k in range(len(shape))]
    pats = np.zeros((1, 0), dtype=np.int16)
    for flat in range(n):
        j = np.unravel_index(flat, shape)
        preds = [flat - strides[k] for k in range(len(shape)) if j[k] > 0]
        if preds:
            cap = pats[:, preds].min(axis=1).astype(np.int64)
        else:
            cap = np.full(len(pats), levels - 1, dtype=np.int64)
        reps = cap + 1
        total = int(reps.sum())
        rows = np.repeat(np.arange(len(pats)), reps)
        offs = np.arange(total) - np.repeat(np.cumsum(reps) - reps, reps)
        pats = np.concatenate([pats[rows], offs[:, None].astype(np.int16)], axis=1)
    return pats


@lru_cache(maxsize=64)
def _dominance(shape: tuple[int, ...], levels: int) -> np.ndarray:
    """``dom[s, p]`` is True when slice state ``p`` may precede ``s`` (``s <= p``)."""
    pats = _monotone_patterns(shape, levels)
    return np.all(pats[:, None, :] <= pats[None, :, :], axis=2)


def _brute_l1(y: np.ndarray, w: np.ndarray, shape) -> np.ndarray:
    """Exact L1 fit over every monotone assignment of input values.

    Dynamic programming along the longest axis; a state is a whole monotone
    slice, and consecutive slices must decrease elementwise.
    """
    vals = np.unique(y)
    m = len(vals)
    y = y.reshape(shape)
    w = w.reshape(shape)
    ax = int(np.argmax(shape))
    y = np.moveaxis(y, ax, 0)
    w = np.moveaxis(w, ax, 0)
    rest = y.shape[1:]
    pats = _monotone_patterns(rest, m)
    dom = _dominance(rest, m)
    ncell = pats.shape[1]
    L = y.shape[0]
    back = np.zeros((L, len(pats)), dtype=np.int64)
    best = None
    for r in range(L):
        table = w[r].reshape(-1, 1) * np.abs(vals[None, :] - y[r].reshape(-1, 1))
        cost = table[np.arange(ncell), pats].sum(axis=1)
        if best is None:
            best = cost
            continue
        masked = np.where(dom, best[None, :], np.inf)
        back[r] = np.argmin(masked, axis=1)
        best = cost + masked[np.arange(len(pats)), back[r]]
    s = int(np.argmin(best))
    rows = [s]
    for r in range(L - 1, 0, -1):
        s = int(back[r, s])
        rows.append(s)
    fit = vals[pats[rows[::-1]]].reshape(y.shape)
    return np.moveaxis(fit, 0, ax)


def _brute_l2(y: np.ndarray, w: np.ndarray, shape, tol: float = 1e-10, max_sweeps: int = 1_000_000) -> np.ndarray:
    """Dual coordinate ascent (Hildreth) on the adjacency constraints."""
    lo, hi = _adjacent_pairs(shape)
    c = y.astype(float).copy()
    lam = np.zeros(len(lo))
    inv = 1.0 / w
    pairs = list(zip(lo.tolist(), hi.tolist()))
    for _ in range(max_sweeps):
        worst = 0.0
        for e, (p, q) in enumerate(pairs):
            viol = c[q] - c[p]
            step = max(-lam[e], viol / (inv[p] + inv[q]))
            if step != 0.0:
                lam[e] += step
                c[q] -= step * inv[q]
                c[p] += step * inv[p]
            worst = max(worst, abs(step))
        if worst < tol * 1e-3:
            break
    return c


def brute_force_isotonic(theta: np.ndarray, p: int = 1, weights=None) -> np.ndarray:
    """Reference solution for small grids (at most 12 cells).

    ``p=1`` minimizes exactly over all monotone assignments taking values in
    the input multiset.  ``p=2`` runs dual coordinate ascent to ``1e-10``.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.size > BRUTE_FORCE_MAX_CELLS:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_CELLS} cells, got {theta.size}")
    _check_finite(theta)
    w = _weights(theta, weights).ravel()
    y = theta.ravel()
    shape = theta.shape if theta.ndim else (1,)
    if y.size <= 1:
        return theta.copy()
    if p == 2:
        return _brute_l2(y, w, shape).reshape(theta.shape)
    if p != 1:
        raise ValueError("p must be 1 or 2")
    return _brute_l1(y, w, tuple(shape)).reshape(theta.shape)
