"""Equal-width hyperrectangle partitions of the unit cube.

Cells are addressed by 1-based multi-indices ``j`` with ``1 <= j_k <= J_k``.
Cell ``(1, ..., 1)`` is closed at the origin; every other cell is half-open,
``((j_k - 1)/J_k, j_k/J_k]`` along each axis.  Arrays of per-cell values are
stored as numpy arrays of shape ``J``; flattening is row-major (last axis
fastest).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class OutOfDomainError(ValueError):
    """A point lies outside the unit cube."""


@dataclass(frozen=True)
class GridSpec:
    bins: tuple[int, ...]

    def __post_init__(self):
        bins = tuple(int(b) for b in self.bins)
        if len(bins) == 0:
            raise ValueError("grid needs at least one axis")
        if any(b < 1 for b in bins):
            raise ValueError(f"bin counts must be positive, got {bins}")
        object.__setattr__(self, "bins", bins)

    @property
    def dims(self) -> int:
        return len(self.bins)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.bins

    @property
    def size(self) -> int:
        return math.prod(self.bins)

    @property
    def strides(self) -> tuple[int, ...]:
        out = []
        step = 1
        for b in reversed(self.bins):
            out.append(step)
            step *= b
        return tuple(reversed(out))

    def flat_index(self, j: Sequence[int]) -> int:
        """Row-major flat position of the 1-based multi-index ``j``."""
        if len(j) != self.dims:
            raise ValueError("multi-index has wrong length")
        if any(not 1 <= jk <= b for jk, b in zip(j, self.bins)):
            raise IndexError(f"multi-index {tuple(j)} outside [1:{self.bins}]")
        return sum((jk - 1) * s for jk, s in zip(j, self.strides))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < self.size:
            raise IndexError(f"flat index {flat} outside [0, {self.size})")
        out = []
        for s in self.strides:
            q, flat = divmod(flat, s)
            out.append(q + 1)
        return tuple(out)

    def cell_bounds(self, j: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        j = np.asarray(j, dtype=float)
        J = np.asarray(self.bins, dtype=float)
        return (j - 1) / J, j / J


def make_grid(J: Sequence[int] | int, dims: int | None = None) -> GridSpec:
    """Build a grid from per-axis bin counts (or one count repeated ``dims`` times)."""
    if np.isscalar(J):
        J = (int(J),) * (dims or 1)
    return GridSpec(tuple(J))


def _check_domain(x: np.ndarray) -> None:
    bad = ~np.all((x >= 0.0) & (x <= 1.0), axis=-1)
    if np.any(bad):
        row = int(np.flatnonzero(bad)[0])
        raise OutOfDomainError(f"row {row} lies outside [0,1]^d: {x[row].tolist()}")


def bin_indices(points: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Vectorized 1-based cell multi-indices for an ``(n, d)`` array of points."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[1] != grid.dims:
        raise ValueError(f"expected points of shape (n, {grid.dims}), got {x.shape}")
    if np.any(np.isnan(x)):
        raise OutOfDomainError("NaN coordinate")
    _check_domain(x)
    J = np.asarray(grid.bins)
    j = np.ceil(x * J).astype(np.int64)
    # ceil(x*J) can be off by one when x*J rounds across an integer; the
    # float boundaries m/J are the authority.
    j = np.where(x <= (j - 1) / J, j - 1, j)
    j = np.where(x > j / J, j + 1, j)
    return np.clip(j, 1, J)


def bin_index(x: Sequence[float], grid: GridSpec) -> tuple[int, ...]:
    """Cell ``j`` with ``x`` in ``I_j``; ``x_k = 0`` maps to ``j_k = 1``."""
    return tuple(int(v) for v in bin_indices(np.asarray(x, dtype=float)[None, :], grid)[0])


@dataclass(frozen=True)
class BinnedCounts:
    grid: GridSpec
    counts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def count_bins(data: np.ndarray, grid: GridSpec) -> BinnedCounts:
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        return BinnedCounts(grid, np.zeros(grid.shape, dtype=np.int64))
    j = bin_indices(data, grid)
    flat = np.ravel_multi_index(tuple((j - 1).T), grid.shape)
    counts = np.bincount(flat, minlength=grid.size).reshape(grid.shape)
    return BinnedCounts(grid, counts)


def cell_midpoints(grid: GridSpec, nodes: int) -> list[np.ndarray]:
    """Per-axis midpoint-rule nodes, ``nodes`` per cell, in cell order."""
    out = []
    for J in grid.bins:
        m = J * nodes
        out.append((np.arange(m) + 0.5) / m)
    return out


def bin_average(f: Callable[[np.ndarray], np.ndarray], grid: GridSpec, nodes: int = 8) -> np.ndarray:
    """Cell integrals ``b_j`` of ``f`` by the tensor midpoint rule.

    ``f`` maps an ``(m, d)`` array of points to ``m`` values.  The result has
    the grid's shape and sums to (approximately) the integral of ``f``.
    """
    if nodes < 1:
        raise ValueError("need at least one quadrature node per cell")
    axes = cell_midpoints(grid, nodes)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = np.asarray(f(pts), dtype=float).reshape([len(a) for a in axes])
    # fold each axis into (cell, node) and sum the nodes
    shape = []
    for J in grid.bins:
        shape += [J, nodes]
    vals = vals.reshape(shape).sum(axis=tuple(range(1, 2 * grid.dims, 2)))
    return vals / (grid.size * nodes**grid.dims)


def read_points_csv(path: str, dims: int | None = None) -> np.ndarray:
    """Read an ``(n, d)`` array of points in ``[0,1]^d`` from CSV.

    A first row that does not parse as numbers is treated as a header.
    """
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader):
            row = [c.strip() for c in row if c.strip() != ""]
            if not row:
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                if lineno == 0 and not rows:
                    continue
                raise ValueError(f"{path}: line {lineno + 1} is not numeric: {row}")
            rows.append(vals)
    if not rows:
        return np.empty((0, dims or 0))
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise ValueError(f"{path}: rows have differing numbers of columns {sorted(width)}")
    x = np.asarray(rows, dtype=float)
    if dims is not None and x.shape[1] != dims:
        raise ValueError(f"{path}: expected {dims} columns, found {x.shape[1]}")
    _check_domain(x)
    return x
