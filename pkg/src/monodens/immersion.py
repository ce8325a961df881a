"""Immersion maps from unrestricted step heights into the monotone cone.

Two families live here.  :func:`project_and_normalize` is the L1 projection
followed by renormalization, used for global inference.  The block maps
(min-max, max-min and their average) give pointwise values from block averages
of ``theta`` over hyperrectangles ``[j1, j2]`` that straddle the cell ``j0``.

Block averages are taken on the theta scale, ``sum(theta[j1:j2]) / #cells``;
multiplying by ``prod(J)`` turns them into density values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .isotonic import isotonize_l1

MAP_KINDS = ("minmax", "maxmin", "average")


def _check_kind(kind: str) -> None:
    if kind not in MAP_KINDS:
        raise ValueError(f"unknown map kind {kind!r}; expected one of {MAP_KINDS}")


def project_and_normalize(theta: np.ndarray) -> np.ndarray:
    """L1-isotonize a normalized draw and rescale it to sum to one."""
    theta = np.asarray(theta, dtype=float)
    fit = isotonize_l1(theta)
    total = fit.sum()
    if not total > 0:
        raise ValueError("isotonized heights sum to zero; cannot renormalize")
    return fit / total


def prefix_sums(theta: np.ndarray, batch_dims: int = 0) -> np.ndarray:
    """Zero-padded cumulative sums over the trailing grid axes."""
    theta = np.asarray(theta, dtype=float)
    pad = [(0, 0)] * batch_dims + [(1, 0)] * (theta.ndim - batch_dims)
    P = np.pad(theta, pad)
    for ax in range(batch_dims, theta.ndim):
        P = np.cumsum(P, axis=ax)
    return P


@dataclass(frozen=True)
class _BlockIndex:
    """Flat prefix-array corners and sizes for all blocks anchored at one cell."""

    corners: tuple[tuple[int, np.ndarray], ...]
    volume: np.ndarray


def _block_index(shape: tuple[int, ...], j0: tuple[int, ...]) -> _BlockIndex:
    d = len(shape)
    # 1-based corner candidates along each axis
    lows = [np.arange(1, j0[k] + 1) for k in range(d)]
    highs = [np.arange(j0[k], shape[k] + 1) for k in range(d)]
    L = np.stack(np.meshgrid(*lows, indexing="ij"), -1).reshape(-1, d)
    H = np.stack(np.meshgrid(*highs, indexing="ij"), -1).reshape(-1, d)
    pshape = tuple(s + 1 for s in shape)
    corners = []
    for eps in itertools.product((0, 1), repeat=d):
        # eps_k = 1 takes the upper corner j2_k, else the lower corner j1_k - 1
        idx = [np.where(e, H[None, :, k], L[:, None, k] - 1) for k, e in enumerate(eps)]
        sign = (-1) ** (d - sum(eps))
        corners.append((sign, np.ravel_multi_index(idx, pshape)))
    volume = np.prod(H[None, :, :] - L[:, None, :] + 1, axis=-1).astype(float)
    return _BlockIndex(tuple(corners), volume)


def block_averages(theta: np.ndarray, j0: Sequence[int]) -> np.ndarray:
    """Averages over every block ``[j1, j2]`` with ``j1 <= j0 <= j2``.

    ``theta`` may carry leading batch axes; the result has shape
    ``(*batch, #j1, #j2)`` with lower corners on the first block axis.
    """
    theta = np.asarray(theta, dtype=float)
    j0 = tuple(int(v) for v in j0)
    d = len(j0)
    shape = theta.shape[theta.ndim - d:]
    if any(not 1 <= a <= b for a, b in zip(j0, shape)):
        raise IndexError(f"cell {j0} outside grid {shape}")
    batch = theta.shape[: theta.ndim - d]
    P = prefix_sums(theta, len(batch)).reshape(batch + (-1,))
    index = _block_index(shape, j0)
    total = np.zeros(batch + index.volume.shape)
    for sign, flat in index.corners:
        total += sign * P[..., flat]
    return total / index.volume


def block_values_all(theta: np.ndarray, j0: Sequence[int]) -> dict[str, np.ndarray]:
    """All three theta-scale block-map values at ``j0`` from one set of block averages."""
    A = block_averages(theta, j0)
    hi = A.max(axis=-1).min(axis=-1)
    lo = A.min(axis=-2).max(axis=-1)
    return {"minmax": hi, "maxmin": lo, "average": 0.5 * (hi + lo)}


def block_values(theta: np.ndarray, j0: Sequence[int], kind: str) -> np.ndarray:
    """Theta-scale block-map value at ``j0`` for a batch of arrays."""
    _check_kind(kind)
    return block_values_all(theta, j0)[kind]


@dataclass(frozen=True)
class BlockValue:
    cell: tuple[int, ...]
    value_theta: float
    value_density: float
    map_kind: str


def block_value(theta: np.ndarray, j0: Sequence[int], kind: str = "minmax") -> BlockValue:
    theta = np.asarray(theta, dtype=float)
    v = float(block_values(theta, j0, kind))
    return BlockValue(tuple(int(a) for a in j0), v, v * math.prod(theta.shape), kind)


def _all_block_averages(theta: np.ndarray) -> np.ndarray:
    """``A[j1, j2]`` over all cell pairs (2d axes); NaN where ``j2`` is not above ``j1``."""
    shape = theta.shape
    d = theta.ndim
    P = prefix_sums(theta)
    A = np.zeros(shape + shape)
    idx = [np.arange(J) for J in shape]
    for eps in itertools.product((0, 1), repeat=d):
        sl = []
        for k, e in enumerate(eps):
            # lower corner j1-1 (0-based j1) on the first d axes, upper j2+1 on the last d
            if e:
                sl.append(idx[k][None, :] + 1)
            else:
                sl.append(idx[k][:, None])
        # broadcast each axis pair into the (j1_k, j2_k) slot
        grids = []
        for k in range(d):
            shape_k = [1] * (2 * d)
            shape_k[k] = shape[k]
            shape_k[d + k] = shape[k]
            grids.append(np.broadcast_to(sl[k], (shape[k], shape[k])).reshape(shape_k))
        sign = (-1) ** (d - sum(eps))
        A += sign * P[tuple(grids)]
    vol = np.ones([1] * (2 * d))
    valid = np.ones([1] * (2 * d), dtype=bool)
    for k in range(d):
        shape_k = [1] * (2 * d)
        shape_k[k] = shape[k]
        shape_k[d + k] = shape[k]
        diff = (idx[k][None, :] - idx[k][:, None]).reshape(shape_k)
        vol = vol * (diff + 1)
        valid = valid & (diff >= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(valid, A / vol, np.nan)


def block_map_full(theta: np.ndarray, kind: str = "minmax") -> np.ndarray:
    """Apply the block map at every cell of the grid.

    Uses running extrema instead of per-cell searches: for min-max, a suffix
    maximum over the upper corner followed by a prefix minimum over the lower
    corner, read off on the diagonal ``j1 = j2 = j0``.
    """
    _check_kind(kind)
    theta = np.asarray(theta, dtype=float)
    if kind == "average":
        return 0.5 * (block_map_full(theta, "minmax") + block_map_full(theta, "maxmin"))
    d = theta.ndim
    A = _all_block_averages(theta)
    lo_axes = range(d)
    hi_axes = range(d, 2 * d)
    if kind == "minmax":
        A = np.where(np.isnan(A), -np.inf, A)
        for ax in hi_axes:
            A = np.flip(np.maximum.accumulate(np.flip(A, ax), axis=ax), ax)
        A = _mask_not_below(A, np.inf)
        for ax in lo_axes:
            A = np.minimum.accumulate(A, axis=ax)
    else:
        A = np.where(np.isnan(A), np.inf, A)
        for ax in lo_axes:
            A = np.minimum.accumulate(A, axis=ax)
        A = _mask_not_below(A, -np.inf)
        for ax in hi_axes:
            A = np.flip(np.maximum.accumulate(np.flip(A, ax), axis=ax), ax)
    cells = np.indices(theta.shape)
    return A[tuple(cells) + tuple(cells)]


def _mask_not_below(A: np.ndarray, fill: float) -> np.ndarray:
    """Fill entries where the first index tuple is not <= the second."""
    d = A.ndim // 2
    shape = A.shape[:d]
    ok = np.ones([1] * (2 * d), dtype=bool)
    for k in range(d):
        shape_k = [1] * (2 * d)
        shape_k[k] = shape[k]
        shape_k[d + k] = shape[k]
        i = np.arange(shape[k])
        ok = ok & (i[None, :] >= i[:, None]).reshape(shape_k)
    return np.where(ok, A, fill)
