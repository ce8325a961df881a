"""Pointwise credible intervals from block-map immersion posteriors.

Quantile levels follow the upper-tail convention: ``Q_gamma`` is the
``(1 - gamma)``-quantile, so ``Q_0.025`` sits near the top of the sample.
A two-sided interval at credibility ``1 - gamma`` is ``[Q_{1-gamma/2},
Q_{gamma/2}]``; recalibration replaces the pair ``(1 - gamma/2, gamma/2)`` with
levels chosen from the distribution of the limiting posterior mass ``Z``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .grid import bin_index, count_bins, make_grid
from .immersion import MAP_KINDS, block_values, block_values_all
from .posterior import posterior_params, sample_theta, uniform_prior

# Levels quoted for eta = (1, 1) in the literature on these limits.  They are
# the only built-in entries; anything else has to come from ``monodens zb``.
BUILTIN_PAIRS: dict[tuple[tuple[int, ...], str], dict[float, tuple[float, float]]] = {
    ((1, 1), "average"): {0.95: (0.959, 0.041), 0.99: (0.990, 0.010)},
}
BUILTIN_ONE_SIDED_95: dict[tuple[int, ...], dict[str, float]] = {
    (1, 1): {"minmax": 0.966, "maxmin": 0.975, "average": 0.968},
}


class MissingZbEntry(KeyError):
    pass


def _order_stat_rank(p: float, S: int) -> int:
    # ceil with a little slack so 0.95 * 100 lands on 95, not 96
    return min(S, max(1, math.ceil(p * S - 1e-9)))


def immersion_quantile(samples, gamma: float) -> float:
    """Left-continuous ``(1 - gamma)``-quantile: the ``ceil((1-gamma) S)``-th order statistic."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("empty sample")
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    return float(x[_order_stat_rank(1.0 - gamma, x.size) - 1])


def _eta_key(eta) -> tuple[int, ...]:
    return tuple(int(e) for e in eta)


def recalibrate_level(target: float, eta: Sequence[int] = (1, 1), map_kind: str = "average",
                      zb_table=None) -> tuple[float, float]:
    """Quantile levels ``(gamma_upper, gamma_lower)`` giving asymptotic coverage ``target``.

    The interval is ``[Q_{gamma_upper}, Q_{gamma_lower}]``.  With ``zb_table``
    (a :class:`monodens.limit_process.ZbTable`) the levels come from the
    simulated law of ``Z``; otherwise from the built-in pairs.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target coverage must lie in (0, 1)")
    key = (_eta_key(eta), map_kind)
    if zb_table is not None:
        if key not in zb_table.entries:
            raise MissingZbEntry(f"no Z_B entry for eta={key[0]}, map={map_kind}; "
                                 f"generate one with `monodens zb --eta {','.join(map(str, key[0]))}`")
        lo, hi = zb_table.entries[key].central_levels(target)
        return 1.0 - lo, 1.0 - hi
    pairs = BUILTIN_PAIRS.get(key, {})
    for t, pair in pairs.items():
        if abs(t - target) < 1e-12:
            return pair
    raise MissingZbEntry(f"no built-in recalibration for target={target}, eta={key[0]}, map={map_kind}; "
                         f"simulate one with `monodens zb --eta {','.join(map(str, key[0]))}`")


@dataclass(frozen=True)
class CredibleInterval:
    x0: tuple[float, ...]
    lower: float
    upper: float
    credibility: float
    map_kind: str
    recalibrated: bool
    levels: tuple[float, float]
    draws: int
    J: tuple[int, ...]
    cell: tuple[int, ...]
    extra: dict = field(default_factory=dict)

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def as_dict(self) -> dict:
        out = asdict(self)
        out["length"] = self.length
        return out


def default_pointwise_J(n: int, d: int) -> int:
    """``ceil(n^{1/(2+d)} sqrt(log n))`` bins per axis."""
    return math.ceil(n ** (1.0 / (2 + d)) * math.sqrt(math.log(max(n, 2))))


def immersion_samples(data: np.ndarray, x0: Sequence[float], J=None, map_kind: str = "average",
                      S: int = 1000, rng: np.random.Generator | None = None, alpha: float = 1.0,
                      kinds: Sequence[str] | None = None):
    """Density-scale block-map values at ``x0`` for ``S`` posterior draws.

    Returns ``(values, grid, cell)``; ``values`` is a dict keyed by map kind
    when ``kinds`` is given, else a single array.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or len(data) == 0:
        raise ValueError("need a nonempty (n, d) data array")
    n, d = data.shape
    x0 = tuple(float(v) for v in x0)
    if len(x0) != d:
        raise ValueError(f"x0 has {len(x0)} coordinates but data has {d}")
    if any(not 0.0 < v < 1.0 for v in x0):
        raise ValueError(f"x0={x0} must be an interior point of the unit cube")
    if J is None:
        J = default_pointwise_J(n, d)
    grid = make_grid(J, d)
    cell = bin_index(x0, grid)
    rng = rng if rng is not None else np.random.default_rng()
    post = posterior_params(uniform_prior(grid, alpha), count_bins(data, grid))
    theta = sample_theta(post, rng, S)
    scale = float(grid.size)
    if kinds is None:
        return block_values(theta, cell, map_kind) * scale, grid, cell
    allv = block_values_all(theta, cell)
    return {k: allv[k] * scale for k in kinds}, grid, cell


def interval_from_samples(values, credibility: float, recalibrate: bool = False, eta=None,
                          map_kind: str = "average", zb_table=None) -> tuple[float, float, tuple[float, float]]:
    """Endpoints ``[Q_{g_up}, Q_{g_lo}]`` and the level pair that produced them."""
    # round away float noise so 1 - 0.95 gives exactly the 0.05 level pair
    gamma = round(1.0 - credibility, 12)
    if recalibrate:
        levels = recalibrate_level(credibility, eta, map_kind, zb_table)
    else:
        levels = (1.0 - gamma / 2, gamma / 2)
    lo = immersion_quantile(values, levels[0])
    hi = immersion_quantile(values, levels[1])
    return lo, hi, levels


def ci_pointwise(data: np.ndarray, x0: Sequence[float], J=None, gamma: float = 0.05,
                 map_kind: str = "average", S: int = 1000, seed: int | None = None,
                 recalibrate: bool = False, eta: Sequence[int] | None = None, zb_table=None,
                 alpha: float = 1.0) -> CredibleInterval:
    """Credible interval for the density value at ``x0`` from block-map draws."""
    if map_kind not in MAP_KINDS:
        raise ValueError(f"unknown map kind {map_kind!r}")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if S < 1:
        raise ValueError("need at least one posterior draw")
    d = np.asarray(data).shape[1]
    eta = tuple(eta) if eta is not None else (1,) * d
    values, grid, cell = immersion_samples(data, x0, J, map_kind, S, np.random.default_rng(seed), alpha)
    lo, hi, levels = interval_from_samples(values, 1.0 - gamma, recalibrate, eta, map_kind, zb_table)
    return CredibleInterval(
        x0=tuple(float(v) for v in x0), lower=lo, upper=hi, credibility=1.0 - gamma,
        map_kind=map_kind, recalibrated=recalibrate, levels=levels, draws=S,
        J=grid.bins, cell=cell,
    )
