"""Simulation studies: test densities, L1 tables and coverage tables.

The four test densities on the unit square are products of nonincreasing
marginals.  ``g1`` and ``g2`` have Beta marginals: ``9(1-x)^2(1-y)^2`` is the
product of two Beta(1, 3) densities ``3(1-x)^2``, and ``2.25 sqrt((1-x)(1-y))``
the product of two Beta(1, 3/2) densities ``1.5 sqrt(1-x)``.  ``g3`` and
``g4`` are products of logistic curves and are sampled by rejection from the
uniform with envelope 4.

Every replicate draws from its own stream, keyed by (seed, density, n,
replicate), so tables are reproducible and individual rows can be rerun.
"""

from __future__ import annotations

import csv
import io
import math
import zlib
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .credible import default_pointwise_J, immersion_samples, interval_from_samples, MissingZbEntry
from .grid import cell_midpoints, count_bins, make_grid
from .immersion import MAP_KINDS, project_and_normalize
from .posterior import posterior_params, sample_theta, uniform_prior

TABLE_SCHEMA = "monodens.table/1"


def _logistic_density(slope: float) -> Callable[[np.ndarray], np.ndarray]:
    def g(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return 4.0 / np.prod(1.0 + np.exp(slope * (x - 0.5)), axis=-1)
    return g


DENSITIES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "g1": lambda x: 9.0 * np.prod((1.0 - np.atleast_2d(x)) ** 2, axis=-1),
    "g2": lambda x: 2.25 * np.sqrt(np.prod(1.0 - np.atleast_2d(x), axis=-1)),
    "g3": _logistic_density(12.0),
    "g4": _logistic_density(4.0),
    # increasing in both coordinates; used as a non-monotone alternative
    "inc": lambda x: 4.0 * np.prod(np.atleast_2d(x), axis=-1),
}
BETA_MARGINALS = {"g1": (1.0, 3.0), "g2": (1.0, 1.5)}
ENVELOPE = 4.0
MIN_ACCEPTANCE = 0.01


def density(name: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return DENSITIES[name]
    except KeyError:
        raise ValueError(f"unknown density {name!r}; known: {sorted(DENSITIES)}") from None


def sample_density(name: str, n: int, rng: np.random.Generator, d: int = 2) -> np.ndarray:
    """``n`` i.i.d. points from a named density on ``[0,1]^d``."""
    if name in BETA_MARGINALS:
        a, b = BETA_MARGINALS[name]
        return rng.beta(a, b, size=(n, d))
    g = density(name)
    out = np.empty((0, d))
    tried = 0
    while len(out) < n:
        m = max(64, int(1.3 * (n - len(out)) * ENVELOPE))
        x = rng.random((m, d))
        keep = rng.random(m) * ENVELOPE <= g(x)
        tried += m
        out = np.vstack([out, x[keep]])
        if tried > 1000 and len(out) < MIN_ACCEPTANCE * tried:
            raise RuntimeError(f"rejection acceptance below {MIN_ACCEPTANCE:.0%} for {name!r}")
    return out[:n]


def check_normalized(name: str, d: int = 2, nodes: int = 400, tol: float = 1e-3) -> float:
    """Midpoint-rule integral of a density; raises if it is off by more than ``tol``."""
    axes = [(np.arange(nodes) + 0.5) / nodes] * d
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], -1)
    total = float(density(name)(pts).mean())
    if abs(total - 1.0) > tol:
        raise ValueError(f"density {name!r} integrates to {total:.5f}, not 1")
    return total


class StepL1:
    """Exact-in-the-quadrature L1 distance between step densities and a fixed ``g0``.

    Each cell holds ``nodes^d`` midpoint values of ``g0``, sorted, with running
    sums.  For a constant ``c`` on the cell, ``int |c - g0|`` then needs only
    the count of values below ``c``.
    """

    def __init__(self, g0: Callable[[np.ndarray], np.ndarray], grid, nodes: int = 16):
        self.grid = grid
        axes = cell_midpoints(grid, nodes)
        mesh = np.meshgrid(*axes, indexing="ij")
        vals = np.asarray(g0(np.stack([m.ravel() for m in mesh], -1)), dtype=float)
        vals = vals.reshape([len(a) for a in axes])
        shape = []
        for J in grid.bins:
            shape += [J, nodes]
        vals = vals.reshape(shape)
        d = grid.dims
        order = list(range(0, 2 * d, 2)) + list(range(1, 2 * d, 2))
        vals = vals.transpose(order).reshape(grid.size, nodes**d)
        self.sorted = np.sort(vals, axis=1)
        self.m = nodes**d
        self.cum = np.concatenate([np.zeros((grid.size, 1)), np.cumsum(self.sorted, axis=1)], axis=1)
        self.cell_volume = 1.0 / grid.size
        lo, hi = float(self.sorted.min()), float(self.sorted.max())
        self._lo, self._span = lo - 1.0, hi - lo + 3.0
        self._keys = (self.sorted - self._lo + self._span * np.arange(grid.size)[:, None]).ravel()

    def distance(self, heights: np.ndarray) -> np.ndarray:
        """L1 distances for density heights of shape ``(..., *grid.shape)``."""
        h = np.asarray(heights, dtype=float)
        batch = h.shape[: h.ndim - self.grid.dims]
        c = h.reshape(batch + (self.grid.size,))
        cells = np.arange(self.grid.size)
        q = np.clip(c, self._lo + 0.5, self._lo + self._span - 0.5) - self._lo + self._span * cells
        k = np.searchsorted(self._keys, q, side="left") - cells * self.m
        below = np.take_along_axis(np.broadcast_to(self.cum, batch + self.cum.shape),
                                   k[..., None], axis=-1)[..., 0] if batch else self.cum[cells, k]
        total = self.cum[:, -1]
        per_cell = c * k - below + (total - below) - c * (self.m - k)
        return per_cell.sum(axis=-1) * self.cell_volume / self.m


def _rng_for(seed: int, *key) -> np.random.Generator:
    words = [int(seed)] + [zlib.crc32(str(k).encode()) for k in key]
    return np.random.default_rng(np.random.SeedSequence(words))


def global_J(n: int) -> int:
    return math.ceil(2 * n ** 0.25)


@dataclass
class SimConfig:
    density: str = "g1"
    ns: tuple[int, ...] = (500, 1000, 2000)
    replicates: int = 50
    draws: int = 500
    seed: int = 0
    J_rule: str = "global"
    J: int | None = None
    d: int = 2
    alpha: float = 1.0
    x0: tuple[float, ...] = (0.5, 0.5)
    credibilities: tuple[float, ...] = (0.99, 0.95, 0.90)
    maps: tuple[str, ...] = MAP_KINDS
    recalibrate: bool = True
    quad_nodes: int = 16

    def __post_init__(self):
        self.ns = tuple(int(n) for n in self.ns)
        self.x0 = tuple(float(v) for v in self.x0)
        self.credibilities = tuple(float(c) for c in self.credibilities)
        self.maps = tuple(self.maps)
        if any(n < 1 for n in self.ns):
            raise ValueError("sample sizes must be positive")
        if self.replicates < 1 or self.draws < 1:
            raise ValueError("replicates and draws must be positive")
        if self.J_rule not in ("global", "pointwise", "explicit"):
            raise ValueError(f"unknown J rule {self.J_rule!r}")
        if self.J_rule == "explicit" and not self.J:
            raise ValueError("explicit J rule needs J")
        for m in self.maps:
            if m not in MAP_KINDS:
                raise ValueError(f"unknown map {m!r}")
        density(self.density)

    def bins(self, n: int) -> int:
        if self.J_rule == "explicit":
            return int(self.J)
        if self.J_rule == "pointwise":
            return default_pointwise_J(n, self.d)
        return global_J(n)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class GlobalRow:
    density: str
    n: int
    J: int
    L1: float
    L1_sd: float
    SD: float
    SD_sd: float
    L1_star: float
    L1_star_sd: float
    SD_star: float
    SD_star_sd: float
    replicates: int
    draws: int


def global_replicate(cfg: SimConfig, n: int, rep: int, metric: StepL1 | None = None):
    """Per-draw L1 distances ``(unrestricted, immersion)`` for one replicate."""
    J = cfg.bins(n)
    grid = make_grid(J, cfg.d)
    metric = metric or StepL1(density(cfg.density), grid, cfg.quad_nodes)
    rng = _rng_for(cfg.seed, "global", cfg.density, n, rep)
    data = sample_density(cfg.density, n, rng, cfg.d)
    post = posterior_params(uniform_prior(grid, cfg.alpha), count_bins(data, grid))
    theta = sample_theta(post, rng, cfg.draws)
    star = np.stack([project_and_normalize(t) for t in theta])
    scale = grid.size
    return metric.distance(theta * scale), metric.distance(star * scale)


def run_global_table(cfg: SimConfig, progress=None) -> list[GlobalRow]:
    """L1 distance of unrestricted and immersion draws to the true density."""
    check_normalized(cfg.density, cfg.d)
    rows = []
    for n in cfg.ns:
        grid = make_grid(cfg.bins(n), cfg.d)
        metric = StepL1(density(cfg.density), grid, cfg.quad_nodes)
        stats = np.empty((cfg.replicates, 4))
        for r in range(cfg.replicates):
            a, b = global_replicate(cfg, n, r, metric)
            stats[r] = a.mean(), a.std(ddof=1) if len(a) > 1 else 0.0, b.mean(), b.std(ddof=1) if len(b) > 1 else 0.0
            if progress:
                progress(n, r + 1, cfg.replicates)
        m = stats.mean(axis=0).tolist()
        s = (stats.std(axis=0, ddof=1) if cfg.replicates > 1 else np.zeros(4)).tolist()
        rows.append(GlobalRow(cfg.density, n, grid.bins[0], m[0], s[0], m[1], s[1], m[2], s[2], m[3], s[3],
                              cfg.replicates, cfg.draws))
    return rows


@dataclass
class CoverageRow:
    density: str
    n: int
    J: int
    map_kind: str
    credibility: float
    recalibrated: bool
    level_hi: float
    level_lo: float
    coverage: float
    length: float
    length_sd: float
    replicates: int
    draws: int


def coverage_replicate(cfg: SimConfig, n: int, rep: int) -> dict[str, np.ndarray]:
    rng = _rng_for(cfg.seed, "coverage", cfg.density, n, rep)
    data = sample_density(cfg.density, n, rng, cfg.d)
    kinds = tuple(dict.fromkeys(list(cfg.maps) + (["average"] if cfg.recalibrate else [])))
    values, _, _ = immersion_samples(data, cfg.x0, cfg.bins(n), S=cfg.draws, rng=rng,
                                     alpha=cfg.alpha, kinds=kinds)
    return values


def run_coverage_table(cfg: SimConfig, zb_table=None, progress=None) -> list[CoverageRow]:
    """Coverage and length of two-sided intervals for ``g0(x0)``.

    Raw rows use central quantiles for each map; "adjusted" rows use the
    average map with recalibrated levels.  Credibilities without a known
    recalibration (neither built in nor in ``zb_table``) get no adjusted row.
    """
    check_normalized(cfg.density, cfg.d)
    truth = float(density(cfg.density)(np.asarray([cfg.x0]))[0])
    eta = (1,) * cfg.d
    rows = []
    for n in cfg.ns:
        J = cfg.bins(n)
        specs = [(m, c, False) for m in cfg.maps for c in cfg.credibilities]
        if cfg.recalibrate:
            for c in cfg.credibilities:
                try:
                    interval_from_samples([0.0], c, True, eta, "average", zb_table)
                except MissingZbEntry:
                    continue
                specs.append(("average", c, True))
        hits = {s: [] for s in specs}
        lengths = {s: [] for s in specs}
        levels = {}
        for r in range(cfg.replicates):
            values = coverage_replicate(cfg, n, r)
            for s in specs:
                kind, cred, recal = s
                lo, hi, lv = interval_from_samples(values[kind], cred, recal, eta, kind, zb_table)
                hits[s].append(lo <= truth <= hi)
                lengths[s].append(hi - lo)
                levels[s] = lv
            if progress:
                progress(n, r + 1, cfg.replicates)
        for s in specs:
            kind, cred, recal = s
            L = np.asarray(lengths[s])
            rows.append(CoverageRow(cfg.density, n, J, "adjusted" if recal else kind, cred, recal,
                                    float(levels[s][0]), float(levels[s][1]), float(np.mean(hits[s])), float(L.mean()),
                                    float(L.std(ddof=1)) if len(L) > 1 else 0.0, cfg.replicates, cfg.draws))
    return rows


def rows_to_csv(rows: Sequence, path_or_buf=None) -> str:
    """CSV text with a leading schema column; also written to ``path_or_buf`` if given."""
    buf = io.StringIO()
    if rows:
        fields = ["schema"] + list(asdict(rows[0]))
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([TABLE_SCHEMA] + [_fmt(v) for v in asdict(r).values()])
    text = buf.getvalue()
    if isinstance(path_or_buf, str):
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)
    elif path_or_buf is not None:
        path_or_buf.write(text)
    return text


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return v


def global_markdown(rows: Sequence[GlobalRow]) -> str:
    out = ["| g0 | n | J | L1 | SD | L1* | SD* |", "|---|---:|---:|---|---|---|---|"]
    for r in rows:
        out.append(f"| {r.density} | {r.n} | {r.J} | {r.L1:.3f}({r.L1_sd:.3f}) | {r.SD:.3f}({r.SD_sd:.3f}) "
                   f"| {r.L1_star:.3f}({r.L1_star_sd:.3f}) | {r.SD_star:.3f}({r.SD_star_sd:.3f}) |")
    return "\n".join(out) + "\n"


def coverage_markdown(rows: Sequence[CoverageRow]) -> str:
    creds = sorted({r.credibility for r in rows}, reverse=True)
    head = "| n | map | " + " | ".join(f"C {c:.2f} | L {c:.2f}" for c in creds) + " |"
    out = [head, "|" + "---|" * (2 + 2 * len(creds))]
    keys = list(dict.fromkeys((r.n, r.map_kind) for r in rows))
    for n, kind in keys:
        cells = []
        for c in creds:
            match = [r for r in rows if r.n == n and r.map_kind == kind and abs(r.credibility - c) < 1e-12]
            if match:
                r = match[0]
                cells.append(f"{r.coverage:.2f} | {r.length:.2f}({r.length_sd:.2f})")
            else:
                cells.append("- | -")
        out.append(f"| {n} | {kind} | " + " | ".join(cells) + " |")
    return "\n".join(out) + "\n"


# Reference values reported for the original studies, used by the acceptance
# suite and the comparison scripts.
REFERENCE_L1_STAR = {
    "g1": {500: 0.264, 1000: 0.220, 2000: 0.182, 5000: 0.143, 10000: 0.119},
    "g2": {500: 0.185, 1000: 0.156, 2000: 0.130, 5000: 0.104, 10000: 0.087},
    "g3": {500: 0.256, 1000: 0.208, 2000: 0.166, 5000: 0.125, 10000: 0.101},
    "g4": {500: 0.199, 1000: 0.168, 2000: 0.142, 5000: 0.112, 10000: 0.094},
}
REFERENCE_L1 = {
    "g1": {500: 0.397, 1000: 0.337, 2000: 0.280, 5000: 0.217, 10000: 0.180},
    "g2": {500: 0.429, 1000: 0.375, 2000: 0.320, 5000: 0.254, 10000: 0.214},
    "g3": {500: 0.393, 1000: 0.336, 2000: 0.277, 5000: 0.213, 10000: 0.177},
    "g4": {500: 0.418, 1000: 0.364, 2000: 0.311, 5000: 0.244, 10000: 0.207},
}
REFERENCE_G4_N1000_COVERAGE = {
    "minmax": {0.99: 1.00, 0.95: 0.98, 0.90: 0.94},
    "maxmin": {0.99: 1.00, 0.95: 0.97, 0.90: 0.93},
    "average": {0.99: 1.00, 0.95: 0.97, 0.90: 0.94},
    "adjusted": {0.99: 0.99, 0.95: 0.95, 0.90: 0.89},
}
