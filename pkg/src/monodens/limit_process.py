"""Monte Carlo for the limiting drifted Gaussian field and its Z_B laws.

The fields ``H1`` and ``H2`` have covariance ``prod_k (u_k ^ u'_k + v_k ^ v'_k)``
on ``u, v >= 0``.  That kernel is the one of white noise integrated over the
box ``prod_k [-u_k, v_k]``, which is how they are generated: independent
Gaussian cell masses on a lattice of intervals, then box sums via prefix
arrays.

Each axis uses the nodes ``{h/2, h, 2h, ..., c}`` with ``h = 1/res``.  The
origin is excluded (the denominator ``u + v`` vanishes there) and ``h/2`` stands
in for it, which keeps the index set a product and so preserves
``inf sup >= sup inf`` on every realization.
"""

from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numba as nb
import numpy as np

ZB_SCHEMA = "monodens.zb/1"
MEMORY_BUDGET = 512 * 2**20  # bytes per batch of noise fields
LEVELS = np.round(np.linspace(0.0, 1.0, 1001), 3)
RECOMMENDED_MINIMUM = {"lattice_res": 4, "outer_draws": 500, "inner_draws": 100}


class CoarseSettingsWarning(UserWarning):
    pass


def derivative_set(eta: Sequence[int]) -> list[tuple[int, ...]]:
    """Multi-indices ``m >= 0`` with ``sum m_k / eta_k = 1``."""
    eta = tuple(int(e) for e in eta)
    out = []
    for m in itertools.product(*[range(e + 1) for e in eta]):
        if abs(sum(mk / ek for mk, ek in zip(m, eta)) - 1.0) < 1e-12:
            out.append(m)
    return out


@dataclass(frozen=True)
class LimitParams:
    eta: tuple[int, ...] = (1, 1)
    g0_at_x0: float = 1.0
    derivs: Mapping[tuple[int, ...], float] = field(default_factory=dict)
    lattice_c: float = 4.0
    lattice_res: int = 4
    outer_draws: int = 2000
    inner_draws: int = 500

    def __post_init__(self):
        eta = tuple(int(e) for e in self.eta)
        if not eta or any(e < 1 for e in eta):
            raise ValueError("eta entries must be positive integers")
        object.__setattr__(self, "eta", eta)
        M = derivative_set(eta)
        derivs = {tuple(int(a) for a in k): float(v) for k, v in dict(self.derivs).items()}
        if not derivs:
            # the standard normalization: pure derivatives of -1, no mixed terms
            derivs = {m: (-1.0 if sum(1 for a in m if a) == 1 else 0.0) for m in M}
        unknown = set(derivs) - set(M)
        if unknown:
            raise ValueError(f"derivatives {sorted(unknown)} are not in the leading set {M}")
        for k, e in enumerate(eta):
            pure = tuple(e if i == k else 0 for i in range(len(eta)))
            if not derivs.get(pure, 0.0) < 0:
                raise ValueError(f"pure derivative {pure} must be negative for a nonincreasing density")
        object.__setattr__(self, "derivs", derivs)
        if not self.g0_at_x0 > 0:
            raise ValueError("g0(x0) must be positive")
        if not self.lattice_c > 0:
            raise ValueError("lattice_c must be positive")
        if self.lattice_res < 1:
            raise ValueError("lattice_res must be at least 1")
        if abs(self.lattice_c * self.lattice_res - round(self.lattice_c * self.lattice_res)) > 1e-9:
            raise ValueError("lattice_c * lattice_res must be an integer")
        coarse = [f"{k}={getattr(self, k)} < {v}" for k, v in RECOMMENDED_MINIMUM.items() if getattr(self, k) < v]
        if coarse:
            # allowed for refinement diagnostics and smoke runs, but not table-grade
            warnings.warn("coarse limit-process settings: " + ", ".join(coarse), CoarseSettingsWarning, stacklevel=3)

    @property
    def d(self) -> int:
        return len(self.eta)


def axis_nodes(params: LimitParams) -> np.ndarray:
    """Per-axis lattice coordinates ``h/2, h, 2h, ..., c``."""
    h = 1.0 / params.lattice_res
    K = int(round(params.lattice_c * params.lattice_res))
    return np.concatenate([[h / 2], h * np.arange(1, K + 1)])


@dataclass(frozen=True)
class Lattice:
    """Index bookkeeping shared by every field on one lattice."""

    nodes: np.ndarray         # per-axis coordinates, length K+1
    d: int
    cell_sd: np.ndarray       # sd of the white-noise mass of each lattice cell
    u_corner: np.ndarray      # (Nu, 2^d) flat prefix offsets from the lower corners
    v_corner: np.ndarray      # (Nv, 2^d) flat prefix offsets from the upper corners
    signs: np.ndarray         # (2^d,)
    u: np.ndarray             # (Nu, d) coordinates
    v: np.ndarray             # (Nv, d)

    @property
    def n_u(self) -> int:
        return len(self.u)

    @property
    def field_shape(self) -> tuple[int, int]:
        return (len(self.u), len(self.v))


def build_lattice(params: LimitParams) -> Lattice:
    t = axis_nodes(params)
    K = len(t) - 1
    d = params.d
    edges = np.concatenate([-t[::-1], t])      # 2K+2 edges, 2K+1 cells per axis
    widths = np.diff(edges)
    m = len(widths)
    vol = np.ones([m] * d)
    for k in range(d):
        shape = [1] * d
        shape[k] = m
        vol = vol * widths.reshape(shape)
    # prefix index along an axis: lower corner of u-node a is edge K-a, upper of v-node b is K+1+b
    lo = K - np.arange(K + 1)
    hi = K + 1 + np.arange(K + 1)
    pstrides = [(m + 1) ** (d - 1 - k) for k in range(d)]
    U = np.array(list(itertools.product(range(K + 1), repeat=d)))
    eps_list = list(itertools.product((0, 1), repeat=d))
    u_corner = np.zeros((len(U), len(eps_list)), np.int64)
    v_corner = np.zeros((len(U), len(eps_list)), np.int64)
    signs = np.empty(len(eps_list))
    for e, eps in enumerate(eps_list):
        signs[e] = (-1) ** (d - sum(eps))
        for k in range(d):
            if eps[k]:
                v_corner[:, e] += pstrides[k] * hi[U[:, k]]
            else:
                u_corner[:, e] += pstrides[k] * lo[U[:, k]]
    coords = t[U]
    return Lattice(t, d, np.sqrt(vol), u_corner, v_corner, signs, coords, coords.copy())


def _check_budget(lat: Lattice, batch: int) -> None:
    need = 8 * batch * lat.cell_sd.size * 2
    if need > MEMORY_BUDGET:
        raise MemoryError(f"noise batch needs {need / 2**20:.0f} MiB; lower lattice_res or lattice_c")


def _noise_prefix(lat: Lattice, rng: np.random.Generator, batch: int) -> np.ndarray:
    z = rng.standard_normal((batch,) + lat.cell_sd.shape) * lat.cell_sd
    P = np.zeros((batch,) + tuple(s + 1 for s in lat.cell_sd.shape))
    P[(slice(None),) + (slice(1, None),) * lat.d] = z
    for ax in range(1, lat.d + 1):
        np.cumsum(P, axis=ax, out=P)
    return P.reshape(batch, -1)


@nb.njit(cache=True)
def _box_sums(P, u_corner, v_corner, signs):
    B = P.shape[0]
    nu = u_corner.shape[0]
    nv = v_corner.shape[0]
    out = np.empty((B, nu, nv))
    for b in range(B):
        for i in range(nu):
            for j in range(nv):
                s = 0.0
                for e in range(signs.shape[0]):
                    s += signs[e] * P[b, u_corner[i, e] + v_corner[j, e]]
                out[b, i, j] = s
    return out


def simulate_H(params: LimitParams, rng: np.random.Generator, size: int | None = None,
               lattice: Lattice | None = None) -> np.ndarray:
    """Fields ``H(u, v)`` on the lattice, shape ``(Nu, Nv)`` or ``(size, Nu, Nv)``.

    Rows follow ``lattice.u`` and columns ``lattice.v``.
    """
    lat = lattice or build_lattice(params)
    B = 1 if size is None else int(size)
    _check_budget(lat, B)
    H = _box_sums(_noise_prefix(lat, rng, B), lat.u_corner, lat.v_corner, lat.signs)
    return H[0] if size is None else H


def drift_field(params: LimitParams, lattice: Lattice | None = None) -> np.ndarray:
    """``sum_m d^m g0 / (m+1)! prod_k (v^{m+1} - (-u)^{m+1}) / (u+v)`` on the lattice."""
    lat = lattice or build_lattice(params)
    u = lat.u[:, None, :]
    v = lat.v[None, :, :]
    out = np.zeros(lat.field_shape)
    for m, coef in params.derivs.items():
        if coef == 0.0:
            continue
        m = np.asarray(m)
        term = (v ** (m + 1) - (-u) ** (m + 1)) / (u + v)
        fact = math.prod(math.factorial(int(a) + 1) for a in m)
        out += coef / fact * np.prod(term, axis=-1)
    return out


def noise_scale(params: LimitParams, lattice: Lattice | None = None) -> np.ndarray:
    """``sqrt(g0(x0)) / prod_k (u_k + v_k)`` on the lattice."""
    lat = lattice or build_lattice(params)
    return math.sqrt(params.g0_at_x0) / np.prod(lat.u[:, None, :] + lat.v[None, :, :], axis=-1)


def evaluate_U(h1: np.ndarray, h2: np.ndarray, params: LimitParams,
               lattice: Lattice | None = None) -> np.ndarray:
    lat = lattice or build_lattice(params)
    return (h1 + h2) * noise_scale(params, lat) + drift_field(params, lat)


@nb.njit(cache=True)
def _extrema(P, h1, scale, drift, u_corner, v_corner, signs):
    """Lattice inf-sup and sup-inf of U for each H2 prefix array in ``P``."""
    B = P.shape[0]
    nu = u_corner.shape[0]
    nv = v_corner.shape[0]
    infsup = np.empty(B)
    supinf = np.empty(B)
    colmin = np.empty(nv)
    for b in range(B):
        for j in range(nv):
            colmin[j] = np.inf
        best_row = np.inf
        for i in range(nu):
            rowmax = -np.inf
            for j in range(nv):
                s = 0.0
                for e in range(signs.shape[0]):
                    s += signs[e] * P[b, u_corner[i, e] + v_corner[j, e]]
                U = (h1[i, j] + s) * scale[i, j] + drift[i, j]
                if U > rowmax:
                    rowmax = U
                if U < colmin[j]:
                    colmin[j] = U
            if rowmax < best_row:
                best_row = rowmax
        infsup[b] = best_row
        supinf[b] = colmin.max()
    return infsup, supinf


def functionals(h1: np.ndarray, params: LimitParams, rng: np.random.Generator, inner: int,
                lattice: Lattice | None = None, chunk: int = 250) -> tuple[np.ndarray, np.ndarray]:
    """``(inf_u sup_v U, sup_v inf_u U)`` for ``inner`` fresh ``H2`` fields."""
    lat = lattice or build_lattice(params)
    scale = noise_scale(params, lat)
    drift = drift_field(params, lat)
    a, b = [], []
    done = 0
    while done < inner:
        B = min(chunk, inner - done)
        _check_budget(lat, B)
        P = _noise_prefix(lat, rng, B)
        x, y = _extrema(P, h1, scale, drift, lat.u_corner, lat.v_corner, lat.signs)
        a.append(x)
        b.append(y)
        done += B
    return np.concatenate(a), np.concatenate(b)


def zb_sample(h1: np.ndarray, params: LimitParams, rng: np.random.Generator,
              lattice: Lattice | None = None, drift_shift: float = 0.0) -> np.ndarray:
    """Conditional probabilities ``(Z1, Z2, Z3)`` given ``h1``.

    ``Z1`` uses the inf-sup, ``Z2`` the sup-inf and ``Z3`` their average.
    ``drift_shift`` adds a constant to U (used to probe the extremes).
    """
    if params.inner_draws < 1:
        raise ValueError("need at least one inner draw")
    x, y = functionals(h1, params, rng, params.inner_draws, lattice)
    x = x + drift_shift
    y = y + drift_shift
    return np.array([(x <= 0).mean(), (y <= 0).mean(), (0.5 * (x + y) <= 0).mean()])


MAP_FOR_LEVEL = {1: "minmax", 2: "maxmin", 3: "average"}


@dataclass
class ZbEntry:
    """Empirical law of ``Z_B`` for one (eta, map) pair, stored as a quantile grid."""

    eta: tuple[int, ...]
    map_kind: str
    quantiles: np.ndarray          # values at LEVELS
    outer: int
    inner: int
    lattice_c: float
    lattice_res: int
    seed: int | None = None
    samples: np.ndarray | None = None

    @classmethod
    def from_samples(cls, eta, map_kind, z, outer, inner, c, res, seed=None) -> "ZbEntry":
        z = np.sort(np.asarray(z, dtype=float))
        q = np.quantile(z, LEVELS, method="inverted_cdf")
        return cls(tuple(eta), map_kind, q, outer, inner, c, res, seed, z)

    def cdf(self, z: float) -> float:
        if self.samples is not None:
            return float(np.searchsorted(self.samples, z, side="right") / len(self.samples))
        # largest level whose quantile does not exceed z
        k = np.searchsorted(self.quantiles, z, side="right")
        return float(LEVELS[k - 1]) if k > 0 else 0.0

    def quantile(self, p: float) -> float:
        if self.samples is not None:
            return float(np.quantile(self.samples, p, method="inverted_cdf"))
        return float(np.interp(p, LEVELS, self.quantiles))

    def one_sided_coverage(self, credibility: float = 0.95) -> float:
        """``P(Z <= credibility)``: limit coverage of the upper bound ``Q_{1-credibility}``."""
        return self.cdf(credibility)

    def lower_one_sided_coverage(self, credibility: float = 0.95) -> float:
        """``P(Z >= 1 - credibility)``: limit coverage of the lower bound ``Q_{credibility}``."""
        level = round(1.0 - credibility, 12)
        if self.samples is not None:
            return float((self.samples >= level).mean())
        return 1.0 - self.cdf(np.nextafter(level, -np.inf))

    def central_levels(self, target: float) -> tuple[float, float]:
        """Posterior-probability levels ``(a, b)`` with ``P(a <= Z <= b) = target``.

        Equal tails; for the average map the two tails are pooled, using the
        symmetry of its law about one half, so ``b = 1 - a``.
        """
        tail = (1.0 - target) / 2
        if self.map_kind == "average":
            a = 0.5 * (self.quantile(tail) + 1.0 - self.quantile(1.0 - tail))
            return a, 1.0 - a
        return self.quantile(tail), self.quantile(1.0 - tail)


@dataclass
class ZbTable:
    entries: dict[tuple[tuple[int, ...], str], ZbEntry] = field(default_factory=dict)

    def add(self, entry: ZbEntry) -> None:
        self.entries[(entry.eta, entry.map_kind)] = entry

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["schema", "eta", "map_kind", "level", "quantile", "outer", "inner",
                        "lattice_c", "lattice_res", "seed"])
            for (eta, kind), e in sorted(self.entries.items()):
                for lv, q in zip(LEVELS, e.quantiles):
                    w.writerow([ZB_SCHEMA, ",".join(map(str, eta)), kind, f"{lv:.3f}", f"{q:.6f}",
                                e.outer, e.inner, f"{e.lattice_c:g}", e.lattice_res,
                                "" if e.seed is None else e.seed])

    @classmethod
    def from_csv(cls, path: str) -> "ZbTable":
        rows: dict[tuple, list] = {}
        meta: dict[tuple, dict] = {}
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                if r["schema"] != ZB_SCHEMA:
                    raise ValueError(f"{path}: unsupported schema {r['schema']!r}")
                key = (tuple(int(a) for a in r["eta"].split(",")), r["map_kind"])
                rows.setdefault(key, []).append((float(r["level"]), float(r["quantile"])))
                meta[key] = r
        table = cls()
        for key, pairs in rows.items():
            pairs.sort()
            if len(pairs) != len(LEVELS):
                raise ValueError(f"{path}: entry {key} has {len(pairs)} levels, expected {len(LEVELS)}")
            m = meta[key]
            table.add(ZbEntry(key[0], key[1], np.array([q for _, q in pairs]), int(m["outer"]),
                              int(m["inner"]), float(m["lattice_c"]), int(m["lattice_res"]),
                              int(m["seed"]) if m["seed"] else None))
        return table


def zb_draws(params: LimitParams, seed: int | None = None, progress=None) -> np.ndarray:
    """``(outer, 3)`` array of ``(Z1, Z2, Z3)``; outer draw ``i`` has its own stream."""
    lat = build_lattice(params)
    children = np.random.SeedSequence(seed).spawn(params.outer_draws)
    Z = np.empty((params.outer_draws, 3))
    for i, ss in enumerate(children):
        rng = np.random.default_rng(ss)
        h1 = simulate_H(params, rng, lattice=lat)
        Z[i] = zb_sample(h1, params, rng, lat)
        if progress is not None:
            progress(i + 1, params.outer_draws)
    return Z


def zb_distribution(params: LimitParams, seed: int | None = None, progress=None) -> ZbTable:
    """Simulate ``Z_B`` for all three maps and collect them into a table."""
    if params.outer_draws < 1:
        raise ValueError("need at least one outer draw")
    Z = zb_draws(params, seed, progress)
    table = ZbTable()
    for l, kind in MAP_FOR_LEVEL.items():
        table.add(ZbEntry.from_samples(params.eta, kind, Z[:, l - 1], params.outer_draws,
                                       params.inner_draws, params.lattice_c, params.lattice_res, seed))
    return table


def summarize(table: ZbTable, eta: Iterable[int], credibility: float = 0.95, target: float = 0.95) -> dict:
    """One-sided coverages and the recalibrated level pair for a simulated table."""
    eta = tuple(eta)
    out = {}
    for kind in MAP_FOR_LEVEL.values():
        e = table.entries[(eta, kind)]
        out[kind] = {
            "upper_bound_coverage": e.one_sided_coverage(credibility),
            "lower_bound_coverage": e.lower_one_sided_coverage(credibility),
            "central_levels": e.central_levels(target),
        }
    return out
