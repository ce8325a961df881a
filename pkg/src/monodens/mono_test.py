"""Posterior-probability tests of coordinate-wise monotonicity.

Both tests look at the L1 distance from a posterior histogram draw to the
monotone cone and reject when the posterior mass of "close to monotone" falls
below ``gamma``.  The fixed test uses one grid and the radius
``M_n n^{-1/(2+d)}``; the adaptive test mixes over the posterior on the bin
count with the radius ``M_0 sqrt(J^d log n / n)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .grid import count_bins, make_grid
from .isotonic import l1_distance_to_cone
from .posterior import posterior_over_J, posterior_params, sample_theta, uniform_prior

MIN_DRAWS_PER_J = 50
NEGLIGIBLE_WEIGHT = 1e-8


@dataclass(frozen=True)
class TestResult:
    posterior_prob_small_distance: float
    threshold: float
    gamma: float
    reject: bool
    J_used: object
    draws: int
    mode: str = "fixed"
    details: dict = field(default_factory=dict)

    # keep pytest from collecting this as a test class
    __test__ = False

    def as_dict(self) -> dict:
        return asdict(self)


def _check_inputs(data, gamma: float, S: int) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or len(data) == 0:
        raise ValueError("need a nonempty (n, d) data array")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if S < 1:
        raise ValueError("need at least one posterior draw")
    return data


def default_test_J(n: int, d: int, const: float = 2.0) -> int:
    """``ceil(const * n^{1/(2+d)})`` bins per axis."""
    return max(1, math.ceil(const * n ** (1.0 / (2 + d))))


def default_M_n(n: int, const: float = 1.0) -> float:
    return const * math.sqrt(math.log(max(n, 2)))


def distances_to_cone(data: np.ndarray, J, S: int, rng: np.random.Generator, alpha: float = 1.0) -> np.ndarray:
    """L1 distances to the cone of ``S`` posterior histogram draws."""
    grid = make_grid(J, data.shape[1])
    post = posterior_params(uniform_prior(grid, alpha), count_bins(data, grid))
    theta = sample_theta(post, rng, S)
    return np.array([l1_distance_to_cone(t) for t in theta])


def test_fixed_J(data, J=None, M_n: float | None = None, gamma: float = 0.5, S: int = 500,
                 seed: int | None = None, mn_const: float = 1.0, J_const: float = 2.0,
                 alpha: float = 1.0) -> TestResult:
    """Reject monotonicity when ``P(d_1(g, cone) <= M_n n^{-1/(2+d)} | data) < gamma``."""
    data = _check_inputs(data, gamma, S)
    n, d = data.shape
    if J is None:
        J = default_test_J(n, d, J_const)
    if M_n is None:
        M_n = default_M_n(n, mn_const)
    radius = M_n * n ** (-1.0 / (2 + d))
    dist = distances_to_cone(data, J, S, np.random.default_rng(seed), alpha)
    prob = float(np.mean(dist <= radius))
    J_used = list(make_grid(J, d).bins)
    return TestResult(prob, radius, gamma, prob < gamma, J_used, S, "fixed",
                      {"M_n": M_n, "mean_distance": float(dist.mean())})


def adaptive_radius(J: int, n: int, d: int, M_0: float) -> float:
    return M_0 * math.sqrt(J**d * math.log(max(n, 2)) / n)


def test_adaptive(data, J_range: Iterable[int] | None = None, log_prior: Callable[[int], float] | None = None,
                  M_0: float = 1.0, gamma: float = 0.5, S: int = 500, seed: int | None = None,
                  alpha: float = 1.0) -> TestResult:
    """Mixture test over the bin count with a J-dependent radius.

    Each J with non-negligible posterior weight gets ``max(50, round(S w_J))``
    draws; the per-J fractions are averaged with the weights ``w_J``.
    """
    data = _check_inputs(data, gamma, S)
    n, d = data.shape
    post_J = posterior_over_J(data, J_range, log_prior, alpha)
    keep = post_J.probs > NEGLIGIBLE_WEIGHT
    w = post_J.probs[keep] / post_J.probs[keep].sum()
    Js = [J for J, k in zip(post_J.J_values, keep) if k]
    rng = np.random.default_rng(seed)
    prob = 0.0
    total = 0
    per_J = {}
    for J, wJ in zip(Js, w):
        S_J = max(MIN_DRAWS_PER_J, int(round(S * wJ)))
        radius = adaptive_radius(J, n, d, M_0)
        frac = float(np.mean(distances_to_cone(data, J, S_J, rng, alpha) <= radius))
        per_J[int(J)] = {"weight": float(wJ), "draws": S_J, "radius": radius, "fraction": frac}
        prob += wJ * frac
        total += S_J
    # the reported threshold is the radius at the posterior-mode J
    J_mode = Js[int(np.argmax(w))]
    return TestResult(prob, adaptive_radius(J_mode, n, d, M_0), gamma, prob < gamma,
                      {str(k): v["weight"] for k, v in per_J.items()}, total, "adaptive",
                      {"M_0": M_0, "per_J": {str(k): v for k, v in per_J.items()}})
