"""Conjugate Dirichlet posterior over histogram step heights."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import gammaln, logsumexp

from .grid import BinnedCounts, GridSpec, count_bins, make_grid


@dataclass(frozen=True)
class DirichletParams:
    grid: GridSpec
    conc: np.ndarray

    def __post_init__(self):
        conc = np.asarray(self.conc, dtype=float)
        if conc.shape != self.grid.shape:
            raise ValueError(f"concentration shape {conc.shape} does not match grid {self.grid.shape}")
        if not np.all(conc > 0):
            raise ValueError("Dirichlet concentrations must be positive")
        object.__setattr__(self, "conc", conc)

    @property
    def mean(self) -> np.ndarray:
        return self.conc / self.conc.sum()


def uniform_prior(grid: GridSpec, alpha: float = 1.0) -> DirichletParams:
    return DirichletParams(grid, np.full(grid.shape, float(alpha)))


def posterior_params(prior: DirichletParams, counts: BinnedCounts) -> DirichletParams:
    if prior.grid != counts.grid:
        raise ValueError(f"grid mismatch: prior {prior.grid.bins} vs counts {counts.grid.bins}")
    return DirichletParams(prior.grid, prior.conc + counts.counts)


def sample_theta(params: DirichletParams, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw normalized step heights through independent Gamma variables.

    Returns an array of the grid's shape, or ``(size, *shape)`` when ``size``
    is given.  Shapes below one are drawn in log space
    (``G(a) = G(a+1) U^{1/a}``) so tiny concentrations cannot underflow.
    """
    conc = params.conc
    batch = () if size is None else (int(size),)
    shape = batch + conc.shape
    small = conc < 1.0
    boosted = np.where(small, conc + 1.0, conc)
    logv = np.log(rng.standard_gamma(boosted, size=shape))
    if np.any(small):
        u = rng.random(size=shape)
        logv = logv + np.where(small, np.log(u) / conc, 0.0)
    axes = tuple(range(len(batch), len(shape)))
    logv -= logv.max(axis=axes, keepdims=True)
    v = np.exp(logv)
    return v / v.sum(axis=axes, keepdims=True)


def _log_beta(a: np.ndarray) -> float:
    return float(gammaln(a).sum() - gammaln(a.sum()))


def log_marginal_given_J(prior: DirichletParams, counts: BinnedCounts) -> float:
    """Log evidence of the binned sample under the histogram-Dirichlet model.

    Includes the ``prod(J)^n`` density-scaling factor so values are comparable
    across grids.
    """
    if prior.grid != counts.grid:
        raise ValueError("grid mismatch")
    n = counts.n
    if n == 0:
        return 0.0
    log_scale = n * sum(math.log(J) for J in prior.grid.bins)
    return log_scale + _log_beta(prior.conc + counts.counts) - _log_beta(prior.conc)


def default_log_prior_J(d: int, b: float = 1.0) -> Callable[[int], float]:
    """Unnormalized ``log pi(J) = -b J^d log J``."""
    return lambda J: -b * J**d * math.log(J)


def default_J_max(n: int, d: int) -> int:
    if n < 3:
        return 3
    return math.ceil((n / math.log(n)) ** (1.0 / (d + 1))) + 2


@dataclass(frozen=True)
class JPosterior:
    J_values: tuple[int, ...]
    probs: np.ndarray
    log_marginals: np.ndarray

    def as_dict(self) -> dict[int, float]:
        return {J: float(p) for J, p in zip(self.J_values, self.probs)}


def posterior_over_J(
    data: np.ndarray,
    J_range: Iterable[int] | None = None,
    log_prior: Callable[[int], float] | None = None,
    alpha: float = 1.0,
) -> JPosterior:
    """Posterior over a common per-axis bin count ``J``.

    Weights are ``pi(J) m(D | J)`` normalized over ``J_range``; the Dirichlet
    concentration is ``alpha`` in every cell for every ``J``.
    """
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    if J_range is None:
        J_range = range(1, default_J_max(n, d) + 1)
    J_values = tuple(int(J) for J in J_range)
    if not J_values:
        raise ValueError("J_range is empty")
    log_prior = log_prior or default_log_prior_J(d)
    lm = np.empty(len(J_values))
    lw = np.empty(len(J_values))
    for i, J in enumerate(J_values):
        grid = make_grid(J, d)
        lm[i] = log_marginal_given_J(uniform_prior(grid, alpha), count_bins(data, grid))
        lw[i] = lm[i] + log_prior(J)
    if not np.any(np.isfinite(lw)):
        raise FloatingPointError("all J weights underflowed; widen the log-prior window")
    probs = np.exp(lw - logsumexp(lw))
    return JPosterior(J_values, probs, lm)
