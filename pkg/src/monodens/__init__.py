"""Bayesian estimation, testing and pointwise inference for multivariate monotone densities."""

__version__ = "0.1.0"

from .credible import CredibleInterval, ci_pointwise, immersion_quantile, recalibrate_level
from .grid import BinnedCounts, GridSpec, bin_index, count_bins, make_grid
from .immersion import BlockValue, block_map_full, block_value, project_and_normalize
from .isotonic import brute_force_isotonic, is_monotone, isotonize_l1, isotonize_l2, l1_distance_to_cone
from .mono_test import TestResult, test_adaptive, test_fixed_J
from .posterior import DirichletParams, posterior_over_J, posterior_params, sample_theta, uniform_prior

__all__ = [
    "BinnedCounts", "BlockValue", "CredibleInterval", "DirichletParams", "GridSpec", "TestResult",
    "bin_index", "block_map_full", "block_value", "brute_force_isotonic", "ci_pointwise", "count_bins",
    "immersion_quantile", "is_monotone", "isotonize_l1", "isotonize_l2", "l1_distance_to_cone",
    "make_grid", "posterior_over_J", "posterior_params", "project_and_normalize", "recalibrate_level",
    "sample_theta", "test_adaptive", "test_fixed_J", "uniform_prior",
]
