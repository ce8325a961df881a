import itertools
import math

import numpy as np
import pytest
from scipy import stats

from monodens.grid import BinnedCounts, count_bins, make_grid
from monodens.posterior import (DirichletParams, default_J_max, log_marginal_given_J, posterior_over_J,
                                posterior_params, sample_theta, uniform_prior)


def test_conjugate_update():
    g = make_grid((2, 2))
    counts = BinnedCounts(g, np.array([[3, 0], [1, 2]]))
    post = posterior_params(uniform_prior(g, 0.5), counts)
    np.testing.assert_array_equal(post.conc, [[3.5, 0.5], [1.5, 2.5]])


def test_grid_mismatch_and_bad_conc():
    with pytest.raises(ValueError):
        posterior_params(uniform_prior(make_grid(2, 2)), BinnedCounts(make_grid(3, 2), np.zeros((3, 3), int)))
    with pytest.raises(ValueError):
        DirichletParams(make_grid(2), np.array([1.0, 0.0]))


def test_sample_theta_moments():
    g = make_grid((2, 3))
    conc = np.arange(1.0, 7.0).reshape(2, 3)
    th = sample_theta(DirichletParams(g, conc), np.random.default_rng(0), 40000)
    assert th.shape == (40000, 2, 3)
    np.testing.assert_allclose(th.sum(axis=(1, 2)), 1.0)
    a0 = conc.sum()
    mean = conc / a0
    var = mean * (1 - mean) / (a0 + 1)
    se = np.sqrt(var / 40000)
    assert np.all(np.abs(th.mean(axis=0) - mean) < 4 * se)


def test_sample_theta_small_concentrations_do_not_underflow():
    g = make_grid(50, 1)
    th = sample_theta(DirichletParams(g, np.full(50, 1e-3)), np.random.default_rng(1), 200)
    assert np.all(np.isfinite(th)) and np.allclose(th.sum(axis=1), 1.0)
    # marginal of one coordinate is Beta(a, (k-1)a); compare tail mass loosely
    assert (th[:, 0] > 0.5).mean() < 0.1


def test_sample_theta_matches_scipy_dirichlet():
    conc = np.array([0.3, 2.0, 5.0])
    th = sample_theta(DirichletParams(make_grid(3), conc), np.random.default_rng(3), 20000)
    ref = stats.dirichlet(conc).rvs(20000, random_state=4)
    for k in range(3):
        assert stats.ks_2samp(th[:, k], ref[:, k]).pvalue > 1e-3


def test_log_marginal_single_cell_is_zero():
    g = make_grid(1, 2)
    counts = BinnedCounts(g, np.array([[17]]))
    assert log_marginal_given_J(uniform_prior(g), counts) == pytest.approx(0.0, abs=1e-12)


def test_evidence_sums_to_one_over_sequences():
    # the Polya-urn probabilities of all ordered cell sequences sum to one
    g = make_grid((2, 2))
    prior = uniform_prior(g, 0.7)
    n = 3
    total = 0.0
    for seq in itertools.product(range(4), repeat=n):
        c = np.bincount(seq, minlength=4).reshape(2, 2)
        lm = log_marginal_given_J(prior, BinnedCounts(g, c))
        total += math.exp(lm - n * math.log(4))
    assert total == pytest.approx(1.0, rel=1e-12)


def test_posterior_over_J_prefers_fine_grid_for_step_density():
    rng = np.random.default_rng(5)
    x = rng.random((4000, 1))
    x = np.where(rng.random((4000, 1)) < 0.8, x * 0.5, 0.5 + x * 0.5)
    jp = posterior_over_J(x, J_range=range(1, 6), log_prior=lambda J: 0.0)
    assert jp.probs.sum() == pytest.approx(1.0)
    assert jp.J_values[int(np.argmax(jp.probs))] >= 2
    assert jp.as_dict()[1] < 1e-10


def test_default_J_max():
    assert default_J_max(2000, 2) == math.ceil((2000 / math.log(2000)) ** (1 / 3)) + 2


def test_posterior_over_J_counts_consistent():
    x = np.random.default_rng(0).random((50, 2))
    jp = posterior_over_J(x, J_range=[1, 2, 3])
    g = make_grid(2, 2)
    lm = log_marginal_given_J(uniform_prior(g), count_bins(x, g))
    assert jp.log_marginals[1] == pytest.approx(lm)
