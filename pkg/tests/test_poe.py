import numpy as np
import pytest
from scipy import stats

from ttpoe.core.exceptions import DegenerateDistributionError, InvalidInputError, ShapeMismatchError
from ttpoe.services.poe import DiagonalGaussian, and_combine, gaussian_core, or_combine, product_policy
from ttpoe.tensor import tt_core as tt
from ttpoe.tensor.grid import Grid
from ttpoe.tensor.tt_core import TTModel
from ttpoe.tensor.tt_dist import TTDistribution, draw, from_indicator, sample_conditional

SQUARE = [(-1.0, 1.0), (-1.0, 1.0)]


def _indicator(predicate, shape=(20, 20)):
    return from_indicator(predicate, Grid.uniform(SQUARE, shape), max_rank=50, eps=1e-10, state_dims=1)


def _complement(f):
    ones = TTModel(tuple(np.ones((1, n, 1)) for n in f.model.shape))
    return TTDistribution(tt.add(ones, tt.scale(f.model, -1.0)), f.grid)


def test_product_policy_matches_dense_product(random_tensor, rng):
    t = random_tensor((11, 11))
    grid = Grid.uniform(SQUARE, t.shape)
    feas = TTDistribution(tt.tt_svd(t, max_rank=100, eps=0.0), grid)
    g = DiagonalGaussian(mean=[0.2], sigma=[0.6])
    policy = product_policy(feas, g)

    dense = t * g.pdf(0, grid.nodes(1))[None, :]
    np.testing.assert_allclose(tt.full(policy.model), dense, atol=1e-10)

    n = 200_000
    samples = draw(policy, n, rng)
    counts = np.bincount(np.ravel_multi_index(tuple(samples.indices.T), t.shape), minlength=t.size)
    expected = dense.reshape(-1) / dense.sum() * n
    assert stats.chisquare(counts, expected).pvalue > 0.001


def test_product_with_unit_feasibility_is_discretized_gaussian(rng):
    grid = Grid.uniform([(-3.0, 3.0)], (61,))
    feas = TTDistribution(TTModel((np.ones((1, 61, 1)),)), grid)
    g = DiagonalGaussian(mean=[0.3], sigma=[0.5])
    samples = draw(product_policy(feas, g), 100_000, rng)
    counts = np.bincount(samples.indices[:, 0], minlength=61)
    weights = g.pdf(0, grid.nodes(0))
    expected = weights / weights.sum() * counts.sum()
    # pool the tails so every expected count is large enough for the test
    keep = expected > 5
    observed = np.append(counts[keep], counts[~keep].sum())
    expected = np.append(expected[keep], expected[~keep].sum())
    assert stats.chisquare(observed, expected).pvalue > 0.001
    assert samples.points.mean() == pytest.approx(0.3, abs=0.01)

    direct = rng.choice(grid.nodes(0), size=20_000, p=weights / weights.sum())
    assert stats.ks_2samp(samples.points[:20_000, 0], direct).pvalue > 0.001


def test_product_policy_keeps_state_cores():
    grid = Grid.uniform(SQUARE, (5, 7))
    feas = from_indicator(lambda s, a: a[:, 0] <= s[:, 0], grid, max_rank=20, eps=1e-12, state_dims=1)
    policy = product_policy(feas, DiagonalGaussian(mean=[0.0], sigma=[1.0]))
    assert policy.model.cores[0] is feas.model.cores[0]
    assert policy.prefix_table(1) is feas.prefix_table(1)


def test_conditional_policy_only_proposes_feasible_actions(rng):
    grid = Grid.uniform(SQUARE, (21, 21))
    feas = from_indicator(lambda s, a: a[:, 0] <= s[:, 0], grid, max_rank=50, eps=1e-12, state_dims=1)
    policy = product_policy(feas, DiagonalGaussian(mean=[0.8], sigma=[0.5]))
    states = np.repeat([[0.0], [-0.5], [0.6]], 300, axis=0)
    drawn = sample_conditional(policy, states, rng)
    assert not drawn.degenerate.any()
    assert np.all(drawn.points[:, 0] <= states[:, 0] + 1e-12)


def test_and_or_truth_tables():
    f1 = _indicator(lambda s, a: s[:, 0] < 0.3)
    f2 = _indicator(lambda s, a: a[:, 0] > -0.2)
    a, b = tt.full(f1.model), tt.full(f2.model)

    both = and_combine(f1, f2, max_rank=50, eps=1e-10)
    either = or_combine(f1, f2, max_rank=50, eps=1e-10)
    np.testing.assert_allclose(tt.full(both.model), np.logical_and(a > 0.5, b > 0.5), atol=1e-8)
    np.testing.assert_allclose(tt.full(either.model), np.logical_or(a > 0.5, b > 0.5), atol=1e-8)


def test_de_morgan():
    f1 = _indicator(lambda s, a: s[:, 0] ** 2 + a[:, 0] ** 2 < 0.5)
    f2 = _indicator(lambda s, a: s[:, 0] > a[:, 0])
    left = 1.0 - tt.full(and_combine(f1, f2, max_rank=100, eps=1e-10).model)
    right = tt.full(or_combine(_complement(f1), _complement(f2), max_rank=100, eps=1e-10).model)
    np.testing.assert_allclose(left, right, atol=1e-7)


def test_disjoint_and_is_empty(rng):
    f1 = _indicator(lambda s, a: s[:, 0] < 0.0)
    f2 = _indicator(lambda s, a: s[:, 0] > 0.5)
    both = and_combine(f1, f2, max_rank=50, eps=1e-10)
    assert tt.frobenius_norm(both.model) == 0.0
    with pytest.raises(DegenerateDistributionError):
        draw(both, 10, rng)


def test_combine_requires_same_grid():
    f1 = _indicator(lambda s, a: s[:, 0] < 0.3)
    f2 = _indicator(lambda s, a: s[:, 0] < 0.3, shape=(20, 21))
    with pytest.raises(ShapeMismatchError):
        and_combine(f1, f2, max_rank=10, eps=1e-10)
    with pytest.raises(ShapeMismatchError):
        or_combine(f1, f2, max_rank=10, eps=1e-10)


def test_gaussian_validation_and_core_shape():
    with pytest.raises(InvalidInputError):
        DiagonalGaussian(mean=[0.0], sigma=[0.0])
    with pytest.raises(ShapeMismatchError):
        DiagonalGaussian(mean=[0.0, 1.0], sigma=[1.0])

    g = DiagonalGaussian(mean=[0.0], sigma=[1.0])
    core = gaussian_core(g, 0, np.linspace(-1.0, 1.0, 11), ranks=(2, 3))
    assert core.shape == (2, 11, 3)
    np.testing.assert_allclose(core[1, :, 2], stats.norm.pdf(np.linspace(-1.0, 1.0, 11)))
    with pytest.raises(ShapeMismatchError):
        product_policy(_indicator(lambda s, a: s[:, 0] < 0.3), DiagonalGaussian(mean=[0, 0, 0], sigma=[1, 1, 1]))
