import numpy as np
import pytest
from scipy.interpolate import RegularGridInterpolator

from ttpoe.core.exceptions import IndexRangeError, InvalidInputError, ShapeMismatchError
from ttpoe.tensor import tt_core as tt
from ttpoe.tensor.grid import Grid
from ttpoe.tensor.tt_core import TTModel


def _low_rank(rng, shape, rank):
    cores = []
    ranks = [1] + [rank] * (len(shape) - 1) + [1]
    for k, n in enumerate(shape):
        cores.append(rng.standard_normal((ranks[k], n, ranks[k + 1])))
    return TTModel(tuple(cores))


@pytest.mark.parametrize("shape", [(7,), (6, 5), (4, 5, 3), (3, 4, 2, 5)])
def test_tt_svd_reconstructs_random_tensor(random_tensor, shape):
    t = random_tensor(shape, low=-1.0)
    m = tt.tt_svd(t, max_rank=1000, eps=1e-12)
    assert m.shape == shape
    np.testing.assert_allclose(tt.full(m), t, atol=1e-8)


def test_tt_svd_respects_eps_error_bound(random_tensor):
    t = random_tensor((6, 6, 6, 6))
    eps = 0.2
    m = tt.tt_svd(t, max_rank=1000, eps=eps)
    error = np.linalg.norm(tt.full(m) - t) / np.linalg.norm(t)
    assert error <= eps + 1e-12
    assert m.max_rank < 36


def test_tt_svd_recovers_exact_ranks(rng):
    exact = _low_rank(rng, (5, 6, 7, 4), rank=2)
    m = tt.tt_svd(tt.full(exact), max_rank=100, eps=1e-12)
    assert m.ranks == (1, 2, 2, 2, 1)


def _smooth_tensor(shape):
    axes = np.meshgrid(*[np.linspace(0.0, 1.0, n) for n in shape], indexing="ij")
    return 1.0 / (1.0 + sum(axes))


def test_coarse_tt_svd_on_large_unfoldings_matches_full_svd(monkeypatch):
    t = _smooth_tensor((80, 80, 70))
    eps = 1e-3
    fast = tt.tt_svd(t, max_rank=1000, eps=eps)
    monkeypatch.setattr(tt, "_GRAM_MIN_SIZE", 10**9)
    reference = tt.tt_svd(t, max_rank=1000, eps=eps)

    for m in (fast, reference):
        error = np.linalg.norm(tt.full(m) - t) / np.linalg.norm(t)
        assert error <= eps
    assert all(abs(a - b) <= 1 for a, b in zip(fast.ranks, reference.ranks))
    for core in fast.cores[:-1]:
        q = core.reshape(-1, core.shape[2])
        np.testing.assert_allclose(q.T @ q, np.eye(q.shape[1]), atol=1e-6)


def test_coarse_tt_svd_recovers_exact_ranks_of_large_tensor(rng):
    m = _low_rank(rng, (70, 90, 80), 3)
    t = tt.full(m)
    learned = tt.tt_svd(t, max_rank=1000, eps=1e-4)
    assert learned.ranks == (1, 3, 3, 1)
    np.testing.assert_allclose(tt.full(learned), t, atol=1e-4 * np.abs(t).max())


def test_tt_svd_caps_rank(random_tensor):
    m = tt.tt_svd(random_tensor((8, 8, 8)), max_rank=3, eps=0.0)
    assert m.max_rank <= 3


def test_tt_svd_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        tt.tt_svd(np.array([]), max_rank=2, eps=0.1)
    with pytest.raises(InvalidInputError):
        tt.tt_svd(np.array([[1.0, np.nan]]), max_rank=2, eps=0.1)
    with pytest.raises(InvalidInputError):
        tt.tt_svd(np.ones((2, 2)), max_rank=0, eps=0.1)
    with pytest.raises(InvalidInputError):
        tt.tt_svd(np.ones((2, 2)), max_rank=2, eps=-1.0)


def test_all_ones_tensor_is_rank_one():
    m = tt.tt_svd(np.ones((4, 5, 6)), max_rank=10, eps=1e-10)
    assert m.ranks == (1, 1, 1, 1)
    np.testing.assert_allclose(tt.full(m), 1.0, atol=1e-12)


def test_element_matches_dense(random_tensor):
    t = random_tensor((3, 4, 5))
    m = tt.tt_svd(t, max_rank=100, eps=0.0)
    for index in [(0, 0, 0), (2, 3, 4), (1, 2, 3)]:
        assert tt.element(m, index) == pytest.approx(t[index], abs=1e-10)


def test_element_out_of_range(random_tensor):
    m = tt.tt_svd(random_tensor((3, 4)), max_rank=10, eps=0.0)
    with pytest.raises(IndexRangeError):
        tt.element(m, (3, 0))
    with pytest.raises(IndexRangeError):
        tt.element(m, (0,))


def test_model_is_immutable(random_tensor):
    m = tt.tt_svd(random_tensor((3, 4)), max_rank=10, eps=0.0)
    with pytest.raises(ValueError):
        m.cores[0][0, 0, 0] = 1.0


def test_model_rejects_rank_mismatch():
    with pytest.raises(ShapeMismatchError):
        TTModel((np.ones((1, 2, 2)), np.ones((3, 2, 1))))
    with pytest.raises(InvalidInputError):
        TTModel((np.ones((2, 2, 1)),))


def test_evaluate_matches_multilinear_interpolation(random_tensor, rng):
    t = random_tensor((5, 6, 4))
    grid = Grid.uniform([(0.0, 1.0), (-1.0, 2.0), (0.5, 0.9)], t.shape)
    m = tt.tt_svd(t, max_rank=100, eps=0.0)
    interp = RegularGridInterpolator([grid.nodes(k) for k in range(3)], t)
    points = rng.uniform(grid.lower, grid.upper, size=(50, 3))
    np.testing.assert_allclose(tt.evaluate_batch(m, grid, points), interp(points), atol=1e-10)
    assert tt.evaluate(m, grid, grid.index_to_coord(np.array([1, 2, 3]))) == pytest.approx(t[1, 2, 3], abs=1e-10)


def test_evaluate_grid_mismatch(random_tensor):
    m = tt.tt_svd(random_tensor((3, 4)), max_rank=10, eps=0.0)
    with pytest.raises(ShapeMismatchError):
        tt.evaluate(m, Grid.uniform([(0, 1), (0, 1)], (3, 5)), [0.5, 0.5])


def test_hadamard_add_scale_match_dense(random_tensor):
    a = random_tensor((3, 4, 5), low=-1.0)
    b = random_tensor((3, 4, 5), low=-1.0)
    ma = tt.tt_svd(a, max_rank=100, eps=0.0)
    mb = tt.tt_svd(b, max_rank=100, eps=0.0)
    np.testing.assert_allclose(tt.full(tt.hadamard(ma, mb)), a * b, atol=1e-8)
    np.testing.assert_allclose(tt.full(tt.add(ma, mb)), a + b, atol=1e-8)
    np.testing.assert_allclose(tt.full(tt.scale(ma, -2.5)), -2.5 * a, atol=1e-8)


def test_hadamard_ranks_multiply(rng):
    a = _low_rank(rng, (4, 4, 4), 2)
    b = _low_rank(rng, (4, 4, 4), 3)
    assert tt.hadamard(a, b).ranks == (1, 6, 6, 1)
    assert tt.add(a, b).ranks == (1, 5, 5, 1)


def test_algebra_shape_mismatch(random_tensor):
    a = tt.tt_svd(random_tensor((3, 4)), max_rank=10, eps=0.0)
    b = tt.tt_svd(random_tensor((4, 3)), max_rank=10, eps=0.0)
    with pytest.raises(ShapeMismatchError):
        tt.hadamard(a, b)
    with pytest.raises(ShapeMismatchError):
        tt.add(a, b)


def test_round_recompresses_without_changing_values(rng):
    a = _low_rank(rng, (5, 6, 5, 4), 2)
    doubled = tt.add(a, a)
    assert doubled.max_rank == 4
    rounded = tt.round(doubled, eps=1e-12, max_rank=100)
    assert rounded.max_rank == 2
    np.testing.assert_allclose(tt.full(rounded), 2.0 * tt.full(a), atol=1e-8)


def test_round_respects_max_rank(random_tensor):
    m = tt.tt_svd(random_tensor((6, 6, 6)), max_rank=100, eps=0.0)
    assert tt.round(m, eps=0.0, max_rank=2).max_rank <= 2


def test_frobenius_norm(random_tensor):
    t = random_tensor((4, 3, 5), low=-1.0)
    m = tt.tt_svd(t, max_rank=100, eps=0.0)
    assert tt.frobenius_norm(m) == pytest.approx(np.linalg.norm(t), rel=1e-10)


def test_core_marginal_matrix():
    core = np.arange(12, dtype=float).reshape(2, 3, 2)
    np.testing.assert_allclose(tt.core_marginal_matrix(core), core.sum(axis=1))


def test_refine_core_interpolates_linearly(random_tensor):
    t = random_tensor((4, 5))
    m = tt.tt_svd(t, max_rank=100, eps=0.0)
    refined = TTModel(tuple(tt.refine_core(core, f) for core, f in zip(m.cores, (3, 2))))
    assert refined.shape == (10, 9)
    coarse = Grid.uniform([(0, 1), (0, 1)], t.shape)
    fine = coarse.refine((3, 2))
    interp = RegularGridInterpolator([coarse.nodes(0), coarse.nodes(1)], t)
    mesh = np.stack(np.meshgrid(fine.nodes(0), fine.nodes(1), indexing="ij"), axis=-1).reshape(-1, 2)
    np.testing.assert_allclose(tt.full(refined).reshape(-1), interp(mesh), atol=1e-10)


def test_refine_core_rejects_bad_factor():
    with pytest.raises(InvalidInputError):
        tt.refine_core(np.ones((1, 3, 1)), 0)
    with pytest.raises(InvalidInputError):
        tt.refine_core(np.ones((1, 1, 1)), 2)
