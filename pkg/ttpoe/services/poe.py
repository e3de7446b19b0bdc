"""
Products of experts in TT form

The Gaussian optimality expert enters as per-slice scalings of the action
cores; feasibility experts combine by AND (Hadamard product) and OR
(a + b - a*b), each followed by rounding.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ttpoe.core.exceptions import InvalidInputError, ShapeMismatchError
from ttpoe.tensor import tt_core as tt
from ttpoe.tensor.tt_core import TTModel
from ttpoe.tensor.tt_dist import TTDistribution

logger = logging.getLogger(__name__)

# Combined models whose norm falls below this fraction of the operand norms are empty
_EMPTY_RTOL = 1e-10


@dataclass(frozen=True)
class DiagonalGaussian:
    """Independent per-dimension Gaussian over actions"""

    mean: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        if mean.shape != sigma.shape or mean.ndim != 1:
            raise ShapeMismatchError(f"mean {mean.shape} and sigma {sigma.shape} must be matching vectors")
        if not np.all(sigma > 0):
            raise InvalidInputError("sigma must be strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def pdf(self, m: int, nodes: np.ndarray) -> np.ndarray:
        """Density of dimension m evaluated at the given nodes"""
        z = (np.asarray(nodes, dtype=np.float64) - self.mean[m]) / self.sigma[m]
        return np.exp(-0.5 * z ** 2) / (self.sigma[m] * np.sqrt(2.0 * np.pi))


def gaussian_core(
    g: DiagonalGaussian,
    m: int,
    nodes: np.ndarray,
    ranks: Tuple[int, int] = (1, 1)
) -> np.ndarray:
    """
    Tensor form of the m-th Gaussian factor

    Args:
        g: Gaussian expert
        m: Action dimension
        nodes: Node coordinates of that action axis
        ranks: (r_{k-1}, r_k) of the feasibility core it multiplies

    Returns:
        Read-only (r_{k-1}, n, r_k) array, constant across the rank axes
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    if not np.all(np.isfinite(nodes)):
        raise InvalidInputError("grid nodes must be finite")
    values = g.pdf(m, nodes)
    return np.broadcast_to(values[None, :, None], (ranks[0], nodes.shape[0], ranks[1]))


def product_policy(
    feas: TTDistribution,
    g: DiagonalGaussian,
    action_offset: Optional[int] = None
) -> TTDistribution:
    """
    Core-level product of a feasibility distribution and a Gaussian

    The Gaussian scales the trailing g.dim (action) cores slice by slice.
    `feas` may already be conditioned on the state, or be the joint model, in
    which case its leading state cores are left untouched and contracted at
    sampling time.
    """
    offset = feas.d - g.dim if action_offset is None else action_offset
    if offset < 0 or offset + g.dim != feas.d:
        raise ShapeMismatchError(
            f"{g.dim} action dims at offset {offset} do not fit a {feas.d}-dim distribution"
        )
    if offset > 0:
        feas.prefix_table(offset)
    cores = []
    for m in range(g.dim):
        k = offset + m
        core = feas.model.cores[k]
        gauss = gaussian_core(g, m, feas.grid.nodes(k), (core.shape[0], core.shape[2]))
        cores.append(core * gauss)
    return feas.with_trailing_cores(offset, cores)


def _check_same_grid(f1: TTDistribution, f2: TTDistribution) -> None:
    if f1.grid != f2.grid:
        raise ShapeMismatchError("experts must share the same grid")


def _zero_if_negligible(model: TTModel, reference: float) -> TTModel:
    if tt.frobenius_norm(model) <= _EMPTY_RTOL * reference:
        logger.info("Combined feasibility model is empty")
        return TTModel(tuple(np.zeros((1, n, 1)) for n in model.shape))
    return model


def and_combine(f1: TTDistribution, f2: TTDistribution, max_rank: int, eps: float) -> TTDistribution:
    """Intersection of feasible sets: Hadamard product, then rounding"""
    _check_same_grid(f1, f2)
    product = tt.round(tt.hadamard(f1.model, f2.model), eps=eps, max_rank=max_rank)
    reference = tt.frobenius_norm(f1.model) * tt.frobenius_norm(f2.model)
    return TTDistribution(_zero_if_negligible(product, reference), f1.grid)


def or_combine(f1: TTDistribution, f2: TTDistribution, max_rank: int, eps: float) -> TTDistribution:
    """Union of feasible sets: f1 + f2 - f1*f2, then rounding"""
    _check_same_grid(f1, f2)
    overlap = tt.scale(tt.hadamard(f1.model, f2.model), -1.0)
    union = tt.round(tt.add(tt.add(f1.model, f2.model), overlap), eps=eps, max_rank=max_rank)
    return TTDistribution(union, f1.grid)
