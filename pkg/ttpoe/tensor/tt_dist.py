"""
TT models over a grid read as unnormalized densities Pr(x) = |P(x)| / Z

Sampling draws each coordinate from its one-dimensional conditional,
computed from the partial contraction of the leading cores and the cached
suffix of summed trailing cores, so Z is never formed.
"""
import itertools
import logging
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from ttpoe.core.config import settings
from ttpoe.core.exceptions import (
    CapacityError,
    ConstructionError,
    DegenerateDistributionError,
    IndexRangeError,
    InvalidInputError,
    ShapeMismatchError,
)
from ttpoe.tensor import tt_core as tt
from ttpoe.tensor.grid import Grid
from ttpoe.tensor.tt_core import TTModel

logger = logging.getLogger(__name__)

FeasibilityPredicate = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class TTDistribution:
    """TT model plus the grid that gives each core index a coordinate"""

    model: TTModel
    grid: Grid
    _prefix_tables: Dict[int, Optional[np.ndarray]] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.grid.shape != self.model.shape:
            raise ShapeMismatchError(
                f"grid shape {self.grid.shape} does not match model shape {self.model.shape}"
            )

    @property
    def d(self) -> int:
        return self.model.d

    @cached_property
    def suffix_vectors(self) -> Tuple[np.ndarray, ...]:
        """suffix[k] = (sum_i P^k_i) ... (sum_i P^d_i), a vector of length r_{k-1}; suffix[d] = [1]"""
        vectors = [np.ones(1)]
        for core in reversed(self.model.cores):
            vectors.append(tt.core_marginal_matrix(core) @ vectors[-1])
        return tuple(reversed(vectors))

    def with_trailing_cores(self, start: int, cores: Sequence[np.ndarray]) -> "TTDistribution":
        """Same first `start` cores, new cores after; cached tables over the kept cores are shared"""
        dist = TTDistribution(TTModel(self.model.cores[:start] + tuple(cores)), self.grid)
        for j, table in self._prefix_tables.items():
            if j <= start:
                dist._prefix_tables[j] = table
        return dist

    def prefix_table(self, j: int) -> Optional[np.ndarray]:
        """
        Contraction of the leading j cores at every node combination

        Returns an array of shape (n_1 * ... * n_j, r_j), or None when it
        would exceed MAX_PREFIX_TABLE_ENTRIES.
        """
        if j not in self._prefix_tables:
            self._prefix_tables[j] = self._build_prefix_table(j)
        return self._prefix_tables[j]

    def _build_prefix_table(self, j: int) -> Optional[np.ndarray]:
        cores = self.model.cores[:j]
        nodes = 1
        for core in cores:
            nodes *= core.shape[1]
            if nodes * core.shape[2] > settings.MAX_PREFIX_TABLE_ENTRIES:
                return None
        table = cores[0].reshape(cores[0].shape[1], -1)
        for core in cores[1:]:
            r0, n, r1 = core.shape
            table = (table @ core.reshape(r0, n * r1)).reshape(-1, r1)
        table.setflags(write=False)
        return table


@dataclass(frozen=True)
class TTSamples:
    """Grid samples with their node indices and the degenerate-conditional flags"""

    points: np.ndarray
    indices: np.ndarray
    degenerate: np.ndarray


def from_indicator(
    feas: FeasibilityPredicate,
    grid: Grid,
    max_rank: int,
    eps: float,
    refine: Optional[Sequence[int]] = None,
    state_dims: Optional[int] = None,
    max_entries: Optional[int] = None
) -> TTDistribution:
    """
    Learn a feasibility distribution from a 0/1 predicate

    Args:
        feas: Vectorized predicate feas(states (M, d_x), actions (M, d_u)) -> (M,) bool
        grid: Coarse grid, state dims first then action dims
        max_rank: TT-SVD rank cap
        eps: TT-SVD relative accuracy
        refine: Per-dimension refinement factors applied to the learned cores
        state_dims: Number of leading grid dims passed as states (default: all)
        max_entries: Dense capacity limit (default: settings.MAX_DENSE_ENTRIES)

    Returns:
        Distribution over the refined grid
    """
    state_dims = grid.d if state_dims is None else state_dims
    if not 0 <= state_dims <= grid.d:
        raise InvalidInputError(f"state_dims={state_dims} outside [0, {grid.d}]")
    refine = [1] * grid.d if refine is None else list(refine)
    if len(refine) != grid.d:
        raise ShapeMismatchError(f"expected {grid.d} refinement factors, got {len(refine)}")

    started = time.perf_counter()
    dense = indicator_tensor(feas, grid, state_dims, max_entries)
    model = tt.tt_svd(dense, max_rank=max_rank, eps=eps)
    cores = tuple(tt.refine_core(core, f) for core, f in zip(model.cores, refine))
    dist = TTDistribution(TTModel(cores), grid.refine(refine))
    logger.info(
        f"Learned feasibility model: grid {grid.shape} -> {dist.grid.shape}, "
        f"ranks {dist.model.ranks}, {time.perf_counter() - started:.3f}s"
    )
    return dist


def indicator_tensor(
    feas: FeasibilityPredicate,
    grid: Grid,
    state_dims: int,
    max_entries: Optional[int] = None
) -> np.ndarray:
    """Evaluate the predicate at every grid node, one slab of the first axis at a time"""
    max_entries = settings.MAX_DENSE_ENTRIES if max_entries is None else max_entries
    entries = int(np.prod(grid.shape, dtype=np.int64))
    if entries > max_entries:
        required = entries * 8
        raise CapacityError(
            f"dense build of grid {grid.shape} needs {entries} entries "
            f"(~{required / 2**20:.1f} MiB), above the limit of {max_entries}",
            required_bytes=required,
        )

    axes = [grid.nodes(k) for k in range(grid.d)]
    if grid.d == 1:
        slabs = [axes[0][:, None]]
    else:
        rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, grid.d - 1)
        slabs = (np.column_stack([np.full(len(rest), x0), rest]) for x0 in axes[0])

    dense = np.empty(grid.shape)
    flat = dense.reshape(grid.shape[0], -1) if grid.d > 1 else dense.reshape(1, -1)
    for i, points in enumerate(slabs):
        try:
            values = feas(points[:, :state_dims], points[:, state_dims:])
        except Exception as e:
            raise ConstructionError(f"feasibility predicate failed: {e}") from e
        flat[i] = np.asarray(values, dtype=np.float64).reshape(-1)
    return dense


def prob_unnormalized(dist: TTDistribution, x: Sequence[float]) -> float:
    """|P(x)| with linear interpolation between nodes"""
    return abs(tt.evaluate(dist.model, dist.grid, x))


def marginal(dist: TTDistribution, keep: int) -> TTDistribution:
    """Distribution of the leading `keep` coordinates, trailing dims summed out"""
    if not 1 <= keep <= dist.d:
        raise IndexRangeError(f"keep={keep} outside [1, {dist.d}]")
    if keep == dist.d:
        return dist
    cores = dist.model.cores
    last = np.tensordot(cores[keep - 1], dist.suffix_vectors[keep], axes=([2], [0]))[:, :, None]
    return TTDistribution(TTModel(cores[:keep - 1] + (last,)), dist.grid.subgrid(0, keep))


def contract_leading(dist: TTDistribution, leading: np.ndarray) -> np.ndarray:
    """
    Row vectors P^1(y_1) ... P^j(y_j) for a batch of leading coordinates

    Args:
        dist: Distribution with at least j dims
        leading: (N, j) coordinates inside the leading sub-domain

    Returns:
        (N, r_j) array
    """
    leading = np.atleast_2d(np.asarray(leading, dtype=np.float64))
    j = leading.shape[1]
    if j == 0:
        return np.ones((leading.shape[0], 1))
    if j > dist.d:
        raise ShapeMismatchError(f"{j} leading coordinates for a {dist.d}-dim distribution")
    subgrid = dist.grid.subgrid(0, j)
    left, frac = subgrid.locate(leading)
    table = dist.prefix_table(j)
    if table is None:
        rows = np.ones((leading.shape[0], 1))
        for k in range(j):
            rows = tt.contract_rows(rows, dist.model.cores[k], left[:, k], frac[:, k])
        return rows

    shape = np.array(subgrid.shape)
    rows = np.zeros((leading.shape[0], table.shape[1]))
    for corner in itertools.product((0, 1), repeat=j):
        offset = np.array(corner)
        weight = np.prod(np.where(offset == 1, frac, 1.0 - frac), axis=1)
        flat = np.ravel_multi_index(tuple(np.minimum(left + offset, shape - 1).T), tuple(shape))
        rows += weight[:, None] * table[flat]
    return rows


def condition_on_leading(dist: TTDistribution, y1: Sequence[float]) -> TTDistribution:
    """Unnormalized P(y2 | y1) over the trailing d - j dims"""
    y1 = np.atleast_1d(np.asarray(y1, dtype=np.float64))
    j = y1.shape[0]
    if j == 0:
        return dist
    if j >= dist.d:
        raise InvalidInputError(f"conditioning on {j} of {dist.d} dims leaves nothing to sample")
    row = contract_leading(dist, y1[None, :])[0]
    first = np.tensordot(row, dist.model.cores[j], axes=([0], [0]))[None]
    return TTDistribution(TTModel((first,) + dist.model.cores[j + 1:]), dist.grid.subgrid(j))


def _rescale(rows: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(rows), axis=1, keepdims=True)
    return np.divide(rows, peak, out=np.zeros_like(rows), where=peak > 0)


def _inverse_cdf(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(weights, axis=1)
    u = rng.random(weights.shape[0]) * cdf[:, -1]
    choice = np.count_nonzero(cdf <= u[:, None], axis=1)
    return np.minimum(choice, weights.shape[1] - 1)


def _sample_trailing(
    dist: TTDistribution,
    start: int,
    rows: np.ndarray,
    rng: np.random.Generator,
    jitter: bool
) -> TTSamples:
    n = rows.shape[0]
    cores = dist.model.cores
    indices = np.empty((n, dist.d - start), dtype=np.int64)
    degenerate = np.zeros(n, dtype=bool)
    rows = _rescale(rows)
    for k in range(start, dist.d):
        marg = np.tensordot(cores[k], dist.suffix_vectors[k + 1], axes=([2], [0]))
        weights = np.abs(rows @ marg)
        totals = weights.sum(axis=1)
        empty = ~(np.isfinite(totals) & (totals > 0))
        weights[empty] = 1.0
        choice = _inverse_cdf(weights, rng)
        if np.any(empty):
            logger.debug(f"{int(empty.sum())} samples hit an all-zero conditional in dim {k}")
        degenerate |= empty
        indices[:, k - start] = choice
        if k < dist.d - 1:
            rows = _rescale(tt.contract_rows(rows, cores[k], choice))

    grid = dist.grid.subgrid(start)
    points = grid.index_to_coord(indices)
    if jitter:
        points = grid.clip(points + rng.uniform(-0.5, 0.5, size=points.shape) * grid.spacing)
    return TTSamples(points=points, indices=indices, degenerate=degenerate)


def draw(dist: TTDistribution, n: int, rng: np.random.Generator, jitter: bool = False) -> TTSamples:
    """
    Exact samples by the chain of one-dimensional conditionals

    Only an all-zero model is rejected. A marginal that cancels to zero
    while the model does not falls back to uniform draws flagged in
    TTSamples.degenerate.
    """
    if n < 0:
        raise InvalidInputError(f"sample count must be nonnegative, got {n}")
    norm = tt.frobenius_norm(dist.model)
    if not np.isfinite(norm) or norm <= 0.0:
        raise DegenerateDistributionError("distribution has no mass")
    if n == 0:
        return TTSamples(
            points=np.empty((0, dist.d)),
            indices=np.empty((0, dist.d), dtype=np.int64),
            degenerate=np.empty(0, dtype=bool),
        )
    return _sample_trailing(dist, 0, np.ones((n, 1)), rng, jitter)


def sample(dist: TTDistribution, n: int, rng: np.random.Generator, jitter: bool = False) -> np.ndarray:
    """n coordinates drawn from Pr(x) = |P(x)| / Z, shape (n, d)"""
    return draw(dist, n, rng, jitter).points


def sample_conditional(
    dist: TTDistribution,
    leading: np.ndarray,
    rng: np.random.Generator,
    jitter: bool = False
) -> TTSamples:
    """
    One sample of the trailing dims per row of leading coordinates

    Rows whose conditional is all zero fall back to uniform draws and are
    flagged in TTSamples.degenerate.
    """
    leading = np.atleast_2d(np.asarray(leading, dtype=np.float64))
    j = leading.shape[1]
    if j >= dist.d:
        raise InvalidInputError(f"conditioning on {j} of {dist.d} dims leaves nothing to sample")
    rows = contract_leading(dist, leading)
    return _sample_trailing(dist, j, rows, rng, jitter)
