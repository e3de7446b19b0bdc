"""
Rectangular grids mapping continuous coordinates to core indices
"""
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from ttpoe.core.exceptions import DomainError, InvalidInputError, ShapeMismatchError
from ttpoe.schemas.grid import GridDim

# Relative slack for points that sit on a bound up to round-off
_BOUND_RTOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Product of uniformly spaced axes; node coordinates include both bounds"""

    dims: Tuple[GridDim, ...]

    def __post_init__(self):
        dims = tuple(self.dims)
        if not dims:
            raise InvalidInputError("a grid needs at least one dimension")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def uniform(cls, bounds: Iterable[Tuple[float, float]], nodes: Sequence[int]) -> "Grid":
        return cls(tuple(GridDim(lower=lo, upper=hi, nodes=n) for (lo, hi), n in zip(bounds, nodes)))

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(dim.nodes for dim in self.dims)

    @property
    def lower(self) -> np.ndarray:
        return np.array([dim.lower for dim in self.dims])

    @property
    def upper(self) -> np.ndarray:
        return np.array([dim.upper for dim in self.dims])

    @property
    def spacing(self) -> np.ndarray:
        return np.array([dim.spacing for dim in self.dims])

    def nodes(self, k: int) -> np.ndarray:
        dim = self.dims[k]
        return np.linspace(dim.lower, dim.upper, dim.nodes)

    def index_to_coord(self, index: np.ndarray) -> np.ndarray:
        """Node coordinates for integer indices; accepts (d,) or (N, d)"""
        index = np.asarray(index)
        return self.lower + index * self.spacing

    def coord_to_index(self, x: np.ndarray) -> np.ndarray:
        """Nearest node index for coordinates inside the domain"""
        x = self._check_points(x)
        idx = np.rint((x - self.lower) / self.spacing).astype(int)
        return np.clip(idx, 0, np.array(self.shape) - 1)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        slack = _BOUND_RTOL * (self.upper - self.lower)
        return np.all((x >= self.lower - slack) & (x <= self.upper + slack), axis=1)

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=np.float64), self.lower, self.upper)

    def locate(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Cell lookup for linear interpolation

        Args:
            x: (N, d) points inside the domain

        Returns:
            (left node index, fraction toward the right node), both (N, d)
        """
        x = self._check_points(x)
        pos = (x - self.lower) / self.spacing
        left = np.clip(np.floor(pos).astype(int), 0, np.array(self.shape) - 2)
        frac = np.clip(pos - left, 0.0, 1.0)
        return left, frac

    def refine(self, factors: Sequence[int]) -> "Grid":
        """Grid whose k-th axis has factors[k]*(n_k-1)+1 nodes over the same bounds"""
        if len(factors) != self.d:
            raise ShapeMismatchError(f"expected {self.d} refinement factors, got {len(factors)}")
        return Grid(tuple(
            GridDim(lower=dim.lower, upper=dim.upper, nodes=f * (dim.nodes - 1) + 1)
            for dim, f in zip(self.dims, factors)
        ))

    def subgrid(self, start: int, stop: Optional[int] = None) -> "Grid":
        return Grid(self.dims[start:stop])

    def _check_points(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.d:
            raise ShapeMismatchError(f"expected points with {self.d} coordinates, got {x.shape[1]}")
        inside = self.contains(x)
        if not np.all(inside):
            bad = x[~inside][0]
            raise DomainError(f"point {bad.tolist()} lies outside the grid domain")
        return x
