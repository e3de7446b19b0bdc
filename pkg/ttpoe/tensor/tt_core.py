"""
Tensor-train models: construction, element access, interpolation and core algebra

A d-th order tensor is stored as cores of shape (r_{k-1}, n_k, r_k) with
r_0 = r_d = 1. Dense tensors are plain numpy arrays in row-major (C) order.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ttpoe.core.config import settings
from ttpoe.core.exceptions import (
    IndexRangeError,
    InvalidInputError,
    ShapeMismatchError,
)

logger = logging.getLogger(__name__)

# Singular values below this fraction of the largest one are numerically zero
_RANK_RTOL = 1e-14
# Gram eigenvalues resolve singular values down to about this fraction of the largest
_GRAM_RTOL = 1e-7
# Unfoldings split through their Gram matrix: short side at least this long and a
# per-unfolding relative tolerance at least _GRAM_MIN_TOL
_GRAM_MIN_SIZE = 64
_GRAM_MIN_TOL = 1e-5

DenseTensor = np.ndarray


def _freeze(array: np.ndarray) -> np.ndarray:
    arr = np.asarray(array, dtype=np.float64)
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TTModel:
    """Immutable tensor train; cores are read-only float64 arrays"""

    cores: Tuple[np.ndarray, ...]

    def __post_init__(self):
        cores = tuple(_freeze(core) for core in self.cores)
        if not cores:
            raise InvalidInputError("a TT model needs at least one core")
        for k, core in enumerate(cores):
            if core.ndim != 3:
                raise InvalidInputError(f"core {k} must be third-order, got ndim={core.ndim}")
            if min(core.shape) < 1:
                raise InvalidInputError(f"core {k} has an empty axis: {core.shape}")
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise InvalidInputError("boundary ranks must be 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[2] != cores[k + 1].shape[0]:
                raise ShapeMismatchError(
                    f"rank mismatch between cores {k} and {k + 1}: "
                    f"{cores[k].shape[2]} != {cores[k + 1].shape[0]}"
                )
        object.__setattr__(self, "cores", cores)

    @property
    def d(self) -> int:
        return len(self.cores)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(core.shape[1] for core in self.cores)

    @property
    def ranks(self) -> Tuple[int, ...]:
        return (1,) + tuple(core.shape[2] for core in self.cores)

    @property
    def max_rank(self) -> int:
        return max(self.ranks)

    @property
    def parameters(self) -> int:
        return int(sum(core.size for core in self.cores))

    def __repr__(self) -> str:
        return f"TTModel(shape={self.shape}, ranks={self.ranks})"


def _svd(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        return linalg.svd(matrix, full_matrices=False, lapack_driver="gesdd")
    except linalg.LinAlgError:
        logger.warning(f"gesdd did not converge on a {matrix.shape} unfolding, retrying with gesvd")
        return linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")


def _truncation_rank(s: np.ndarray, delta: float, max_rank: int) -> int:
    """Smallest rank whose discarded tail has Frobenius norm <= delta, capped at max_rank"""
    if s.size == 0 or s[0] <= 0.0:
        return 1
    tail_sq = np.append(np.cumsum((s ** 2)[::-1])[::-1], 0.0)
    r_delta = int(np.argmax(tail_sq <= delta ** 2))
    r_numeric = int(np.count_nonzero(s > s[0] * _RANK_RTOL))
    return max(1, min(r_delta, r_numeric, max_rank))


def _split(matrix: np.ndarray, delta: float, max_rank: int, coarse: bool) -> Tuple[np.ndarray, np.ndarray]:
    """
    Truncated factorization matrix ~ left @ right, left with orthonormal columns

    The discarded singular values have Frobenius norm <= delta unless
    max_rank binds. Coarse requests on large unfoldings go through the
    eigendecomposition of the smaller Gram matrix instead of a full SVD.
    """
    if coarse and min(matrix.shape) >= _GRAM_MIN_SIZE:
        return _gram_split(matrix, delta, max_rank)
    u, s, vt = _svd(matrix)
    r = _truncation_rank(s, delta, max_rank)
    return u[:, :r], s[:r, None] * vt[:r]


def _gram_split(matrix: np.ndarray, delta: float, max_rank: int) -> Tuple[np.ndarray, np.ndarray]:
    m, n = matrix.shape
    tall = m >= n
    evals, vecs = linalg.eigh(matrix.T @ matrix if tall else matrix @ matrix.T)
    evals, vecs = evals[::-1], vecs[:, ::-1]
    s = np.sqrt(np.clip(evals, 0.0, None))
    r = _truncation_rank(s, delta, max_rank)
    if s[0] > 0.0:
        r = max(1, min(r, int(np.count_nonzero(s > s[0] * _GRAM_RTOL))))
    vecs = vecs[:, :r]
    if not tall:
        return vecs, vecs.T @ matrix
    scale = np.where(s[:r] > 0.0, s[:r], 1.0)
    return (matrix @ vecs) / scale, s[:r, None] * vecs.T


def _check_truncation_args(max_rank: int, eps: float) -> None:
    if max_rank < 1:
        raise InvalidInputError(f"max_rank must be >= 1, got {max_rank}")
    if eps < 0 or not np.isfinite(eps):
        raise InvalidInputError(f"eps must be a finite nonnegative number, got {eps}")


def tt_svd(t: DenseTensor, max_rank: int, eps: float) -> TTModel:
    """
    Convert a dense tensor to TT format by sequential truncated SVDs

    The global tolerance is split as eps/sqrt(d-1) per unfolding so that the
    relative Frobenius error stays below eps whenever max_rank does not bind.

    Args:
        t: Dense tensor (any order >= 1)
        max_rank: Upper bound for every internal rank
        eps: Relative Frobenius accuracy

    Returns:
        TT model of the same shape
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 0 or t.size == 0:
        raise InvalidInputError("cannot decompose an empty tensor")
    if not np.all(np.isfinite(t)):
        raise InvalidInputError("tensor contains non-finite entries")
    _check_truncation_args(max_rank, eps)

    shape = t.shape
    d = len(shape)
    if d == 1:
        return TTModel((t.reshape(1, shape[0], 1),))

    tol = eps / np.sqrt(d - 1)
    delta = tol * float(np.linalg.norm(t))
    cores = []
    r_prev = 1
    remainder = t
    for k in range(d - 1):
        unfolding = remainder.reshape(r_prev * shape[k], -1)
        left, remainder = _split(unfolding, delta, max_rank, coarse=tol >= _GRAM_MIN_TOL)
        r = left.shape[1]
        cores.append(left.reshape(r_prev, shape[k], r))
        r_prev = r
    cores.append(remainder.reshape(r_prev, shape[-1], 1))
    return TTModel(tuple(cores))


def _check_index(m: TTModel, index: Sequence[int]) -> Tuple[int, ...]:
    index = tuple(int(i) for i in index)
    if len(index) != m.d:
        raise IndexRangeError(f"expected {m.d} indices, got {len(index)}")
    for k, (i, n) in enumerate(zip(index, m.shape)):
        if not 0 <= i < n:
            raise IndexRangeError(f"index {i} out of range [0, {n}) in dimension {k}")
    return index


def element(m: TTModel, index: Sequence[int]) -> float:
    """Tensor entry as the product of the selected matrix slices"""
    index = _check_index(m, index)
    row = np.ones((1, 1))
    for core, i in zip(m.cores, index):
        row = row @ core[:, i, :]
    return float(row[0, 0])


def evaluate(m: TTModel, grid, x: Sequence[float]) -> float:
    """
    Continuous evaluation by piecewise-linear interpolation of each core

    Args:
        m: TT model whose mode sizes match the grid node counts
        grid: Grid over the model dimensions
        x: Point inside the grid domain

    Returns:
        Interpolated value (exact at grid nodes)
    """
    return float(evaluate_batch(m, grid, np.asarray(x, dtype=np.float64)[None, :])[0])


def evaluate_batch(m: TTModel, grid, points: np.ndarray) -> np.ndarray:
    """Vectorized evaluate() over an (N, d) array of points"""
    if grid.shape != m.shape:
        raise ShapeMismatchError(f"grid shape {grid.shape} does not match model shape {m.shape}")
    idx, frac = grid.locate(points)
    rows = np.ones((idx.shape[0], 1))
    for k, core in enumerate(m.cores):
        rows = contract_rows(rows, core, idx[:, k], frac[:, k])
    return rows[:, 0]


def contract_rows(
    rows: np.ndarray,
    core: np.ndarray,
    idx: np.ndarray,
    frac: Optional[np.ndarray] = None,
    chunk: Optional[int] = None
) -> np.ndarray:
    """
    Multiply each row vector by its own (optionally interpolated) core slice

    Args:
        rows: (N, r_{k-1}) row vectors
        core: (r_{k-1}, n_k, r_k) core
        idx: (N,) slice indices; with frac, the left node of each cell
        frac: (N,) interpolation weights toward idx + 1, or None for exact slices
        chunk: rows processed per einsum call (default keeps gathered slices
            under CONTRACTION_CHUNK_ENTRIES floats)

    Returns:
        (N, r_k) contracted rows
    """
    out = np.empty((rows.shape[0], core.shape[2]))
    if chunk is None:
        chunk = max(1, settings.CONTRACTION_CHUNK_ENTRIES // (core.shape[0] * core.shape[2]))
    by_slice = np.moveaxis(core, 1, 0)
    n_k = core.shape[1]
    for start in range(0, rows.shape[0], chunk):
        sl = slice(start, start + chunk)
        left = by_slice[idx[sl]]
        if frac is not None and n_k > 1:
            t = frac[sl, None, None]
            right = by_slice[np.minimum(idx[sl] + 1, n_k - 1)]
            left = (1.0 - t) * left + t * right
        out[sl] = np.einsum("nr,nrs->ns", rows[sl], left)
    return out


def hadamard(a: TTModel, b: TTModel) -> TTModel:
    """Element-wise product; ranks multiply"""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    cores = []
    for ca, cb in zip(a.cores, b.cores):
        ra0, n, ra1 = ca.shape
        rb0, _, rb1 = cb.shape
        kron = np.einsum("aib,cid->acibd", ca, cb)
        cores.append(kron.reshape(ra0 * rb0, n, ra1 * rb1))
    return TTModel(tuple(cores))


def add(a: TTModel, b: TTModel) -> TTModel:
    """Element-wise sum by block-diagonal core stacking; interior ranks add"""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.d == 1:
        return TTModel((a.cores[0] + b.cores[0],))
    cores = [np.concatenate([a.cores[0], b.cores[0]], axis=2)]
    for ca, cb in zip(a.cores[1:-1], b.cores[1:-1]):
        ra0, n, ra1 = ca.shape
        rb0, _, rb1 = cb.shape
        block = np.zeros((ra0 + rb0, n, ra1 + rb1))
        block[:ra0, :, :ra1] = ca
        block[ra0:, :, ra1:] = cb
        cores.append(block)
    cores.append(np.concatenate([a.cores[-1], b.cores[-1]], axis=0))
    return TTModel(tuple(cores))


def scale(a: TTModel, c: float) -> TTModel:
    """Scalar multiple, applied to the first core"""
    return TTModel((a.cores[0] * float(c),) + a.cores[1:])


def round(m: TTModel, eps: float, max_rank: int) -> TTModel:
    """
    TT-rounding: right-to-left QR orthogonalization, then a left-to-right
    truncated SVD sweep

    Args:
        m: Model to recompress
        eps: Relative Frobenius accuracy
        max_rank: Upper bound for every internal rank

    Returns:
        Model with ranks no larger than the input's
    """
    _check_truncation_args(max_rank, eps)
    d = m.d
    if d == 1:
        return m
    cores = [np.array(core) for core in m.cores]

    for k in range(d - 1, 0, -1):
        r0, n, r1 = cores[k].shape
        q, rr = linalg.qr(cores[k].reshape(r0, n * r1).T, mode="economic")
        cores[k] = q.T.reshape(q.shape[1], n, r1)
        cores[k - 1] = np.tensordot(cores[k - 1], rr.T, axes=([2], [0]))

    tol = eps / np.sqrt(d - 1)
    delta = tol * float(np.linalg.norm(cores[0]))
    for k in range(d - 1):
        r0, n, r1 = cores[k].shape
        left, right = _split(cores[k].reshape(r0 * n, r1), delta, max_rank, coarse=tol >= _GRAM_MIN_TOL)
        cores[k] = left.reshape(r0, n, left.shape[1])
        cores[k + 1] = np.tensordot(right, cores[k + 1], axes=([1], [0]))
    return TTModel(tuple(cores))


def core_marginal_matrix(core: np.ndarray) -> np.ndarray:
    """Sum of the matrix slices of a core: an r_{k-1} x r_k matrix"""
    core = np.asarray(core, dtype=np.float64)
    if core.ndim != 3:
        raise InvalidInputError(f"core must be third-order, got ndim={core.ndim}")
    return core.sum(axis=1)


def refine_core(core: np.ndarray, factor: int) -> np.ndarray:
    """
    Insert factor-1 linearly interpolated slices between adjacent slices

    The middle dimension grows from n to factor*(n-1)+1.
    """
    core = np.asarray(core, dtype=np.float64)
    if core.ndim != 3:
        raise InvalidInputError(f"core must be third-order, got ndim={core.ndim}")
    if factor < 1:
        raise InvalidInputError(f"refinement factor must be >= 1, got {factor}")
    n = core.shape[1]
    if factor == 1:
        return core.copy()
    if n < 2:
        raise InvalidInputError("cannot refine a core with fewer than 2 slices")
    positions = np.arange(factor * (n - 1) + 1) / factor
    left = np.minimum(np.floor(positions).astype(int), n - 2)
    t = (positions - left)[None, :, None]
    return (1.0 - t) * core[:, left, :] + t * core[:, left + 1, :]


def full(m: TTModel) -> DenseTensor:
    """Dense reconstruction; only for small models"""
    result = m.cores[0].reshape(m.shape[0], -1)
    for core in m.cores[1:]:
        r0, n, r1 = core.shape
        result = (result @ core.reshape(r0, n * r1)).reshape(-1, r1)
    return result.reshape(m.shape)


def frobenius_norm(m: TTModel) -> float:
    """Frobenius norm from the cores without densifying"""
    gram = np.ones((1, 1))
    for core in m.cores:
        gram = np.einsum("ab,aic,bid->cd", gram, core, core)
    return float(np.sqrt(abs(gram[0, 0])))
