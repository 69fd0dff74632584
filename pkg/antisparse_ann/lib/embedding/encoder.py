"""Module providing the anti-sparse and LSH Hamming embeddings of real vectors"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from antisparse_ann.lib.embedding.binary_code import BinaryCode, pack_bits
from antisparse_ann.lib.errors.errors import DimensionError, ZeroVectorError
from antisparse_ann.lib.frames.projection import ProjectionMatrix
from antisparse_ann.lib.solver.antisparse_solver import DEFAULT_H, PathBreakpoint, solve
from antisparse_ann.lib.utils.parallel import thread_map

logger = logging.getLogger(__name__)


class EmbeddingMethod(str, enum.Enum):
    LSH = "lsh"
    ANTISPARSE = "antisparse"


@dataclass(frozen=True)
class PreBinarizedQuery:
    """x / ||x||_inf, entries in [-1, 1]"""
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class EncodedDataset:
    """Row-aligned outputs of a batch encode"""
    words: np.ndarray
    m: int
    prebinarized: np.ndarray
    traces: Optional[List[Tuple[PathBreakpoint, ...]]] = None


def sign_pm(values: np.ndarray) -> np.ndarray:
    """Elementwise sign with sign(0) = +1."""
    return np.where(np.asarray(values) >= 0, 1, -1).astype(np.int8)


def _check_vector(matrix: ProjectionMatrix, y: np.ndarray) -> np.ndarray:
    vector = np.asarray(y, dtype=np.float64)
    if vector.shape != (matrix.rows,):
        raise DimensionError(f"Expected a vector of length {matrix.rows}, got shape {vector.shape}")
    return vector


def encode_antisparse(matrix: ProjectionMatrix, h_t: float, y: np.ndarray) -> Tuple[BinaryCode, PreBinarizedQuery]:
    """e(y) = sign(x) and x / ||x||_inf for the spread representation x of y."""
    vector = _check_vector(matrix, y)
    if not np.any(vector):
        raise ZeroVectorError("Cannot embed the zero vector: its sign pattern is undefined")
    spread = solve(matrix, vector, h_t)
    if spread.linf == 0.0:
        raise ZeroVectorError(f"h_t={h_t} >= h_1={spread.h1}: the spread representation is zero")
    return BinaryCode.from_signs(sign_pm(spread.x)), PreBinarizedQuery(spread.x / spread.linf)


def encode_lsh(matrix: ProjectionMatrix, y: np.ndarray) -> BinaryCode:
    """b = sign(A^T y), the first segment of the anti-sparse path."""
    vector = _check_vector(matrix, y)
    return BinaryCode.from_signs(sign_pm(matrix.entries.T @ vector))


def prebinarize_query(matrix: ProjectionMatrix, h_t: float, q: np.ndarray) -> PreBinarizedQuery:
    return encode_antisparse(matrix, h_t, q)[1]


def lsh_prebinarize(matrix: ProjectionMatrix, q: np.ndarray) -> PreBinarizedQuery:
    """A^T q / ||A^T q||_inf: the unbinarized query used by the asymmetric mode for LSH codes."""
    return PreBinarizedQuery(_linf_normalize(matrix.entries.T @ _check_vector(matrix, q)))


def _linf_normalize(projections: np.ndarray) -> np.ndarray:
    """Scale a vector, or each row of a block, to unit l-inf norm."""
    scales = np.max(np.abs(projections), axis=-1, keepdims=True)
    if np.any(scales == 0.0):
        raise ZeroVectorError("Cannot prebinarize a query with zero projections")
    return projections / scales


def encode_dataset(
    matrix: ProjectionMatrix,
    vectors: np.ndarray,
    method: EmbeddingMethod | str = EmbeddingMethod.ANTISPARSE,
    h_t: float = DEFAULT_H,
    show_progress: bool = False,
    keep_traces: bool = False,
) -> EncodedDataset:
    """Encode every row; row i of every output depends on input row i only."""
    block = np.asarray(vectors, dtype=np.float64)
    if block.ndim != 2 or block.shape[1] != matrix.rows:
        raise DimensionError(f"Expected an (n, {matrix.rows}) block, got shape {block.shape}")
    zero_rows = np.flatnonzero(~np.any(block, axis=1))
    if zero_rows.size:
        raise ZeroVectorError(f"Row {int(zero_rows[0])} is the zero vector and cannot be embedded")

    if EmbeddingMethod(method) is EmbeddingMethod.LSH:
        projections = block @ matrix.entries
        return EncodedDataset(pack_bits(sign_pm(projections)), matrix.cols, _linf_normalize(projections))

    def encode_row(row: np.ndarray) -> Tuple[np.ndarray, float, Tuple[PathBreakpoint, ...]]:
        spread = solve(matrix, row, h_t)
        return spread.x, spread.linf, spread.breakpoints

    results = thread_map(encode_row, list(block), show_progress=show_progress,
                         desc="Anti-sparse coding", unit="vec")
    spread_rows = np.stack([x for x, _, _ in results])
    scales = np.array([linf for _, linf, _ in results])
    if np.any(scales == 0.0):
        row = int(np.flatnonzero(scales == 0.0)[0])
        raise ZeroVectorError(f"Row {row} has a zero spread representation at h_t={h_t}")
    logger.info("Encoded %d vectors (m=%d, h_t=%g)", block.shape[0], matrix.cols, h_t)
    return EncodedDataset(
        words=pack_bits(sign_pm(spread_rows)),
        m=matrix.cols,
        prebinarized=spread_rows / scales[:, None],
        traces=[trace for _, _, trace in results] if keep_traces else None,
    )
