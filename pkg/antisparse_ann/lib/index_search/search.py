"""Module providing the three search modes over a BinaryIndex

* binary: e(q)^T e(y) = m - 2 d_H, by XOR and popcount over packed words
* asym: xdot(q)^T e(y), through per-query 8-bit lookup tables
* rerank: -||q - A b / ||A b|| ||, over a shortlist from one of the above

Every result is ordered by descending score, ties by ascending id.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from antisparse_ann.lib.embedding.binary_code import BinaryCode, code_bytes, unpack_bits
from antisparse_ann.lib.embedding.encoder import PreBinarizedQuery
from antisparse_ann.lib.errors.errors import DimensionError, MatrixMismatchError
from antisparse_ann.lib.frames.projection import ProjectionMatrix
from antisparse_ann.lib.index_search.binary_index import BinaryIndex
from antisparse_ann.lib.utils.parallel import chunk_ranges, max_threads, thread_map

logger = logging.getLogger(__name__)

CHUNK_BITS = 8
CHUNK_ENTRIES = 1 << CHUNK_BITS
DEFAULT_SHORTLIST = 100
PARALLEL_SCAN_MIN = 1 << 16

# Row t holds the +-1 value of each of the 8 bits of t
_BIT_SIGNS = (((np.arange(CHUNK_ENTRIES)[:, None] >> np.arange(CHUNK_BITS)) & 1) * 2 - 1).astype(np.float64)


class SearchMode(str, enum.Enum):
    SYMMETRIC_HAMMING = "binary"
    ASYMMETRIC = "asym"
    RECONSTRUCTION_RERANK = "rerank"


@dataclass(frozen=True)
class ScoredList:
    """Ranked (id, score) pairs"""
    ids: np.ndarray
    scores: np.ndarray
    mode: SearchMode

    def __post_init__(self) -> None:
        ids = np.array(self.ids, dtype=np.int64).reshape(-1)
        scores = np.array(self.scores, dtype=np.float64).reshape(-1)
        if ids.shape != scores.shape:
            raise DimensionError("ids and scores must have equal length")
        ids.setflags(write=False)
        scores.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    @property
    def entries(self) -> List[Tuple[int, float]]:
        return [(int(i), float(s)) for i, s in zip(self.ids, self.scores)]


@dataclass(frozen=True)
class QueryLut:
    """One 256-entry table per 8-bit chunk of the code"""
    tables: np.ndarray
    m: int

    @property
    def n_chunks(self) -> int:
        return int(self.tables.shape[0])

    def score_words(self, words: np.ndarray) -> np.ndarray:
        """Sum table_c[chunk_c(b)] over chunks, in chunk order, for each row of words."""
        chunks = code_bytes(np.atleast_2d(words))[:, : self.n_chunks]
        total = np.zeros(chunks.shape[0])
        for c in range(self.n_chunks):
            total += self.tables[c][chunks[:, c]]
        return total


def rank_top(ids: np.ndarray, scores: np.ndarray, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Top-count by descending score, ties by ascending id."""
    if count < scores.shape[0]:
        threshold = np.partition(scores, scores.shape[0] - count)[scores.shape[0] - count]
        keep = scores >= threshold
        ids, scores = ids[keep], scores[keep]
    order = np.lexsort((ids, -scores))[:count]
    return ids[order], scores[order]


def _scan(n: int, score_rows: Callable[[slice], np.ndarray], count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Score all ids, possibly in parallel blocks; the merge equals a sequential scan."""
    workers = max_threads()
    if workers <= 1 or n < PARALLEL_SCAN_MIN:
        return rank_top(np.arange(n), score_rows(slice(0, n)), count)

    def block_top(block: range) -> Tuple[np.ndarray, np.ndarray]:
        return rank_top(np.arange(block.start, block.stop), score_rows(slice(block.start, block.stop)), count)

    partial = thread_map(block_top, chunk_ranges(n, workers), threads=workers)
    ids = np.concatenate([p[0] for p in partial])
    scores = np.concatenate([p[1] for p in partial])
    return rank_top(ids, scores, count)


def _check_count(count: int, available: int, what: str) -> None:
    if not 1 <= count <= available:
        raise DimensionError(f"{what}={count} must lie in [1, {available}]")


def search_hamming(index: BinaryIndex, qcode: BinaryCode, R: int) -> ScoredList:
    """NN_b: rank codes by e(q)^T e(y) = m - 2 d_H(q, y)."""
    if qcode.m != index.m:
        raise DimensionError(f"Query code has m={qcode.m}, index has m={index.m}")
    _check_count(R, index.n, "R")
    query = qcode.words

    def score_rows(rows: slice) -> np.ndarray:
        distances = np.bitwise_count(index.codes[rows] ^ query).sum(axis=1, dtype=np.int64)
        return (index.m - 2 * distances).astype(np.float64)

    ids, scores = _scan(index.n, score_rows, R)
    return ScoredList(ids, scores, SearchMode.SYMMETRIC_HAMMING)


def build_luts(query: PreBinarizedQuery) -> QueryLut:
    """Per-chunk tables of +-xdot partial sums; the last chunk is padded with zero weights."""
    m = query.m
    if m < 1:
        raise DimensionError("Cannot build lookup tables for an empty query")
    n_chunks = (m + CHUNK_BITS - 1) // CHUNK_BITS
    padded = np.zeros(n_chunks * CHUNK_BITS)
    padded[:m] = query.values
    return QueryLut(padded.reshape(n_chunks, CHUNK_BITS) @ _BIT_SIGNS.T, m)


def search_asymmetric(index: BinaryIndex, query: PreBinarizedQuery, R: int) -> ScoredList:
    """NN_a: rank codes by xdot(q)^T e(y) using lookup tables."""
    if query.m != index.m:
        raise DimensionError(f"Query has m={query.m}, index has m={index.m}")
    _check_count(R, index.n, "R")
    luts = build_luts(query)
    ids, scores = _scan(index.n, lambda rows: luts.score_words(index.codes[rows]), R)
    return ScoredList(ids, scores, SearchMode.ASYMMETRIC)


def reconstruct_codes(matrix: ProjectionMatrix, signs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit reconstructions A b / ||A b|| for each row of signs, plus the raw norms."""
    recon = np.asarray(signs, dtype=np.float64) @ matrix.entries.T
    norms = np.linalg.norm(recon, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return recon / safe[:, None], norms


def rerank_reconstruction(index: BinaryIndex, matrix: ProjectionMatrix, shortlist: ScoredList,
                          q: np.ndarray, k: int) -> ScoredList:
    """NN_e: re-rank the shortlist by Euclidean distance from q to the unit reconstructions."""
    if index.matrix_ref and matrix.ref != index.matrix_ref:
        raise MatrixMismatchError(f"Index was built with matrix {index.matrix_ref}, got {matrix.ref}")
    if matrix.cols != index.m:
        raise DimensionError(f"Matrix has m={matrix.cols}, index has m={index.m}")
    query = np.asarray(q, dtype=np.float64)
    if query.shape != (matrix.rows,):
        raise DimensionError(f"Query must have shape ({matrix.rows},), got {query.shape}")
    _check_count(k, len(shortlist), "k")
    ids = shortlist.ids
    if ids.size and (ids.min() < 0 or ids.max() >= index.n):
        raise DimensionError("Shortlist holds ids outside the index")

    unit, norms = reconstruct_codes(matrix, unpack_bits(index.codes[ids], index.m))
    scores = -np.linalg.norm(query - unit, axis=1)
    flat = norms == 0
    if np.any(flat):
        logger.warning("%d shortlisted code(s) reconstruct to zero; scored -inf", int(flat.sum()))
        scores[flat] = -np.inf
    top_ids, top_scores = rank_top(ids, scores, k)
    return ScoredList(top_ids, top_scores, SearchMode.RECONSTRUCTION_RERANK)
