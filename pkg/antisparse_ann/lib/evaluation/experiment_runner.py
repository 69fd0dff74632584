"""Module running one experiment end to end: data, matrix, codes, index, search, recall"""
from __future__ import annotations

import csv
import functools
import io
import logging
import time
from dataclasses import dataclass
from typing import IO, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from antisparse_ann.lib.data_io.datasets import VectorDataset, gen_anisotropic, gen_unit_sphere, pca_reduce
from antisparse_ann.lib.data_io.ground_truth import GroundTruth, ground_truth
from antisparse_ann.lib.data_io.vecs_io import read_dataset
from antisparse_ann.lib.embedding.binary_code import BinaryCode
from antisparse_ann.lib.embedding.encoder import EmbeddingMethod, EncodedDataset, PreBinarizedQuery, encode_dataset
from antisparse_ann.lib.errors.errors import AntisparseError, DimensionError
from antisparse_ann.lib.evaluation.recall import recall_at_R
from antisparse_ann.lib.frames.pca import pca_fit
from antisparse_ann.lib.frames.projection import MatrixKind, ProjectionMatrix, make_projection
from antisparse_ann.lib.index_search.binary_index import BinaryIndex, index_from_words
from antisparse_ann.lib.index_search.search import (
    ScoredList,
    SearchMode,
    rerank_reconstruction,
    search_asymmetric,
    search_hamming,
)
from antisparse_ann.lib.models.experiment_config import (
    AnisotropicDatasetSpec,
    DatasetSpec,
    ExperimentConfig,
    SyntheticDatasetSpec,
)

logger = logging.getLogger(__name__)

CSV_FIELDS = ["method", "matrix", "m", "h", "mode", "shortlist", "seed", "R", "recall",
              "n", "n_queries", "encode_ms", "search_ms"]


@dataclass(frozen=True)
class RecallRow:
    method: str
    matrix: str
    m: int
    h: float
    mode: str
    shortlist: int
    seed: int
    R: int
    recall: float
    n: int
    n_queries: int
    encode_ms: Optional[float] = None
    search_ms: Optional[float] = None

    def csv_values(self) -> List[str]:
        timing = ["" if t is None else f"{t:.1f}" for t in (self.encode_ms, self.search_ms)]
        return [self.method, self.matrix, str(self.m), format(self.h, "g"), self.mode, str(self.shortlist),
                str(self.seed), str(self.R), f"{self.recall:.6f}", str(self.n), str(self.n_queries), *timing]


@dataclass(frozen=True)
class RecallReport:
    rows: Tuple[RecallRow, ...]

    def recall(self, R: int, seed: Optional[int] = None) -> float:
        """Recall at R, averaged over seeds unless one is given."""
        values = [r.recall for r in self.rows if r.R == R and (seed is None or r.seed == seed)]
        if not values:
            raise KeyError(f"No rows for R={R}, seed={seed}")
        return float(np.mean(values))

    def to_csv(self, include_header: bool = True) -> str:
        buffer = io.StringIO()
        write_csv(buffer, self.rows, include_header)
        return buffer.getvalue()


def write_csv(stream: IO[str], rows: Iterable[RecallRow], include_header: bool = True) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    if include_header:
        writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow(row.csv_values())


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed from a tuple of integers."""
    state = np.random.SeedSequence(list(parts)).generate_state(1, dtype=np.uint64)
    return int(state[0])


@dataclass(frozen=True)
class PreparedData:
    """Base and query vectors in coding space, plus ground truth in the original space"""
    base: VectorDataset
    queries: VectorDataset
    truth: GroundTruth


@functools.lru_cache(maxsize=8)
def prepare_data(spec: DatasetSpec, seed: int, show_progress: bool = False) -> PreparedData:
    """Build (or read) the dataset for one seed; fixed corpora ignore the seed."""
    pca_d_out: Optional[int] = None
    if isinstance(spec, SyntheticDatasetSpec):
        base = gen_unit_sphere(spec.n, spec.d, derive_seed(spec.seed, seed, 0))
        queries = gen_unit_sphere(spec.n_queries, spec.d, derive_seed(spec.seed, seed, 1))
        learn = base
    elif isinstance(spec, AnisotropicDatasetSpec):
        # Base and queries share one distribution: draw them together and split
        pool = gen_anisotropic(spec.n + spec.n_queries, spec.d, derive_seed(spec.seed, seed, 0), spec.decay)
        base = VectorDataset(pool.vectors[: spec.n], pool.source)
        queries = VectorDataset(pool.vectors[spec.n:], pool.source)
        learn, pca_d_out = base, spec.pca_d_out
    else:
        base = read_dataset(spec.base, spec.limit)
        queries = read_dataset(spec.queries, spec.query_limit)
        learn = read_dataset(spec.learn, spec.limit) if spec.learn else base
        pca_d_out = spec.pca_d_out

    truth = ground_truth(base, queries, 1, show_progress=show_progress)
    if pca_d_out is not None:
        model = pca_fit(learn.vectors, pca_d_out)
        base, queries = pca_reduce(base, model), pca_reduce(queries, model)
    logger.info("Prepared %d base / %d query vectors in %d dims", base.n, queries.n, base.dim)
    return PreparedData(base, queries, truth)


def search_all(config: ExperimentConfig, index: BinaryIndex, matrix: ProjectionMatrix,
               queries: np.ndarray, encoded: EncodedDataset, depth: int) -> List[ScoredList]:
    """Run the configured mode for every query and keep `depth` results each."""
    results: List[ScoredList] = []
    for i in range(queries.shape[0]):
        if config.mode is SearchMode.RECONSTRUCTION_RERANK:
            results.append(rerank_search(config, index, matrix, queries[i], encoded, i, depth))
        elif config.mode is SearchMode.ASYMMETRIC:
            results.append(search_asymmetric(index, PreBinarizedQuery(encoded.prebinarized[i]), depth))
        else:
            results.append(search_hamming(index, BinaryCode(encoded.words[i], encoded.m), depth))
    return results


def rerank_search(config: ExperimentConfig, index: BinaryIndex, matrix: ProjectionMatrix, query: np.ndarray,
                  encoded: EncodedDataset, i: int, depth: int) -> ScoredList:
    width = min(config.shortlist, index.n)
    if config.shortlist_mode is SearchMode.SYMMETRIC_HAMMING:
        shortlist = search_hamming(index, BinaryCode(encoded.words[i], encoded.m), width)
    else:
        shortlist = search_asymmetric(index, PreBinarizedQuery(encoded.prebinarized[i]), width)
    return rerank_reconstruction(index, matrix, shortlist, query, depth)


def run_experiment(config: ExperimentConfig, show_progress: bool = False, timings: bool = False,
                   results_sink: Optional[List[Tuple[int, List[ScoredList]]]] = None) -> RecallReport:
    """Evaluate one grid point for each of its seeds; one row per (seed, R)."""
    rows: List[RecallRow] = []
    for seed in config.seeds:
        try:
            rows.extend(_run_seed(config, seed, show_progress, timings, results_sink))
        except AntisparseError as e:
            e.add_note(f"while running method={config.method.value} matrix={config.matrix.value} "
                       f"m={config.m} mode={config.mode.value} seed={seed}")
            raise
    return RecallReport(tuple(rows))


@dataclass(frozen=True)
class EncodedCorpus:
    """Matrix and index built from the base set of one (dataset, seed) pair"""
    matrix: ProjectionMatrix
    index: BinaryIndex
    encode_ms: float


@functools.lru_cache(maxsize=16)
def encode_corpus(spec: DatasetSpec, seed: int, method: EmbeddingMethod, matrix_kind: MatrixKind, m: int,
                  h: float, show_progress: bool = False) -> EncodedCorpus:
    """Draw the matrix and encode the base once; every search mode of a grid point reuses the result."""
    data = prepare_data(spec, seed, show_progress)
    matrix = make_projection(matrix_kind, data.base.dim, m, derive_seed(seed, 2))
    started = time.perf_counter()
    encoded_base = encode_dataset(matrix, data.base.vectors, method, h, show_progress=show_progress)
    index = index_from_words(encoded_base.words, encoded_base.m, matrix.ref, matrix.kind.value, h)
    encode_ms = (time.perf_counter() - started) * 1e3
    return EncodedCorpus(matrix, index, encode_ms)


def _run_seed(config: ExperimentConfig, seed: int, show_progress: bool, timings: bool,
              results_sink: Optional[List[Tuple[int, List[ScoredList]]]]) -> List[RecallRow]:
    data = prepare_data(config.dataset, seed, show_progress)
    depth = max(config.R)
    if depth > data.base.n:
        raise DimensionError(f"R={depth} exceeds the base size n={data.base.n}")
    if config.mode is SearchMode.RECONSTRUCTION_RERANK and depth > min(config.shortlist, data.base.n):
        raise DimensionError(f"R={depth} exceeds the re-ranked shortlist of {config.shortlist}")

    corpus = encode_corpus(config.dataset, seed, config.method, config.matrix, config.m, config.h, show_progress)
    matrix, index, encode_ms = corpus.matrix, corpus.index, corpus.encode_ms

    started = time.perf_counter()
    encoded_queries = encode_dataset(matrix, data.queries.vectors, config.method, config.h)
    results = search_all(config, index, matrix, data.queries.vectors, encoded_queries, depth)
    search_ms = (time.perf_counter() - started) * 1e3
    if results_sink is not None:
        results_sink.append((seed, results))

    logger.info("%s/%s m=%d mode=%s seed=%d: encode %.0f ms, search %.0f ms", config.method.value,
                config.matrix.value, config.m, config.mode.value, seed, encode_ms, search_ms)
    return [
        RecallRow(
            method=config.method.value, matrix=config.matrix.value, m=config.m, h=config.h,
            mode=config.mode.value, shortlist=config.shortlist, seed=seed, R=R,
            recall=recall_at_R(results, data.truth, R), n=data.base.n, n_queries=data.queries.n,
            encode_ms=encode_ms if timings else None, search_ms=search_ms if timings else None,
        )
        for R in config.R
    ]


def run_grid(configs: Sequence[ExperimentConfig], show_progress: bool = False,
             timings: bool = False) -> RecallReport:
    rows: List[RecallRow] = []
    for config in configs:
        rows.extend(run_experiment(config, show_progress=show_progress, timings=timings).rows)
    return RecallReport(tuple(rows))


def rows_from_csv(stream: IO[str]) -> List[RecallRow]:
    """Parse rows written by write_csv (timing cells may be empty)."""
    parsed: List[RecallRow] = []
    for record in csv.DictReader(stream):
        parsed.append(RecallRow(
            method=record["method"], matrix=record["matrix"], m=int(record["m"]), h=float(record["h"]),
            mode=record["mode"], shortlist=int(record["shortlist"]), seed=int(record["seed"]),
            R=int(record["R"]), recall=float(record["recall"]), n=int(record["n"]),
            n_queries=int(record["n_queries"]),
            encode_ms=float(record["encode_ms"]) if record.get("encode_ms") else None,
            search_ms=float(record["search_ms"]) if record.get("search_ms") else None,
        ))
    return parsed
