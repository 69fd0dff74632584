"""Module providing the recall@R measure and per-query result dumps"""
from __future__ import annotations

import json
from typing import Any, Dict, List, Sequence

import numpy as np

from antisparse_ann.lib.data_io.ground_truth import GroundTruth
from antisparse_ann.lib.errors.errors import DimensionError
from antisparse_ann.lib.index_search.search import ScoredList, SearchMode


def recall_at_R(results: Sequence[ScoredList], gt: GroundTruth, R: int) -> float:
    """Fraction of queries whose true nearest neighbor is among the first R results."""
    if len(results) != gt.n_queries:
        raise DimensionError(f"{len(results)} result lists for {gt.n_queries} ground-truth queries")
    if gt.k < 1 or R < 1:
        raise DimensionError("recall@R needs k >= 1 and R >= 1")
    truth = gt.nearest()
    hits = 0
    for query, ranked in enumerate(results):
        if len(ranked) < R:
            raise DimensionError(f"Query {query} has {len(ranked)} results, fewer than R={R}")
        hits += bool(np.any(ranked.ids[:R] == truth[query]))
    return hits / len(results)


def write_result_dump(path: str, results: Sequence[ScoredList]) -> None:
    """One JSON object per query: {"query", "mode", "ids", "scores"}."""
    payload: List[Dict[str, Any]] = [
        {"query": i, "mode": r.mode.value, "ids": r.ids.tolist(), "scores": r.scores.tolist()}
        for i, r in enumerate(results)
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def read_result_dump(path: str) -> List[ScoredList]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    ordered = sorted(payload, key=lambda entry: entry["query"])
    return [ScoredList(e["ids"], e["scores"], SearchMode(e["mode"])) for e in ordered]


def recall_from_dump(path: str, gt: GroundTruth, R: int) -> float:
    return recall_at_R(read_result_dump(path), gt, R)
