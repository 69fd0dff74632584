"""Module providing exact brute-force k-nearest-neighbor ground truth"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from antisparse_ann.lib.data_io.datasets import VectorDataset
from antisparse_ann.lib.data_io.vecs_io import read_ivecs, write_ivecs
from antisparse_ann.lib.errors.errors import DimensionError
from antisparse_ann.lib.utils.parallel import thread_map


@dataclass(frozen=True)
class GroundTruth:
    """Per query, the k exact nearest ids (0-based) and squared l2 distances"""
    ids: np.ndarray
    distances: np.ndarray

    @property
    def k(self) -> int:
        return int(self.ids.shape[1])

    @property
    def n_queries(self) -> int:
        return int(self.ids.shape[0])

    def nearest(self) -> np.ndarray:
        """Rank-1 id of every query."""
        return self.ids[:, 0]

    def save(self, path: str) -> None:
        """JSON when the path ends in .json, ivecs (ids only) otherwise."""
        if path.endswith(".json"):
            with open(path, "w", encoding="utf-8") as fh:
                json.dump({"k": self.k, "ids": self.ids.tolist(), "distances": self.distances.tolist()}, fh)
        else:
            write_ivecs(path, self.ids)

    @classmethod
    def load(cls, path: str) -> "GroundTruth":
        if path.endswith(".json"):
            with open(path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
            return cls(np.asarray(payload["ids"], dtype=np.int64), np.asarray(payload["distances"], dtype=np.float64))
        ids = read_ivecs(path)
        return cls(ids, np.full(ids.shape, np.nan))


def ground_truth(base: VectorDataset, queries: VectorDataset, k: int, show_progress: bool = False) -> GroundTruth:
    """Exact k-NN under squared l2, ties by ascending id."""
    if base.dim != queries.dim:
        raise DimensionError(f"Base has D={base.dim}, queries have D={queries.dim}")
    if not 1 <= k <= base.n:
        raise DimensionError(f"k={k} must lie in [1, {base.n}]")
    vectors = base.vectors

    def nearest(query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        distances = np.sum((vectors - query) ** 2, axis=1)
        order = np.argsort(distances, kind="stable")[:k]
        return order, distances[order]

    results = thread_map(nearest, list(queries.vectors), show_progress=show_progress,
                         desc="Ground truth", unit="query")
    return GroundTruth(np.stack([r[0] for r in results]).astype(np.int64), np.stack([r[1] for r in results]))
