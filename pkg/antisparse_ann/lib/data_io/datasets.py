"""Module providing the in-memory vector datasets and the synthetic generators"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from antisparse_ann.lib.errors.errors import AntisparseError, DimensionError
from antisparse_ann.lib.frames.pca import PcaModel, pca_apply


class SourceKind(str, enum.Enum):
    SYNTHETIC_UNIT_SPHERE = "synthetic"
    ANISOTROPIC = "anisotropic"
    FVECS_FILE = "fvecs"
    BVECS_FILE = "bvecs"
    PCA_REDUCED = "pca"


@dataclass(frozen=True)
class DatasetSource:
    """Where a dataset came from"""
    kind: SourceKind
    seed: Optional[int] = None
    path: Optional[str] = None
    parent: Optional["DatasetSource"] = None
    d_out: Optional[int] = None


@dataclass(frozen=True)
class VectorDataset:
    """n x D finite real vectors, immutable"""
    vectors: np.ndarray
    source: DatasetSource

    def __post_init__(self) -> None:
        vectors = np.array(self.vectors, dtype=np.float64, order="C")
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise DimensionError(f"A dataset needs shape (n >= 1, D >= 1), got {vectors.shape}")
        if not np.all(np.isfinite(vectors)):
            raise AntisparseError("Dataset has non-finite entries")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)

    @property
    def n(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_unit_sphere(n: int, dim: int, seed: int) -> VectorDataset:
    """Normalized standard Gaussian vectors (uniform on the unit sphere); zero draws are redrawn."""
    if n < 1 or dim < 1:
        raise DimensionError(f"Need n >= 1 and D >= 1, got n={n}, D={dim}")
    rng = _rng(seed)
    draws = rng.standard_normal((n, dim))
    norms = np.linalg.norm(draws, axis=1)
    while np.any(norms == 0):
        zero = np.flatnonzero(norms == 0)
        draws[zero] = rng.standard_normal((zero.size, dim))
        norms[zero] = np.linalg.norm(draws[zero], axis=1)
    return VectorDataset(draws / norms[:, None], DatasetSource(SourceKind.SYNTHETIC_UNIT_SPHERE, seed=seed))


def gen_anisotropic(n: int, dim: int, seed: int, decay: float = 0.5) -> VectorDataset:
    """Un-normalized Gaussian vectors with a power-law spectrum, randomly rotated and offset.

    Stands in for PCA-bound descriptor corpora when the real files are absent.
    """
    if n < 1 or dim < 1:
        raise DimensionError(f"Need n >= 1 and D >= 1, got n={n}, D={dim}")
    rng = _rng(seed)
    scales = (1.0 + np.arange(dim)) ** (-decay)
    rotation, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    offset = rng.uniform(0.0, 1.0, dim)
    vectors = (rng.standard_normal((n, dim)) * scales) @ rotation.T + offset
    return VectorDataset(vectors, DatasetSource(SourceKind.ANISOTROPIC, seed=seed))


def pca_reduce(dataset: VectorDataset, model: PcaModel) -> VectorDataset:
    """Apply a fitted PCA to every row; the result is not renormalized."""
    return VectorDataset(
        pca_apply(model, dataset.vectors),
        DatasetSource(SourceKind.PCA_REDUCED, parent=dataset.source, d_out=model.d_out),
    )
