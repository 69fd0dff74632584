"""Module providing the pydantic models for experiment and benchmark-grid configuration"""
from __future__ import annotations

import itertools
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from antisparse_ann.lib.embedding.encoder import EmbeddingMethod
from antisparse_ann.lib.frames.projection import MatrixKind
from antisparse_ann.lib.index_search.search import DEFAULT_SHORTLIST, SearchMode
from antisparse_ann.lib.solver.antisparse_solver import DEFAULT_H

DEFAULT_R = [1, 10, 100]
DEFAULT_M_MULTIPLIERS = [1, 2, 3, 4, 8]


class SyntheticDatasetSpec(BaseModel):
    """Unit-sphere Gaussian base and queries drawn from one seed"""
    model_config = ConfigDict(frozen=True)
    kind: Literal["synthetic"] = "synthetic"
    n: int = Field(default=10_000, ge=1)
    d: int = Field(default=16, ge=1)
    n_queries: int = Field(default=1_000, ge=1)
    seed: int = Field(default=0, ge=0, description="Dataset seed, mixed with each run seed to draw base and queries")


class AnisotropicDatasetSpec(BaseModel):
    """Un-normalized correlated vectors standing in for a descriptor corpus"""
    model_config = ConfigDict(frozen=True)
    kind: Literal["anisotropic"] = "anisotropic"
    n: int = Field(default=100_000, ge=1)
    d: int = Field(default=128, ge=1)
    n_queries: int = Field(default=1_000, ge=1)
    seed: int = Field(default=0, ge=0)
    decay: float = Field(default=0.5, ge=0.0)
    pca_d_out: Optional[int] = Field(default=None, ge=1)


class VecsDatasetSpec(BaseModel):
    """fvecs/bvecs base and query files, optionally PCA-reduced"""
    model_config = ConfigDict(frozen=True)
    kind: Literal["vecs"] = "vecs"
    base: str
    queries: str
    learn: Optional[str] = Field(default=None, description="PCA training file; the base set when omitted")
    pca_d_out: Optional[int] = Field(default=None, ge=1)
    limit: Optional[int] = Field(default=None, ge=1, description="Read only this many base vectors")
    query_limit: Optional[int] = Field(default=None, ge=1)


DatasetSpec = Union[SyntheticDatasetSpec, AnisotropicDatasetSpec, VecsDatasetSpec]


class ExperimentConfig(BaseModel):
    """One grid point: dataset, embedding, matrix, code length, search mode"""
    model_config = ConfigDict(frozen=True, use_enum_values=False)
    dataset: DatasetSpec = Field(default_factory=SyntheticDatasetSpec, discriminator="kind")
    method: EmbeddingMethod = EmbeddingMethod.ANTISPARSE
    matrix: MatrixKind = MatrixKind.UNIFORM_FRAME
    m: int = Field(default=64, ge=1)
    h: float = Field(default=DEFAULT_H, gt=0.0)
    mode: SearchMode = SearchMode.SYMMETRIC_HAMMING
    shortlist: int = Field(default=DEFAULT_SHORTLIST, ge=1)
    shortlist_mode: SearchMode = SearchMode.ASYMMETRIC
    R: List[int] = Field(default_factory=lambda: list(DEFAULT_R))
    seeds: List[int] = Field(default_factory=lambda: [0])

    @field_validator("R")
    @classmethod
    def _sorted_positive_r(cls, values: List[int]) -> List[int]:
        if not values or any(r < 1 for r in values):
            raise ValueError("R values must be positive and non-empty")
        return sorted(set(values))

    @field_validator("seeds")
    @classmethod
    def _non_negative_seeds(cls, values: List[int]) -> List[int]:
        if not values or any(s < 0 for s in values):
            raise ValueError("seeds must be non-negative and non-empty")
        return values

    @model_validator(mode="after")
    def _check_shortlist_mode(self) -> "ExperimentConfig":
        if self.shortlist_mode is SearchMode.RECONSTRUCTION_RERANK:
            raise ValueError("shortlist_mode must be 'asym' or 'binary'")
        return self


class BenchConfig(BaseModel):
    """Cartesian grid of experiments sharing one dataset"""
    model_config = ConfigDict(frozen=True)
    dataset: DatasetSpec = Field(default_factory=SyntheticDatasetSpec, discriminator="kind")
    methods: List[EmbeddingMethod] = Field(default_factory=lambda: [EmbeddingMethod.LSH, EmbeddingMethod.ANTISPARSE])
    matrices: List[MatrixKind] = Field(default_factory=lambda: [MatrixKind.UNIFORM_FRAME])
    m_grid: Optional[List[int]] = Field(default=None, description="Explicit code lengths; overrides m_multipliers")
    m_multipliers: List[int] = Field(default_factory=lambda: list(DEFAULT_M_MULTIPLIERS))
    h_grid: List[float] = Field(default_factory=lambda: [DEFAULT_H])
    modes: List[SearchMode] = Field(default_factory=lambda: [SearchMode.SYMMETRIC_HAMMING])
    shortlist: int = Field(default=DEFAULT_SHORTLIST, ge=1)
    shortlist_mode: SearchMode = SearchMode.ASYMMETRIC
    R: List[int] = Field(default_factory=lambda: list(DEFAULT_R))
    seeds: List[int] = Field(default_factory=lambda: [0])
    out: Optional[str] = Field(default=None, description="CSV destination; stdout when omitted")

    def code_lengths(self) -> List[int]:
        if self.m_grid:
            return list(self.m_grid)
        return [k * self.dataset_dim() for k in self.m_multipliers]

    def dataset_dim(self) -> int:
        spec = self.dataset
        if isinstance(spec, VecsDatasetSpec):
            if spec.pca_d_out is None:
                raise ValueError("m_multipliers need a known dimension: set pca_d_out or m_grid")
            return spec.pca_d_out
        if isinstance(spec, AnisotropicDatasetSpec) and spec.pca_d_out is not None:
            return spec.pca_d_out
        return spec.d

    def expand(self) -> List[ExperimentConfig]:
        """Grid points in method, matrix, m, h, mode order."""
        return [
            ExperimentConfig(
                dataset=self.dataset, method=method, matrix=matrix, m=m, h=h, mode=mode,
                shortlist=self.shortlist, shortlist_mode=self.shortlist_mode, R=self.R, seeds=self.seeds,
            )
            for method, matrix, m, h, mode in itertools.product(
                self.methods, self.matrices, self.code_lengths(), self.h_grid, self.modes
            )
        ]
