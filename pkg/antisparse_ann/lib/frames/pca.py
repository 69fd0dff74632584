"""Module providing the PCA reduction applied to real descriptor data before coding"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from antisparse_ann.lib.errors.errors import DimensionError, InsufficientDataError
from antisparse_ann.lib.utils.containers import read_header, read_payload, write_header

MAGIC = b"ASPC"
HEADER_FIELDS = "II"  # D, d_out
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class PcaModel:
    """Training mean plus the top principal directions as orthonormal rows"""
    mean: np.ndarray
    basis: np.ndarray

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=np.float64)
        basis = np.array(self.basis, dtype=np.float64, order="C")
        if mean.ndim != 1 or basis.ndim != 2 or basis.shape[1] != mean.shape[0]:
            raise DimensionError(f"PCA shapes disagree: mean {mean.shape}, basis {basis.shape}")
        mean.setflags(write=False)
        basis.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "basis", basis)

    @property
    def d_in(self) -> int:
        return int(self.mean.shape[0])

    @property
    def d_out(self) -> int:
        return int(self.basis.shape[0])

    def to_bytes(self) -> bytes:
        buffer = io.BytesIO()
        write_header(buffer, MAGIC, HEADER_FIELDS, self.d_in, self.d_out)
        buffer.write(self.mean.astype("<f8").tobytes())
        buffer.write(self.basis.astype("<f8").tobytes(order="C"))
        return buffer.getvalue()

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path: str) -> "PcaModel":
        with open(path, "rb") as fh:
            d_in, d_out = read_header(fh, MAGIC, HEADER_FIELDS)
            payload = read_payload(fh, 8 * d_in * (1 + d_out), "ASPC")
        values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
        return cls(values[:d_in], values[d_in:].reshape(d_out, d_in))


def pca_fit(training: np.ndarray, d_out: int) -> PcaModel:
    """Fit the top-d_out principal directions of the centered training set.

    Each direction's sign is fixed so that its largest-magnitude coordinate
    is positive.
    """
    data = np.asarray(training, dtype=np.float64)
    if data.ndim != 2:
        raise DimensionError(f"Training data must be 2-D, got shape {data.shape}")
    n, dim = data.shape
    if d_out < 1 or d_out > dim:
        raise DimensionError(f"d_out={d_out} must lie in [1, {dim}]")
    mean = data.mean(axis=0)
    centered = data - mean
    if n < 2:
        raise InsufficientDataError(f"Covariance of {n} vector(s) has rank 0 < d_out={d_out}")
    # Right singular vectors of the centered data are the covariance eigenvectors,
    # already ordered by non-increasing eigenvalue s^2 / (n - 1).
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(singular > RANK_RTOL * singular[0])) if singular[0] > 0 else 0
    if rank < d_out:
        raise InsufficientDataError(f"Training covariance has rank {rank} < d_out={d_out}")
    basis = vt[:d_out].copy()
    pivots = np.argmax(np.abs(basis), axis=1)
    signs = np.where(basis[np.arange(d_out), pivots] < 0, -1.0, 1.0)
    basis *= signs[:, None]
    return PcaModel(mean, basis)


def pca_apply(model: PcaModel, y: np.ndarray) -> np.ndarray:
    """basis . (y - mean) for one vector or each row of a batch; no renormalization."""
    values = np.asarray(y, dtype=np.float64)
    if values.shape[-1] != model.d_in or values.ndim not in (1, 2):
        raise DimensionError(f"Expected vectors of length {model.d_in}, got shape {values.shape}")
    return (values - model.mean) @ model.basis.T
