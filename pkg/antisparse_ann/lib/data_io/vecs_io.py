"""Module providing readers and writers for the fvecs / bvecs / ivecs framings

Each record is a little-endian int32 dimension followed by that many
float32 (fvecs), uint8 (bvecs) or int32 (ivecs) values. All records of a file
share one dimension.
"""
from __future__ import annotations

import os
from typing import Optional

import numpy as np

from antisparse_ann.lib.data_io.datasets import DatasetSource, SourceKind, VectorDataset
from antisparse_ann.lib.errors.errors import (
    DimensionError,
    InconsistentDimensionError,
    NonPositiveDimensionError,
    TruncatedRecordError,
)

FVECS_DTYPE = np.dtype("<f4")
BVECS_DTYPE = np.dtype("u1")
IVECS_DTYPE = np.dtype("<i4")


def _bad_dimension(path: str, dim: int, expected: int, offset: int) -> Exception:
    if dim <= 0:
        return NonPositiveDimensionError(f"non-positive dimension {dim}", path, offset)
    return InconsistentDimensionError(f"dimension {dim} differs from {expected}", path, offset)


def read_vecs(path: str, value_dtype: np.dtype, limit: Optional[int] = None) -> np.ndarray:
    """Read up to `limit` records as an (n, D) array of value_dtype."""
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
        if len(head) < 4:
            raise TruncatedRecordError("missing dimension prefix", path, 0)
        dim = int(np.frombuffer(head, dtype="<i4")[0])
        if dim <= 0:
            raise NonPositiveDimensionError(f"non-positive dimension {dim}", path, 0)
        record = 4 + dim * value_dtype.itemsize
        n_full = size // record
        n_read = n_full if limit is None else min(n_full, limit)
        fh.seek(0)
        raw = fh.read(n_read * record)
        tail_offset = n_full * record
        # A streamed prefix never looks at what lies past the limit
        check_tail = (limit is None or n_full < limit) and size > tail_offset
        tail_head = b""
        if check_tail:
            fh.seek(tail_offset)
            tail_head = fh.read(4)

    layout = np.dtype([("dim", "<i4"), ("vec", value_dtype, (dim,))])
    records = np.frombuffer(raw, dtype=layout, count=n_read)
    mismatched = np.flatnonzero(records["dim"] != dim)
    if mismatched.size:
        first = int(mismatched[0])
        raise _bad_dimension(path, int(records["dim"][first]), dim, first * record)
    if check_tail:
        if len(tail_head) == 4:
            tail_dim = int(np.frombuffer(tail_head, dtype="<i4")[0])
            if tail_dim != dim:
                raise _bad_dimension(path, tail_dim, dim, tail_offset)
        raise TruncatedRecordError(f"record needs {record} bytes, only {size - tail_offset} remain", path, tail_offset)
    if n_read == 0:
        raise TruncatedRecordError(f"record needs {record} bytes, only {size} remain", path, 0)
    return records["vec"].copy()


def write_vecs(path: str, vectors: np.ndarray, value_dtype: np.dtype) -> None:
    block = np.asarray(vectors)
    if block.ndim != 2 or block.shape[1] < 1:
        raise DimensionError(f"Expected a non-empty (n, D) block, got shape {block.shape}")
    layout = np.dtype([("dim", "<i4"), ("vec", value_dtype, (block.shape[1],))])
    records = np.empty(block.shape[0], dtype=layout)
    records["dim"] = block.shape[1]
    records["vec"] = block
    with open(path, "wb") as fh:
        fh.write(records.tobytes())


def read_fvecs(path: str, limit: Optional[int] = None) -> VectorDataset:
    return VectorDataset(read_vecs(path, FVECS_DTYPE, limit), DatasetSource(SourceKind.FVECS_FILE, path=path))


def read_bvecs(path: str, limit: Optional[int] = None) -> VectorDataset:
    """Bytes are widened to reals as-is, without centering or scaling."""
    return VectorDataset(read_vecs(path, BVECS_DTYPE, limit), DatasetSource(SourceKind.BVECS_FILE, path=path))


def read_ivecs(path: str, limit: Optional[int] = None) -> np.ndarray:
    return read_vecs(path, IVECS_DTYPE, limit).astype(np.int64)


def read_dataset(path: str, limit: Optional[int] = None) -> VectorDataset:
    """Dispatch on the file suffix (.bvecs, otherwise fvecs)."""
    if path.endswith(".bvecs"):
        return read_bvecs(path, limit)
    return read_fvecs(path, limit)


def write_fvecs(path: str, vectors: np.ndarray) -> None:
    write_vecs(path, vectors, FVECS_DTYPE)


def write_bvecs(path: str, vectors: np.ndarray) -> None:
    write_vecs(path, vectors, BVECS_DTYPE)


def write_ivecs(path: str, values: np.ndarray) -> None:
    write_vecs(path, values, IVECS_DTYPE)
