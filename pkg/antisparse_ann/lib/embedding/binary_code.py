"""Module providing packed {-1,+1}^m codes and the ASBC code store

Bit i of a code lives in word i // 64 at position i % 64; +1 maps to bit 1,
-1 to bit 0, and unused tail bits of the last word are always zero.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from antisparse_ann.lib.errors.errors import ContainerFormatError, DimensionError
from antisparse_ann.lib.utils.containers import read_header, read_payload, write_header

MAGIC = b"ASBC"
HEADER_FIELDS = "IQ"  # m, n
WORD_BITS = 64


def words_for(m: int) -> int:
    return (m + WORD_BITS - 1) // WORD_BITS


def pack_bits(signs: np.ndarray) -> np.ndarray:
    """Pack a (..., m) array of +-1 (positive -> 1) into (..., ceil(m/64)) little-endian uint64 words."""
    values = np.asarray(signs)
    m = values.shape[-1]
    if m < 1:
        raise DimensionError("Cannot pack an empty code")
    packed = np.packbits(values > 0, axis=-1, bitorder="little")
    pad = words_for(m) * 8 - packed.shape[-1]
    if pad:
        packed = np.concatenate([packed, np.zeros(packed.shape[:-1] + (pad,), dtype=np.uint8)], axis=-1)
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def unpack_bits(words: np.ndarray, m: int) -> np.ndarray:
    """Inverse of pack_bits: (..., W) uint64 words -> (..., m) int8 array of +-1."""
    raw = np.ascontiguousarray(np.asarray(words, dtype="<u8")).view(np.uint8)
    bits = np.unpackbits(raw, axis=-1, bitorder="little", count=m)
    return (bits.astype(np.int8) * 2 - 1).astype(np.int8)


def code_bytes(words: np.ndarray) -> np.ndarray:
    """Little-endian byte view of packed words: byte c holds bits 8c .. 8c+7."""
    return np.ascontiguousarray(np.asarray(words, dtype="<u8")).view(np.uint8)


@dataclass(frozen=True)
class BinaryCode:
    """One m-bit sign pattern e(y) in canonical packed form"""
    words: np.ndarray
    m: int

    def __post_init__(self) -> None:
        words = np.array(self.words, dtype=np.uint64).reshape(-1)
        if self.m < 1 or words.shape[0] != words_for(self.m):
            raise DimensionError(f"{words.shape[0]} word(s) cannot hold a {self.m}-bit code")
        tail = self.m % WORD_BITS
        if tail and int(words[-1]) >> tail:
            raise DimensionError("Tail bits of a packed code must be zero")
        words.setflags(write=False)
        object.__setattr__(self, "words", words)

    @classmethod
    def from_signs(cls, signs: np.ndarray) -> "BinaryCode":
        values = np.asarray(signs).reshape(-1)
        return cls(pack_bits(values), int(values.shape[0]))

    def signs(self) -> np.ndarray:
        return unpack_bits(self.words, self.m)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryCode):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.words, other.words)

    def __hash__(self) -> int:
        return hash((self.m, self.words.tobytes()))


def write_code_store(path: str, words: np.ndarray, m: int) -> None:
    """Write n packed codes as an ASBC container."""
    block = np.asarray(words, dtype=np.uint64)
    if block.ndim != 2 or block.shape[1] != words_for(m):
        raise DimensionError(f"Code block shape {block.shape} does not match m={m}")
    buffer = io.BytesIO()
    write_header(buffer, MAGIC, HEADER_FIELDS, m, block.shape[0])
    buffer.write(block.astype("<u8").tobytes(order="C"))
    with open(path, "wb") as fh:
        fh.write(buffer.getvalue())


def read_code_store(path: str) -> Tuple[np.ndarray, int]:
    """Read an ASBC container; returns (n x W uint64 words, m)."""
    with open(path, "rb") as fh:
        m, n = read_header(fh, MAGIC, HEADER_FIELDS)
        if m < 1:
            raise ContainerFormatError(f"{path}: code length must be positive")
        width = words_for(m)
        payload = read_payload(fh, 8 * n * width, "ASBC")
    return np.frombuffer(payload, dtype="<u8").astype(np.uint64).reshape(n, width), int(m)
