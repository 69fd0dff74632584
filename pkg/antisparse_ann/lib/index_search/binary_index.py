"""Module providing the immutable binary index over packed codes and its on-disk form"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from antisparse_ann.lib.embedding.binary_code import BinaryCode, read_code_store, words_for, write_code_store
from antisparse_ann.lib.errors.errors import ContainerFormatError, DimensionError


def sidecar_path(path: str) -> str:
    return path + ".json"


@dataclass(frozen=True)
class BinaryIndex:
    """n packed codes sharing one m, in insertion order (id i is input position i)"""
    codes: np.ndarray
    m: int
    matrix_ref: str
    kind: str = ""
    h_t: Optional[float] = None

    def __post_init__(self) -> None:
        codes = np.array(self.codes, dtype=np.uint64, order="C")
        if codes.ndim != 2 or codes.shape[0] < 1:
            raise DimensionError("An index needs at least one code")
        if codes.shape[1] != words_for(self.m):
            raise DimensionError(f"Code words {codes.shape[1]} do not match m={self.m}")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    @property
    def n(self) -> int:
        return int(self.codes.shape[0])

    def code(self, i: int) -> BinaryCode:
        return BinaryCode(self.codes[i], self.m)

    def metadata(self) -> Dict[str, Any]:
        return {"n": self.n, "m": self.m, "matrix_ref": self.matrix_ref, "kind": self.kind, "h_t": self.h_t}

    def store_bytes(self) -> int:
        """Payload size of the packed code store (header excluded)."""
        return int(self.codes.nbytes)

    def save(self, path: str) -> None:
        """Write the ASBC code store and its JSON sidecar."""
        write_code_store(path, self.codes, self.m)
        with open(sidecar_path(path), "w", encoding="utf-8") as fh:
            json.dump(self.metadata(), fh, indent=2)

    @classmethod
    def load(cls, path: str) -> "BinaryIndex":
        words, m = read_code_store(path)
        meta: Dict[str, Any] = {}
        if os.path.exists(sidecar_path(path)):
            with open(sidecar_path(path), "r", encoding="utf-8") as fh:
                meta = json.load(fh)
            if meta.get("n") != words.shape[0] or meta.get("m") != m:
                raise ContainerFormatError(f"{path}: sidecar n/m disagree with the code store")
        return cls(words, m, str(meta.get("matrix_ref", "")), str(meta.get("kind", "")), meta.get("h_t"))


def build_index(codes: Sequence[BinaryCode], matrix_ref: str, kind: str = "",
                h_t: Optional[float] = None) -> BinaryIndex:
    """Stack codes in input order into an index bound to matrix_ref."""
    if len(codes) == 0:
        raise DimensionError("Cannot build an index from zero codes")
    lengths = {code.m for code in codes}
    if len(lengths) != 1:
        raise DimensionError(f"Codes have mixed lengths {sorted(lengths)}")
    m = lengths.pop()
    return BinaryIndex(np.stack([code.words for code in codes]), m, matrix_ref, kind, h_t)


def index_from_words(words: np.ndarray, m: int, matrix_ref: str, kind: str = "",
                     h_t: Optional[float] = None) -> BinaryIndex:
    """Build from an already packed (n, W) block, as produced by batch encoding."""
    return BinaryIndex(words, m, matrix_ref, kind, h_t)
