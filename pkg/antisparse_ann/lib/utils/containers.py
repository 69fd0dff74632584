"""Module providing the little-endian header codec shared by the ASPM, ASPC and ASBC containers

Every container starts with 4 magic bytes and a version byte; the remaining
header fields are fixed-width little-endian integers described by a struct
format string. Some containers carry a fixed-size trailer after the payload.
"""
from __future__ import annotations

import struct
from typing import BinaryIO, Optional, Tuple

from antisparse_ann.lib.errors.errors import ContainerFormatError

CONTAINER_VERSION = 1


def write_header(fh: BinaryIO, magic: bytes, fields_fmt: str, *fields: int) -> None:
    """Write magic, version byte and the given little-endian fields."""
    fh.write(magic)
    fh.write(struct.pack("<B", CONTAINER_VERSION))
    fh.write(struct.pack("<" + fields_fmt, *fields))


def read_header(fh: BinaryIO, magic: bytes, fields_fmt: str) -> Tuple[int, ...]:
    """Check magic and version, then return the decoded header fields."""
    found = fh.read(len(magic))
    if found != magic:
        raise ContainerFormatError(f"Bad magic {found!r}, expected {magic!r}")
    raw_version = fh.read(1)
    if len(raw_version) != 1:
        raise ContainerFormatError("Missing version byte")
    (version,) = struct.unpack("<B", raw_version)
    if version != CONTAINER_VERSION:
        raise ContainerFormatError(f"Unsupported {magic.decode()} version {version}")
    size = struct.calcsize("<" + fields_fmt)
    raw = fh.read(size)
    if len(raw) != size:
        raise ContainerFormatError(f"Truncated {magic.decode()} header")
    return struct.unpack("<" + fields_fmt, raw)


def read_payload(fh: BinaryIO, nbytes: int, what: str, strict_end: bool = True) -> bytes:
    """Read exactly nbytes of payload or raise."""
    raw = fh.read(nbytes)
    if len(raw) != nbytes:
        raise ContainerFormatError(f"Truncated {what} payload: expected {nbytes} bytes, got {len(raw)}")
    if strict_end and fh.read(1):
        raise ContainerFormatError(f"Trailing bytes after {what} payload")
    return raw


def read_trailer(fh: BinaryIO, nbytes: int, what: str) -> Optional[bytes]:
    """Return the optional fixed-size block after a payload, or None when the file ends there."""
    raw = fh.read(nbytes + 1)
    if not raw:
        return None
    if len(raw) != nbytes:
        raise ContainerFormatError(f"Malformed {what} trailer: expected {nbytes} bytes, got {len(raw)}")
    return raw
