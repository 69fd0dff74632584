"""Module providing the d x m projection matrices shared by coding and search

Random matrices come from numpy's PCG64 bit generator feeding
``Generator.standard_normal`` (ziggurat), both of which are specified
independently of the platform, so a (kind, d, m, seed) tuple names one matrix
everywhere.

An ASPM file is the magic, the version byte, u32 d, u32 m and d*m f64 entries
in row-major order, optionally followed by a 9-byte trailer (u8 kind code,
u64 seed). Files without the trailer load with seed 0 and the kind inferred
from A A^T.
"""
from __future__ import annotations

import enum
import hashlib
import io
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from antisparse_ann.lib.errors.errors import AntisparseError, ContainerFormatError, DimensionError
from antisparse_ann.lib.utils.containers import read_header, read_payload, read_trailer, write_header

logger = logging.getLogger(__name__)

MAGIC = b"ASPM"
HEADER_FIELDS = "II"  # rows, cols
TRAILER_FIELDS = "<BQ"  # kind code, seed
TRAILER_SIZE = struct.calcsize(TRAILER_FIELDS)

RANK_RTOL = 1e-10
FRAME_ATOL = 1e-10
UINT64_MOD = 2**64
MAX_RESEEDS = 16


class MatrixKind(str, enum.Enum):
    """How a projection matrix was drawn"""
    RANDOM_GAUSSIAN = "gauss"
    UNIFORM_FRAME = "frame"


_KIND_CODES = {MatrixKind.RANDOM_GAUSSIAN: 0, MatrixKind.UNIFORM_FRAME: 1}
_CODE_KINDS = {code: kind for kind, code in _KIND_CODES.items()}


@dataclass(frozen=True)
class ProjectionMatrix:
    """Full-rank d x m matrix A = [a_1 | ... | a_m]"""
    entries: np.ndarray
    kind: MatrixKind
    seed: int
    _ref: str = field(default="", init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=np.float64, order="C")
        if entries.ndim != 2:
            raise DimensionError(f"Projection matrix must be 2-D, got shape {entries.shape}")
        d, m = entries.shape
        if d < 1 or m < d:
            raise DimensionError(f"Projection matrix needs 1 <= d <= m, got d={d}, m={m}")
        if not np.all(np.isfinite(entries)):
            raise AntisparseError("Projection matrix has non-finite entries")
        if not (0 <= int(self.seed) < UINT64_MOD):
            raise DimensionError(f"Seed {self.seed} is not a 64-bit unsigned integer")
        if not is_full_rank(entries):
            raise DimensionError(f"Projection matrix {d}x{m} is not of full rank {d}")
        kind = MatrixKind(self.kind)
        if kind is MatrixKind.UNIFORM_FRAME:
            deviation = frame_deviation(entries)
            if deviation > FRAME_ATOL:
                raise DimensionError(f"Frame rows are not orthonormal: |AA^T - I|_max = {deviation:.3e}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "_ref", hashlib.sha256(self._matrix_bytes()).hexdigest()[:16])

    @property
    def rows(self) -> int:
        return int(self.entries.shape[0])

    @property
    def cols(self) -> int:
        return int(self.entries.shape[1])

    @property
    def ref(self) -> str:
        """Identifier binding indexes to this exact matrix (hash of header and entries)."""
        return self._ref

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProjectionMatrix):
            return NotImplemented
        return (self.kind == other.kind and self.seed == other.seed
                and np.array_equal(self.entries, other.entries))

    def __hash__(self) -> int:
        return hash(self._ref)

    def _matrix_bytes(self) -> bytes:
        buffer = io.BytesIO()
        write_header(buffer, MAGIC, HEADER_FIELDS, self.rows, self.cols)
        buffer.write(self.entries.astype("<f8").tobytes(order="C"))
        return buffer.getvalue()

    def to_bytes(self) -> bytes:
        return self._matrix_bytes() + struct.pack(TRAILER_FIELDS, _KIND_CODES[self.kind], self.seed)

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ProjectionMatrix":
        buffer = io.BytesIO(raw)
        rows, cols = read_header(buffer, MAGIC, HEADER_FIELDS)
        payload = read_payload(buffer, 8 * rows * cols, "ASPM", strict_end=False)
        entries = np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)
        trailer = read_trailer(buffer, TRAILER_SIZE, "ASPM")
        if trailer is None:
            kind = MatrixKind.RANDOM_GAUSSIAN
            if rows > 0 and cols > 0 and frame_deviation(entries) <= FRAME_ATOL:
                kind = MatrixKind.UNIFORM_FRAME
            logger.debug("ASPM %dx%d has no trailer; treating it as %s", rows, cols, kind.value)
            return cls(entries, kind, 0)
        kind_code, seed = struct.unpack(TRAILER_FIELDS, trailer)
        if kind_code not in _CODE_KINDS:
            raise ContainerFormatError(f"Unknown matrix kind code {kind_code}")
        return cls(entries, _CODE_KINDS[kind_code], seed)

    @classmethod
    def load(cls, path: str) -> "ProjectionMatrix":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _check_dims(d: int, m: int) -> None:
    if d < 1 or m < d:
        raise DimensionError(f"Invalid dimensions: need 1 <= d <= m, got d={d}, m={m}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def is_full_rank(entries: np.ndarray, rtol: float = RANK_RTOL) -> bool:
    """True when the smallest singular value exceeds rtol times the largest."""
    singular = np.linalg.svd(entries, compute_uv=False)
    return bool(singular[-1] > rtol * singular[0])


def frame_deviation(entries: np.ndarray) -> float:
    """max |A A^T - I_d|"""
    d = entries.shape[0]
    return float(np.max(np.abs(entries @ entries.T - np.eye(d))))


def make_random_gaussian(d: int, m: int, seed: int) -> ProjectionMatrix:
    """d x m matrix of i.i.d. standard normal entries (reseeds with seed+1 on rank failure)."""
    _check_dims(d, m)
    current = int(seed) % UINT64_MOD
    for _ in range(MAX_RESEEDS):
        entries = _rng(current).standard_normal((d, m))
        if is_full_rank(entries):
            if current != seed:
                logger.info("Gaussian draw for seed %d was rank deficient; used seed %d", seed, current)
            return ProjectionMatrix(entries, MatrixKind.RANDOM_GAUSSIAN, current)
        current = (current + 1) % UINT64_MOD
    raise AntisparseError(f"No full-rank {d}x{m} Gaussian draw after {MAX_RESEEDS} reseeds from {seed}")


def make_uniform_frame(d: int, m: int, seed: int) -> ProjectionMatrix:
    """First d rows of the Q factor of a seeded m x m Gaussian matrix, with diag(R) > 0."""
    _check_dims(d, m)
    current = int(seed) % UINT64_MOD
    for _ in range(MAX_RESEEDS):
        gaussian = _rng(current).standard_normal((m, m))
        q, r = np.linalg.qr(gaussian)
        diag = np.diag(r)
        if np.all(np.abs(diag) > RANK_RTOL * np.max(np.abs(diag))):
            # Flip columns of Q (rows of R) so that R has a positive diagonal
            q = q * np.where(diag < 0, -1.0, 1.0)
            entries = np.ascontiguousarray(q[:d, :])
            if current != seed:
                logger.info("QR input for seed %d was singular; used seed %d", seed, current)
            return ProjectionMatrix(entries, MatrixKind.UNIFORM_FRAME, current)
        current = (current + 1) % UINT64_MOD
    raise AntisparseError(f"No non-singular {m}x{m} QR input after {MAX_RESEEDS} reseeds from {seed}")


def make_projection(kind: MatrixKind | str, d: int, m: int, seed: int) -> ProjectionMatrix:
    """Dispatch on the matrix kind name used by configs and the CLI."""
    if MatrixKind(kind) is MatrixKind.UNIFORM_FRAME:
        return make_uniform_frame(d, m, seed)
    return make_random_gaussian(d, m, seed)
