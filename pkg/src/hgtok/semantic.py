"""Semantic vectors for vertices and hyperedges.

Real text encoders are out of scope; embeddings are consumed either from a
precomputed table file (HGEMB1) or from a deterministic stub that hashes the
object's text (or its id when textless) into a unit-norm vector.

HGEMB1 layout: magic ``HGEMB1``, little-endian u32 count, u32 dim, then
count * dim float32 values row-major; the row index is the object id.
Vertex and hyperedge tables live in separate files.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import Hypergraph
from .errors import DataError, DimensionMismatchError, MalformedRecordError
from .rng import rng_from

MAGIC = b"HGEMB1"


class StubProvider:
    """Seeded hash embeddings: same (seed, text-or-id) always maps to the
    same unit-norm vector, so structurally identical objects with identical
    text are semantically indistinguishable."""

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 1:
            raise DataError("embedding dim must be >= 1")
        self.dim = dim
        self.seed = seed
        self._cache: dict[tuple, np.ndarray] = {}

    def _vector(self, *key) -> np.ndarray:
        vec = self._cache.get(key)
        if vec is None:
            raw = rng_from(self.seed, "semstub", *key).standard_normal(self.dim)
            vec = raw / np.linalg.norm(raw)
            self._cache[key] = vec
        return vec

    def vertex(self, h: Hypergraph, v: int) -> np.ndarray:
        text = h.vertex_text.get(v)
        return self._vector("vt", text) if text is not None else self._vector("v", v)

    def hyperedge(self, h: Hypergraph, e: int) -> np.ndarray:
        text = h.hyperedge_text.get(e)
        return self._vector("et", text) if text is not None else self._vector("e", e)


class TableProvider:
    """Embeddings read from precomputed HGEMB1 tables, indexed by object id."""

    def __init__(self, vertex_table: np.ndarray, hyperedge_table: np.ndarray):
        if vertex_table.ndim != 2 or hyperedge_table.ndim != 2:
            raise DimensionMismatchError("embedding tables must be 2-D")
        if vertex_table.shape[1] != hyperedge_table.shape[1]:
            raise DimensionMismatchError(
                f"vertex dim {vertex_table.shape[1]} != hyperedge dim {hyperedge_table.shape[1]}"
            )
        self.vertex_table = vertex_table
        self.hyperedge_table = hyperedge_table
        self.dim = vertex_table.shape[1]

    @classmethod
    def from_files(cls, vertex_path: str | Path, hyperedge_path: str | Path) -> "TableProvider":
        return cls(read_table(vertex_path), read_table(hyperedge_path))

    def vertex(self, h: Hypergraph, v: int) -> np.ndarray:
        if v >= len(self.vertex_table):
            raise DataError(f"vertex {v} outside embedding table ({len(self.vertex_table)} rows)")
        return self.vertex_table[v]

    def hyperedge(self, h: Hypergraph, e: int) -> np.ndarray:
        if e >= len(self.hyperedge_table):
            raise DataError(f"hyperedge {e} outside embedding table ({len(self.hyperedge_table)} rows)")
        return self.hyperedge_table[e]


def write_table(path: str | Path, table: np.ndarray) -> None:
    table = np.asarray(table, dtype=np.float32)
    if table.ndim != 2:
        raise DimensionMismatchError("embedding table must be 2-D")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", table.shape[0], table.shape[1]))
        fh.write(table.astype("<f4").tobytes(order="C"))


def read_table(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[: len(MAGIC)] != MAGIC:
        raise MalformedRecordError(f"{path}: bad magic, expected {MAGIC!r}")
    count, dim = struct.unpack_from("<II", blob, len(MAGIC))
    expected = len(MAGIC) + 8 + count * dim * 4
    if len(blob) != expected:
        raise MalformedRecordError(f"{path}: expected {expected} bytes, found {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f4", offset=len(MAGIC) + 8)
    return flat.reshape(count, dim).astype(np.float64)
