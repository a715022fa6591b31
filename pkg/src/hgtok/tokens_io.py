"""HGTOK1 token-export files: magic, little-endian u32 L and d_llm, then
L * d_llm float32 values row-major."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import MalformedRecordError

MAGIC = b"HGTOK1"


def write_tokens(path: str | Path, tokens: np.ndarray) -> None:
    tokens = np.asarray(tokens)
    if tokens.ndim != 2:
        raise MalformedRecordError("token matrix must be 2-D")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", tokens.shape[0], tokens.shape[1]))
        fh.write(tokens.astype("<f4").tobytes(order="C"))


def read_tokens(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[: len(MAGIC)] != MAGIC:
        raise MalformedRecordError(f"{path}: bad magic, expected {MAGIC!r}")
    length, dim = struct.unpack_from("<II", blob, len(MAGIC))
    expected = len(MAGIC) + 8 + length * dim * 4
    if len(blob) != expected:
        raise MalformedRecordError(f"{path}: expected {expected} bytes, found {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f4", offset=len(MAGIC) + 8)
    return flat.reshape(length, dim).astype(np.float64)
