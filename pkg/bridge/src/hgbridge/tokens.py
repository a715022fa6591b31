"""Readers/writers for the token-export and adapter file formats.

HGTOK1: magic ``HGTOK1``, little-endian u32 L and d_llm, then L * d_llm
float32 values row-major. HGADP1 adapters are the same layout with an
(in_dim, out_dim) header and carry a linear map applied as ``rows @ A``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import BadFileError

TOKENS_MAGIC = b"HGTOK1"
ADAPTER_MAGIC = b"HGADP1"


def _read_matrix(path: str | Path, magic: bytes) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[: len(magic)] != magic:
        raise BadFileError(f"{path}: expected magic {magic!r}")
    rows, cols = struct.unpack_from("<II", blob, len(magic))
    expected = len(magic) + 8 + rows * cols * 4
    if len(blob) != expected:
        raise BadFileError(f"{path}: expected {expected} bytes, found {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f4", offset=len(magic) + 8)
    return flat.reshape(rows, cols)


def _write_matrix(path: str | Path, matrix: np.ndarray, magic: bytes) -> None:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise BadFileError("matrix must be 2-D")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", matrix.shape[0], matrix.shape[1]))
        fh.write(matrix.astype("<f4").tobytes(order="C"))


def read_tokens(path: str | Path) -> np.ndarray:
    return _read_matrix(path, TOKENS_MAGIC)


def write_tokens(path: str | Path, tokens: np.ndarray) -> None:
    _write_matrix(path, tokens, TOKENS_MAGIC)


def read_adapter(path: str | Path) -> np.ndarray:
    return _read_matrix(path, ADAPTER_MAGIC)


def write_adapter(path: str | Path, adapter: np.ndarray) -> None:
    _write_matrix(path, adapter, ADAPTER_MAGIC)
