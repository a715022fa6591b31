"""Hierarchical, platform-independent RNG streams.

Every stochastic operation in the package derives its generator from a root
seed plus a label path, so a single ``--seed`` governs the whole pipeline and
independent branches (one per template slot, one per dataset pair, ...) never
share a stream.
"""

from __future__ import annotations

import hashlib

import numpy as np


def child_seed(*parts) -> int:
    """Derive a 64-bit seed from a root seed and an arbitrary label path.

    Parts are encoded into a canonical byte string and hashed with SHA-256,
    which makes the derivation independent of platform and process.
    """
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, bool):
            token = f"b:{int(part)}"
        elif isinstance(part, int):
            token = f"i:{part}"
        elif isinstance(part, str):
            token = f"s:{part}"
        elif isinstance(part, (tuple, list)):
            token = "t:" + ",".join(str(child_seed(p)) for p in part)
        elif part is None:
            token = "n"
        else:
            raise TypeError(f"unsupported seed part: {part!r}")
        h.update(token.encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little")


def rng_from(*parts) -> np.random.Generator:
    """Generator seeded by :func:`child_seed` over the given path."""
    return np.random.Generator(np.random.PCG64(child_seed(*parts)))
