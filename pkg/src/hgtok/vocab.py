"""Byte-level vocabulary: 256 byte symbols plus EOS and a region sentinel.

The region sentinel never enters the language model as a token embedding;
it marks positions whose input rows come from the projector output.
"""

from __future__ import annotations

import numpy as np

PLACEHOLDER = "<hypergraph>"


class ByteVocab:
    eos_id = 256
    hg_id = 257
    size = 258

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode(self, ids) -> str:
        out = bytearray()
        for i in ids:
            if i == self.eos_id:
                break
            if 0 <= i < 256:
                out.append(int(i))
        return out.decode("utf-8", errors="replace")

    def encode_answer(self, text: str) -> np.ndarray:
        """Answer tokens are the UTF-8 bytes followed by EOS."""
        return np.array(self.encode(text) + [self.eos_id], dtype=np.int64)
