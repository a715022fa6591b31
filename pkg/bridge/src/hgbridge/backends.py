"""Language-model backends the bridge can splice embeddings into.

A backend exposes an embedding width, a tokenizer, token embeddings, and
greedy generation from a raw embedding sequence. ``TransformersCausalLm``
wraps any Hugging Face causal LM (loaded by name or injected directly);
inference only, weights never written.
"""

from __future__ import annotations

import numpy as np

from .errors import LoadFailureError


class TransformersCausalLm:
    """Greedy decoding through a pretrained causal LM via inputs_embeds."""

    def __init__(self, model, tokenizer):
        self.model = model
        self.tokenizer = tokenizer
        self.model.eval()

    @classmethod
    def from_pretrained(cls, name: str) -> "TransformersCausalLm":
        try:
            import transformers
        except ImportError as exc:
            raise LoadFailureError(f"transformers is not installed: {exc}") from exc
        try:
            tokenizer = transformers.AutoTokenizer.from_pretrained(name)
            model = transformers.AutoModelForCausalLM.from_pretrained(name)
        except Exception as exc:
            raise LoadFailureError(f"could not load {name!r}: {exc}") from exc
        return cls(model, tokenizer)

    @property
    def width(self) -> int:
        return int(self.model.get_input_embeddings().weight.shape[1])

    def encode(self, text: str) -> list[int]:
        return list(self.tokenizer.encode(text, add_special_tokens=False))

    def embed_tokens(self, ids: list[int]) -> np.ndarray:
        import torch

        with torch.no_grad():
            table = self.model.get_input_embeddings()
            vecs = table(torch.tensor(ids, dtype=torch.long))
        return vecs.detach().cpu().numpy()

    def generate_from_embeds(self, embeds: np.ndarray, max_new: int = 32) -> str:
        import torch

        with torch.no_grad():
            inputs = torch.tensor(embeds[None, :, :], dtype=self.model.dtype)
            out = self.model.generate(
                inputs_embeds=inputs,
                max_new_tokens=max_new,
                do_sample=False,
                pad_token_id=getattr(self.tokenizer, "eos_token_id", 0),
            )
        ids = out[0].tolist()
        return self.tokenizer.decode(ids, skip_special_tokens=True)


class ByteStubLm:
    """Deterministic test backend: byte tokenizer, fixed embedding table,
    and canned generations (one per call, cycling)."""

    def __init__(self, width: int = 16, outputs: list[str] | None = None, seed: int = 0):
        self._width = width
        self.outputs = list(outputs or [])
        self.calls = 0
        rng = np.random.default_rng(seed)
        self.table = rng.standard_normal((258, width)).astype(np.float32)

    @property
    def width(self) -> int:
        return self._width

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def embed_tokens(self, ids: list[int]) -> np.ndarray:
        return self.table[np.asarray(ids, dtype=np.int64)]

    def generate_from_embeds(self, embeds: np.ndarray, max_new: int = 32) -> str:
        if not self.outputs:
            return ""
        out = self.outputs[self.calls % len(self.outputs)]
        self.calls += 1
        return out[:max_new]
