"""Tiny frozen byte-level causal language model.

A standard pre-norm decoder stack at desk scale. Parameters are drawn once
from a seed and never updated; training code only ever needs gradients with
respect to the input rows of the hypergraph region, which ``backward_inputs``
produces by backpropagating through frozen weights.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionMismatchError
from .nnops import gelu, gelu_prime, layer_norm, layer_norm_backward, softmax
from .rng import rng_from
from .vocab import ByteVocab


@dataclass(frozen=True)
class LmConfig:
    d_model: int = 128
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 512
    max_len: int = 2048
    vocab_size: int = ByteVocab.size

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise DataError("d_model must be divisible by n_heads")


class TinyCausalLm:
    """Frozen decoder; accepts token ids with an optional span of direct
    embedding rows standing in for the hypergraph region."""

    def __init__(self, config: LmConfig = LmConfig(), seed: int = 0, dtype=np.float32):
        self.config = config
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.vocab = ByteVocab()
        self._params = self._init(seed)

    def _init(self, seed: int) -> dict[str, np.ndarray]:
        # Fan-in scaling keeps the frozen net's residual branches at O(1),
        # so input perturbations (the hypergraph region) reach the answer
        # logits with usable gain instead of being attenuated away.
        cfg = self.config
        emb_std = 0.5

        def draw(name, shape, scale):
            return (rng_from(seed, "lm", name).standard_normal(shape) * scale).astype(self.dtype)

        p: dict[str, np.ndarray] = {
            "tok_emb": draw("tok_emb", (cfg.vocab_size, cfg.d_model), emb_std),
            "pos_emb": draw("pos_emb", (cfg.max_len, cfg.d_model), emb_std),
            "ln_f_g": np.ones(cfg.d_model, dtype=self.dtype),
            "ln_f_b": np.zeros(cfg.d_model, dtype=self.dtype),
            "w_head": draw("w_head", (cfg.d_model, cfg.vocab_size), 1.0 / np.sqrt(cfg.d_model)),
        }
        d_std = 1.0 / np.sqrt(cfg.d_model)
        for layer in range(cfg.n_layers):
            p[f"l{layer}.ln1_g"] = np.ones(cfg.d_model, dtype=self.dtype)
            p[f"l{layer}.ln1_b"] = np.zeros(cfg.d_model, dtype=self.dtype)
            p[f"l{layer}.w_qkv"] = draw(f"l{layer}.w_qkv", (cfg.d_model, 3 * cfg.d_model), d_std)
            p[f"l{layer}.w_o"] = draw(f"l{layer}.w_o", (cfg.d_model, cfg.d_model), d_std)
            p[f"l{layer}.ln2_g"] = np.ones(cfg.d_model, dtype=self.dtype)
            p[f"l{layer}.ln2_b"] = np.zeros(cfg.d_model, dtype=self.dtype)
            p[f"l{layer}.w_ff1"] = draw(f"l{layer}.w_ff1", (cfg.d_model, cfg.d_ff), d_std)
            p[f"l{layer}.b_ff1"] = np.zeros(cfg.d_ff, dtype=self.dtype)
            p[f"l{layer}.w_ff2"] = draw(
                f"l{layer}.w_ff2", (cfg.d_ff, cfg.d_model), 1.0 / np.sqrt(cfg.d_ff)
            )
            p[f"l{layer}.b_ff2"] = np.zeros(cfg.d_model, dtype=self.dtype)
        return p

    def theta_hash(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self._params):
            h.update(name.encode())
            h.update(self._params[name].tobytes())
        return h.hexdigest()

    def embed(self, tokens: np.ndarray, region_rows: np.ndarray | None = None, hg_start: int | None = None) -> np.ndarray:
        cfg = self.config
        t = len(tokens)
        if t > cfg.max_len:
            raise DataError(f"sequence length {t} exceeds max_len {cfg.max_len}")
        x = self._params["tok_emb"][tokens].astype(self.dtype).copy()
        if region_rows is not None:
            region_rows = np.asarray(region_rows, dtype=self.dtype)
            if region_rows.shape[1] != cfg.d_model:
                raise DimensionMismatchError(
                    f"region rows have width {region_rows.shape[1]}, model expects {cfg.d_model}"
                )
            if hg_start is None or hg_start + len(region_rows) > t:
                raise DataError("region span does not fit the token sequence")
            x[hg_start : hg_start + len(region_rows)] = region_rows
        return x + self._params["pos_emb"][:t]

    def forward(
        self,
        tokens: np.ndarray,
        region_rows: np.ndarray | None = None,
        hg_start: int | None = None,
        want_cache: bool = False,
    ):
        """Logits over the vocabulary at every position."""
        cfg = self.config
        p = self._params
        x = self.embed(tokens, region_rows, hg_start)
        t = len(x)
        causal = np.triu(np.full((t, t), -np.inf, dtype=self.dtype), k=1)
        cache: list = []
        for layer in range(cfg.n_layers):
            xn, ln1_cache = layer_norm(x, p[f"l{layer}.ln1_g"], p[f"l{layer}.ln1_b"])
            xn = xn.astype(self.dtype)
            qkv = xn @ p[f"l{layer}.w_qkv"]
            q, k, v = np.split(qkv, 3, axis=1)
            heads_out = np.empty_like(x)
            head_caches = []
            dh = cfg.d_model // cfg.n_heads
            for head in range(cfg.n_heads):
                sl = slice(head * dh, (head + 1) * dh)
                scores = (q[:, sl] @ k[:, sl].T) / np.sqrt(dh) + causal
                probs = softmax(scores, axis=1)
                heads_out[:, sl] = probs @ v[:, sl]
                head_caches.append(probs)
            attn = heads_out @ p[f"l{layer}.w_o"]
            x1 = x + attn
            x1n, ln2_cache = layer_norm(x1, p[f"l{layer}.ln2_g"], p[f"l{layer}.ln2_b"])
            x1n = x1n.astype(self.dtype)
            z_ff = x1n @ p[f"l{layer}.w_ff1"] + p[f"l{layer}.b_ff1"]
            h_ff = gelu(z_ff)
            x = x1 + h_ff @ p[f"l{layer}.w_ff2"] + p[f"l{layer}.b_ff2"]
            if want_cache:
                cache.append(
                    {
                        "ln1": ln1_cache,
                        "xn": xn,
                        "q": q,
                        "k": k,
                        "v": v,
                        "probs": head_caches,
                        "ln2": ln2_cache,
                        "x1n": x1n,
                        "z_ff": z_ff,
                        "h_ff": h_ff,
                    }
                )
        xf, ln_f_cache = layer_norm(x, p["ln_f_g"], p["ln_f_b"])
        xf = xf.astype(self.dtype)
        logits = xf @ p["w_head"]
        if want_cache:
            return logits, {"blocks": cache, "ln_f": ln_f_cache, "xf": xf, "t": t}
        return logits

    def backward_inputs(self, d_logits: np.ndarray, cache) -> np.ndarray:
        """Gradient of the loss with respect to the input embedding rows.

        Weights stay untouched; the result is sliced at the region span by
        the caller to obtain gradients for the projector output.
        """
        cfg = self.config
        p = self._params
        dxf = d_logits @ p["w_head"].T
        dx, _, _ = layer_norm_backward(dxf, cache["ln_f"], p["ln_f_g"])
        dh = cfg.d_model // cfg.n_heads
        for layer in reversed(range(cfg.n_layers)):
            blk = cache["blocks"][layer]
            dh_ff = dx @ p[f"l{layer}.w_ff2"].T
            dz_ff = dh_ff * gelu_prime(blk["z_ff"])
            dx1n = dz_ff @ p[f"l{layer}.w_ff1"].T
            dx1_from_ln, _, _ = layer_norm_backward(dx1n, blk["ln2"], p[f"l{layer}.ln2_g"])
            dx1 = dx + dx1_from_ln
            dattn = dx1 @ p[f"l{layer}.w_o"].T
            dq = np.empty_like(blk["q"])
            dk = np.empty_like(blk["k"])
            dv = np.empty_like(blk["v"])
            for head in range(cfg.n_heads):
                sl = slice(head * dh, (head + 1) * dh)
                probs = blk["probs"][head]
                d_out = dattn[:, sl]
                dv[:, sl] = probs.T @ d_out
                dprobs = d_out @ blk["v"][:, sl].T
                dscores = probs * (dprobs - (dprobs * probs).sum(axis=1, keepdims=True))
                dq[:, sl] = dscores @ blk["k"][:, sl] / np.sqrt(dh)
                dk[:, sl] = dscores.T @ blk["q"][:, sl] / np.sqrt(dh)
            dqkv = np.hstack([dq, dk, dv])
            dxn = dqkv @ p[f"l{layer}.w_qkv"].T
            dx_from_ln, _, _ = layer_norm_backward(dxn, blk["ln1"], p[f"l{layer}.ln1_g"])
            dx = dx1 + dx_from_ln
        return dx

    def generate(
        self,
        prefix_tokens: np.ndarray,
        region_rows: np.ndarray | None = None,
        hg_start: int | None = None,
        max_new: int = 32,
    ) -> list[int]:
        """Greedy decoding; stops at EOS or after ``max_new`` tokens."""
        tokens = list(prefix_tokens)
        out: list[int] = []
        for _ in range(max_new):
            logits = self.forward(np.array(tokens, dtype=np.int64), region_rows, hg_start)
            nxt = int(np.argmax(logits[-1]))
            out.append(nxt)
            if nxt == self.vocab.eos_id:
                break
            tokens.append(nxt)
        return out
