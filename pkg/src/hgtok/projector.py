"""Projector from encapsulated slot tokens to LM-space hypergraph tokens.

Pipeline: role-conditioned semantic/structural stems, one bidirectional
vertex<->hyperedge set-attention block driven by the recorded incidence
pattern, and a two-layer output MLP. Auxiliary heads read the post-block
hidden states: an order-bucket classifier and a pairwise relation
classifier. Forward returns a cache from which ``backward`` produces exact
analytic gradients for every parameter.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import bucket_of_order, hyperedge_degree
from .nnops import gelu, gelu_prime, layer_norm, layer_norm_backward, softmax
from .errors import (
    DataError,
    DimensionMismatchError,
    MalformedRecordError,
    NonFiniteLossError,
    StaleCacheError,
)
from .rng import rng_from
from .serialize import NUM_HIP_ROLES, EncapsulatedTokens


@dataclass(frozen=True)
class HipConfig:
    d_text: int
    d_struct: int
    d_llm: int
    d_core: int = 384
    d_sidecar: int = 64
    num_order_buckets: int = 4

    def __post_init__(self):
        for name in ("d_text", "d_struct", "d_llm", "d_core", "d_sidecar", "num_order_buckets"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be positive")

    @property
    def d_h(self) -> int:
        return self.d_core + self.d_sidecar

    @property
    def d_att(self) -> int:
        return self.d_h


def param_specs(config: HipConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical parameter declaration order; also the checkpoint layout."""
    d_h = config.d_h
    return [
        ("w_sem", (config.d_core, config.d_text)),
        ("w_str", (NUM_HIP_ROLES, config.d_sidecar, config.d_struct)),
        ("w_q", (config.d_att, d_h)),
        ("w_k", (config.d_att, d_h)),
        ("w_ev", (d_h, d_h)),
        ("w_ve", (d_h, d_h)),
        ("phi_e_w1", (d_h, 2 * d_h)),
        ("phi_e_b1", (d_h,)),
        ("phi_e_w2", (d_h, d_h)),
        ("phi_e_b2", (d_h,)),
        ("phi_v_w1", (d_h, 2 * d_h)),
        ("phi_v_b1", (d_h,)),
        ("phi_v_w2", (d_h, d_h)),
        ("phi_v_b2", (d_h,)),
        ("out_w1", (d_h, d_h)),
        ("out_b1", (d_h,)),
        ("out_w2", (config.d_llm, d_h)),
        ("out_b2", (config.d_llm,)),
        ("ln_sem_g", (config.d_text,)),
        ("ln_sem_b", (config.d_text,)),
        ("ln_str_g", (config.d_struct,)),
        ("ln_str_b", (config.d_struct,)),
        ("ln_h0_g", (d_h,)),
        ("ln_h0_b", (d_h,)),
        ("ln_e_g", (d_h,)),
        ("ln_e_b", (d_h,)),
        ("ln_v_g", (d_h,)),
        ("ln_v_b", (d_h,)),
        ("g_ord_w", (config.num_order_buckets, d_h)),
        ("g_ord_b", (config.num_order_buckets,)),
        ("g_rel_w", (3, 2 * d_h)),
        ("g_rel_b", (3,)),
    ]


class HipParams:
    """All projector weights, addressable by name and as one flat vector."""

    def __init__(self, config: HipConfig, arrays: dict[str, np.ndarray]):
        self.config = config
        self._arrays = arrays
        self.version = 0
        expected = dict(param_specs(config))
        if set(arrays) != set(expected):
            raise DimensionMismatchError("parameter set does not match config")
        for name, arr in arrays.items():
            if arr.shape != expected[name]:
                raise DimensionMismatchError(
                    f"{name}: expected shape {expected[name]}, got {arr.shape}"
                )

    def __getattr__(self, name: str) -> np.ndarray:
        arrays = self.__dict__.get("_arrays", {})
        if name in arrays:
            return arrays[name]
        raise AttributeError(name)

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        if name not in self._arrays:
            raise KeyError(name)
        self._arrays[name] = value

    def names(self) -> list[str]:
        return [name for name, _ in param_specs(self.config)]

    def flatten(self) -> np.ndarray:
        return np.concatenate([self._arrays[n].ravel() for n in self.names()])

    def load_flat(self, vec: np.ndarray) -> None:
        """Overwrite all parameters in place from a flat vector."""
        offset = 0
        for name, shape in param_specs(self.config):
            size = int(np.prod(shape))
            self._arrays[name][...] = vec[offset : offset + size].reshape(shape)
            offset += size
        if offset != vec.size:
            raise DimensionMismatchError(f"flat vector has {vec.size} entries, need {offset}")
        self.version += 1

    def copy(self) -> "HipParams":
        return HipParams(self.config, {k: v.copy() for k, v in self._arrays.items()})

    @property
    def num_entries(self) -> int:
        return sum(int(np.prod(shape)) for _, shape in param_specs(self.config))

    @classmethod
    def zeros(cls, config: HipConfig) -> "HipParams":
        return cls(config, {name: np.zeros(shape) for name, shape in param_specs(config)})


def init_params(config: HipConfig, seed: int) -> HipParams:
    """Gaussian weights with std 1/sqrt(fan_in); LN gains 1, biases 0."""
    arrays: dict[str, np.ndarray] = {}
    for name, shape in param_specs(config):
        if name.endswith("_g"):
            arrays[name] = np.ones(shape)
        elif name.endswith("_b") or name.endswith("b1") or name.endswith("b2"):
            arrays[name] = np.zeros(shape)
        else:
            fan_in = shape[-1]
            rng = rng_from(seed, "hip_init", name)
            arrays[name] = rng.standard_normal(shape) / np.sqrt(fan_in)
    return HipParams(config, arrays)


# --- forward ---------------------------------------------------------------


@dataclass
class _AttnSite:
    slot: int
    neighbors: tuple[int, ...]
    alpha: np.ndarray
    q: np.ndarray
    keys: np.ndarray
    values: np.ndarray
    message: np.ndarray
    u: np.ndarray
    z1: np.ndarray
    g1: np.ndarray
    ln_cache: tuple


@dataclass
class HipCache:
    tokens: EncapsulatedTokens
    params: HipParams
    version: int
    a: np.ndarray = None
    s: np.ndarray = None
    ln_sem: tuple = None
    ln_str: tuple = None
    a_ln: np.ndarray = None
    s_ln: np.ndarray = None
    c: np.ndarray = None
    p: np.ndarray = None
    ln_h0: tuple = None
    h0: np.ndarray = None
    e_sites: list = field(default_factory=list)
    v_sites: list = field(default_factory=list)
    h_tilde: np.ndarray = None
    h1: np.ndarray = None
    z_out: np.ndarray = None
    g_out: np.ndarray = None
    updated_e: set = field(default_factory=set)
    updated_v: set = field(default_factory=set)

    def check(self, params: HipParams) -> None:
        if params is not self.params or params.version != self.version:
            raise StaleCacheError("cache does not match these parameters")


def stems(tokens: EncapsulatedTokens, params: HipParams, cache: HipCache) -> np.ndarray:
    """Semantic core + role-conditioned structural patch, concatenated."""
    cfg = params.config
    a = np.asarray(tokens.a, dtype=float)
    s = np.asarray(tokens.s, dtype=float)
    if a.shape[1] != cfg.d_text or s.shape[1] != cfg.d_struct:
        raise DimensionMismatchError(
            f"token dims ({a.shape[1]}, {s.shape[1]}) do not match config "
            f"({cfg.d_text}, {cfg.d_struct})"
        )
    a_ln, ln_sem = layer_norm(a, params.ln_sem_g, params.ln_sem_b)
    s_ln, ln_str = layer_norm(s, params.ln_str_g, params.ln_str_b)
    c = a_ln @ params.w_sem.T
    p = np.empty((len(a), cfg.d_sidecar))
    for role in range(NUM_HIP_ROLES):
        rows = tokens.hip_roles == role
        if rows.any():
            p[rows] = s_ln[rows] @ params.w_str[role].T
    h0, ln_h0 = layer_norm(np.hstack([c, p]), params.ln_h0_g, params.ln_h0_b)
    cache.a, cache.s = a, s
    cache.ln_sem, cache.ln_str = ln_sem, ln_str
    cache.a_ln, cache.s_ln = a_ln, s_ln
    cache.c, cache.p = c, p
    cache.ln_h0, cache.h0 = ln_h0, h0
    return h0


def _attend(params, q_state, neighbor_states, w_msg, slot, neighbors, ln_g, ln_b, w1, b1, w2, b2, base):
    """One set-attention site: softmax over neighbors, message, fuse, LN."""
    d_att = params.config.d_att
    q = params.w_q @ q_state
    keys = neighbor_states @ params.w_k.T
    logits = keys @ q / np.sqrt(d_att)
    alpha = softmax(logits)
    values = neighbor_states @ w_msg.T
    message = alpha @ values
    u = np.concatenate([base, message])
    z1 = w1 @ u + b1
    g1 = gelu(z1)
    f = w2 @ g1 + b2
    out, ln_cache = layer_norm(base + f, ln_g, ln_b)
    site = _AttnSite(
        slot=slot,
        neighbors=neighbors,
        alpha=alpha,
        q=q,
        keys=keys,
        values=values,
        message=message,
        u=u,
        z1=z1,
        g1=g1,
        ln_cache=ln_cache,
    )
    return out[0], site


def hyper_incidence_block(h0: np.ndarray, tokens: EncapsulatedTokens, params: HipParams, cache: HipCache) -> np.ndarray:
    """Bidirectional vertex<->hyperedge set attention over the incidence
    pattern; overview, pad, and isolated slots carry over unchanged."""
    seq = tokens.seq
    h_tilde = h0.copy()
    for e_slot in sorted(seq.members):
        mem = seq.members[e_slot]
        if not mem:
            continue
        out, site = _attend(
            params,
            h0[e_slot],
            h0[list(mem)],
            params.w_ev,
            e_slot,
            mem,
            params.ln_e_g,
            params.ln_e_b,
            params.phi_e_w1,
            params.phi_e_b1,
            params.phi_e_w2,
            params.phi_e_b2,
            h0[e_slot],
        )
        h_tilde[e_slot] = out
        cache.e_sites.append(site)
        cache.updated_e.add(e_slot)
    h1 = h_tilde.copy()
    for v_slot in sorted(seq.incident):
        nbrs = seq.incident[v_slot]
        if not nbrs:
            continue
        out, site = _attend(
            params,
            h0[v_slot],
            h_tilde[list(nbrs)],
            params.w_ve,
            v_slot,
            nbrs,
            params.ln_v_g,
            params.ln_v_b,
            params.phi_v_w1,
            params.phi_v_b1,
            params.phi_v_w2,
            params.phi_v_b2,
            h0[v_slot],
        )
        h1[v_slot] = out
        cache.v_sites.append(site)
        cache.updated_v.add(v_slot)
    cache.h_tilde = h_tilde
    cache.h1 = h1
    return h1


def project(h1: np.ndarray, params: HipParams, cache: HipCache) -> np.ndarray:
    z = h1 @ params.out_w1.T + params.out_b1
    g = gelu(z)
    t = g @ params.out_w2.T + params.out_b2
    cache.z_out, cache.g_out = z, g
    return t


def forward(tokens: EncapsulatedTokens, params: HipParams) -> tuple[np.ndarray, HipCache]:
    """Full projector pass; returns the L x d_llm token matrix and a cache."""
    cache = HipCache(tokens=tokens, params=params, version=params.version)
    h0 = stems(tokens, params, cache)
    h1 = hyper_incidence_block(h0, tokens, params, cache)
    t = project(h1, params, cache)
    if not np.isfinite(t).all():
        raise NonFiniteLossError("projector produced non-finite outputs")
    return t, cache


# --- auxiliary heads -------------------------------------------------------


def ord_eligibility(tokens: EncapsulatedTokens) -> tuple[list[int], list[int]]:
    """Slots whose hidden state must recover an order bucket, with targets.

    Eligible: real hyperedge detail slots (bucket of their true order) and
    nonempty overview cells (the cell's own bucket index).
    """
    seq = tokens.seq
    scheme = seq.template.spec.bucket_scheme
    slots: list[int] = []
    targets: list[int] = []
    for slot in seq.slots:
        if slot.binding is None:
            continue
        if slot.binding[0] == "e":
            slots.append(slot.index)
            targets.append(bucket_of_order(scheme, hyperedge_degree(seq.h, slot.binding[1])))
        elif slot.binding[0] == "o":
            _, hop, b = slot.binding
            if seq.cell_edges[(hop, b)]:
                slots.append(slot.index)
                targets.append(b)
    return slots, targets


def aux_ord_logits(cache: HipCache, params: HipParams) -> tuple[np.ndarray, list[int], list[int]]:
    cache.check(params)
    slots, targets = ord_eligibility(cache.tokens)
    logits = cache.h1[slots] @ params.g_ord_w.T + params.g_ord_b if slots else np.zeros((0, params.config.num_order_buckets))
    return logits, slots, targets


def aux_rel_logits(pairs: list[tuple[int, int]], cache: HipCache, params: HipParams) -> np.ndarray:
    cache.check(params)
    n_detail = cache.tokens.seq.num_detail_slots
    for i, j in pairs:
        if not (0 <= i < n_detail and 0 <= j < n_detail):
            raise DataError(f"relation pair ({i},{j}) outside the detail segment")
    if not pairs:
        return np.zeros((0, 3))
    feats = np.hstack([cache.h1[[i for i, _ in pairs]], cache.h1[[j for _, j in pairs]]])
    return feats @ params.g_rel_w.T + params.g_rel_b


# --- backward --------------------------------------------------------------


def backward(
    cache: HipCache,
    params: HipParams,
    d_t: np.ndarray,
    d_ord: np.ndarray | None = None,
    d_rel: np.ndarray | None = None,
    rel_pairs: list[tuple[int, int]] | None = None,
) -> HipParams:
    """Exact gradients for every parameter given upstream gradients at the
    output tokens and (optionally) at the auxiliary-head logits."""
    cache.check(params)
    cfg = params.config
    grads = HipParams.zeros(cfg)
    tokens = cache.tokens
    h1 = cache.h1

    # output MLP
    d_t = np.asarray(d_t, dtype=float)
    grads["out_w2"] += d_t.T @ cache.g_out
    grads["out_b2"] += d_t.sum(axis=0)
    dg = d_t @ params.out_w2
    dz = dg * gelu_prime(cache.z_out)
    grads["out_w1"] += dz.T @ h1
    grads["out_b1"] += dz.sum(axis=0)
    dh1 = dz @ params.out_w1

    # aux heads feed extra gradient into h1
    if d_ord is not None and len(d_ord):
        slots, _ = ord_eligibility(tokens)
        d_ord = np.asarray(d_ord, dtype=float)
        grads["g_ord_w"] += d_ord.T @ h1[slots]
        grads["g_ord_b"] += d_ord.sum(axis=0)
        back = d_ord @ params.g_ord_w
        for row, slot in enumerate(slots):
            dh1[slot] += back[row]
    if d_rel is not None and len(d_rel):
        if rel_pairs is None or len(rel_pairs) != len(d_rel):
            raise DataError("rel_pairs must accompany d_rel with matching length")
        d_rel = np.asarray(d_rel, dtype=float)
        feats = np.hstack([h1[[i for i, _ in rel_pairs]], h1[[j for _, j in rel_pairs]]])
        grads["g_rel_w"] += d_rel.T @ feats
        grads["g_rel_b"] += d_rel.sum(axis=0)
        back = d_rel @ params.g_rel_w
        for row, (i, j) in enumerate(rel_pairs):
            dh1[i] += back[row, : cfg.d_h]
            dh1[j] += back[row, cfg.d_h :]

    dh0 = np.zeros_like(cache.h0)
    dh_tilde = np.zeros_like(cache.h_tilde)

    # vertex-side sites consume h_tilde; everything else routes straight back
    updated_v = cache.updated_v
    updated_e = cache.updated_e
    for i in range(len(h1)):
        if i in updated_v:
            continue
        if i in updated_e:
            dh_tilde[i] += dh1[i]
        else:
            dh0[i] += dh1[i]

    for site in cache.v_sites:
        d_out = dh1[site.slot]
        d_pre, dg_ln, db_ln = layer_norm_backward(d_out[None, :], site.ln_cache, params.ln_v_g)
        grads["ln_v_g"] += dg_ln
        grads["ln_v_b"] += db_ln
        d_pre = d_pre[0]
        dh0[site.slot] += d_pre
        du = _mlp_backward(d_pre, site, params.phi_v_w1, params.phi_v_w2, grads, "phi_v")
        dh0[site.slot] += du[: cfg.d_h]
        d_msg = du[cfg.d_h :]
        dq, d_neighbors = _attention_backward(
            d_msg, site, params, params.w_ve, grads, "w_ve", cache.h_tilde
        )
        dh0[site.slot] += params.w_q.T @ dq
        grads["w_q"] += np.outer(dq, cache.h0[site.slot])
        for pos, nbr in enumerate(site.neighbors):
            dh_tilde[nbr] += d_neighbors[pos]

    for site in cache.e_sites:
        d_out = dh_tilde[site.slot]
        d_pre, dg_ln, db_ln = layer_norm_backward(d_out[None, :], site.ln_cache, params.ln_e_g)
        grads["ln_e_g"] += dg_ln
        grads["ln_e_b"] += db_ln
        d_pre = d_pre[0]
        dh0[site.slot] += d_pre
        du = _mlp_backward(d_pre, site, params.phi_e_w1, params.phi_e_w2, grads, "phi_e")
        dh0[site.slot] += du[: cfg.d_h]
        d_msg = du[cfg.d_h :]
        dq, d_neighbors = _attention_backward(
            d_msg, site, params, params.w_ev, grads, "w_ev", cache.h0
        )
        dh0[site.slot] += params.w_q.T @ dq
        grads["w_q"] += np.outer(dq, cache.h0[site.slot])
        for pos, nbr in enumerate(site.neighbors):
            dh0[nbr] += d_neighbors[pos]

    # stems
    d_pre_h0, dg_ln, db_ln = layer_norm_backward(dh0, cache.ln_h0, params.ln_h0_g)
    grads["ln_h0_g"] += dg_ln
    grads["ln_h0_b"] += db_ln
    dc = d_pre_h0[:, : cfg.d_core]
    dp = d_pre_h0[:, cfg.d_core :]
    grads["w_sem"] += dc.T @ cache.a_ln
    da_ln = dc @ params.w_sem
    ds_ln = np.zeros_like(cache.s_ln)
    for role in range(NUM_HIP_ROLES):
        rows = tokens.hip_roles == role
        if rows.any():
            grads["w_str"][role] += dp[rows].T @ cache.s_ln[rows]
            ds_ln[rows] = dp[rows] @ params.w_str[role]
    _, dg_ln, db_ln = layer_norm_backward(da_ln, cache.ln_sem, params.ln_sem_g)
    grads["ln_sem_g"] += dg_ln
    grads["ln_sem_b"] += db_ln
    _, dg_ln, db_ln = layer_norm_backward(ds_ln, cache.ln_str, params.ln_str_g)
    grads["ln_str_g"] += dg_ln
    grads["ln_str_b"] += db_ln
    return grads


def _mlp_backward(d_out: np.ndarray, site: _AttnSite, w1: np.ndarray, w2: np.ndarray, grads: HipParams, prefix: str) -> np.ndarray:
    grads[f"{prefix}_w2"] += np.outer(d_out, site.g1)
    grads[f"{prefix}_b2"] += d_out
    dg1 = w2.T @ d_out
    dz1 = dg1 * gelu_prime(site.z1)
    grads[f"{prefix}_w1"] += np.outer(dz1, site.u)
    grads[f"{prefix}_b1"] += dz1
    return w1.T @ dz1


def _attention_backward(d_msg, site: _AttnSite, params: HipParams, w_msg, grads: HipParams, msg_name: str, neighbor_src: np.ndarray):
    """Backward through softmax attention at one site.

    Returns (dq, per-neighbor state gradients); accumulates w_k and the
    message matrix gradients.
    """
    d_att = params.config.d_att
    neighbors = list(site.neighbors)
    states = neighbor_src[neighbors]
    d_alpha = site.values @ d_msg
    d_values = np.outer(site.alpha, d_msg)
    grads[msg_name] += d_values.T @ states
    d_states = d_values @ w_msg
    d_logits = site.alpha * (d_alpha - float(site.alpha @ d_alpha))
    dq = site.keys.T @ d_logits / np.sqrt(d_att)
    d_keys = np.outer(d_logits, site.q) / np.sqrt(d_att)
    grads["w_k"] += d_keys.T @ states
    d_states += d_keys @ params.w_k
    return dq, d_states


# --- checkpoint io (HIPCK1) ------------------------------------------------

CKPT_MAGIC = b"HIPCK1"
_CONFIG_FIELDS = ("d_text", "d_struct", "d_llm", "d_core", "d_sidecar", "num_order_buckets")


def save_checkpoint(path: str | Path, params: HipParams) -> None:
    cfg = params.config
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<6I", *(getattr(cfg, f) for f in _CONFIG_FIELDS)))
        fh.write(params.flatten().astype("<f4").tobytes())


def load_checkpoint(path: str | Path) -> HipParams:
    blob = Path(path).read_bytes()
    if blob[: len(CKPT_MAGIC)] != CKPT_MAGIC:
        raise MalformedRecordError(f"{path}: bad checkpoint magic")
    values = struct.unpack_from("<6I", blob, len(CKPT_MAGIC))
    cfg = HipConfig(**dict(zip(_CONFIG_FIELDS, values)))
    flat = np.frombuffer(blob, dtype="<f4", offset=len(CKPT_MAGIC) + 24).astype(np.float64)
    params = HipParams.zeros(cfg)
    params.load_flat(flat)
    return params
