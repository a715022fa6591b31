"""Desk-scale alignment training: masked LM loss through the frozen LM,
auxiliary reconstruction losses on the projector, combined objective,
projector-only AdamW updates, and greedy-decoding evaluation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Hypergraph
from .errors import DataError, EmptyAnswerError, NonFiniteLossError
from .lm import TinyCausalLm
from .nnops import softmax
from .projector import (
    HipConfig,
    HipParams,
    aux_ord_logits,
    aux_rel_logits,
    backward,
    forward,
)
from .protocol import DialogueSample, Task, assemble, build_prompt, render_details
from .rng import child_seed, rng_from
from .serialize import EncapsulatedTokens, HidtoSequence, encapsulate, serialize
from .template import Template, TemplateSpec, build_template
from .vocab import ByteVocab


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2e-3
    warmup_ratio: float = 0.03
    lambda_ord: float = 0.1
    lambda_rel: float = 0.1
    batch_size: int = 8
    epochs: int = 2
    seed: int = 0
    k_rel: int = 16
    weight_decay: float = 0.0
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    max_gen: int = 32

    def __post_init__(self):
        if self.lr <= 0:
            raise DataError("lr must be positive")
        if self.lambda_ord < 0 or self.lambda_rel < 0:
            raise DataError("loss weights must be nonnegative")


@dataclass(frozen=True)
class LossReport:
    l_lm: float
    l_ord: float
    l_rel: float
    total: float
    n_supervised: int
    n_ord: int
    n_pairs: int


@dataclass(frozen=True)
class TrainItem:
    """One precompiled training example: fixed token encapsulation plus the
    tokenized dialogue; the projector output is recomputed every step."""

    sample: DialogueSample
    tokens: EncapsulatedTokens
    gold: str
    label_set: tuple[str, ...]
    meta: tuple = ()


def lm_loss(sample: DialogueSample, lm: TinyCausalLm, hg_rows: np.ndarray, want_grad: bool = True):
    """Mean NLL over supervised positions; gradient lands on the region rows.

    The frozen LM parameters receive no gradient: backpropagation only runs
    with respect to activations and is sliced at the hypergraph region.
    """
    if not sample.mask.any():
        raise EmptyAnswerError("sample has no supervised positions")
    positions = np.flatnonzero(sample.mask)
    if positions[0] == 0:
        raise DataError("first position cannot be supervised")
    result = lm.forward(sample.tokens, hg_rows, sample.hg_start, want_cache=want_grad)
    logits, cache = result if want_grad else (result, None)
    pred_rows = positions - 1
    probs = softmax(logits[pred_rows].astype(np.float64), axis=1)
    gold = sample.targets[positions]
    nll = -np.log(probs[np.arange(len(gold)), gold])
    loss = float(nll.mean())
    if not want_grad:
        return loss, None
    d_logits = np.zeros_like(logits, dtype=np.float64)
    d_rows = probs.copy()
    d_rows[np.arange(len(gold)), gold] -= 1.0
    d_logits[pred_rows] = d_rows / len(gold)
    dx = lm.backward_inputs(d_logits.astype(logits.dtype), cache)
    d_hg = np.asarray(dx[sample.hg_start : sample.hg_start + sample.hg_len], dtype=np.float64)
    return loss, d_hg


def cross_entropy(logits: np.ndarray, labels: Sequence[int]):
    """Mean CE and its logit gradient; empty input contributes zero."""
    n = len(labels)
    if n == 0:
        return 0.0, np.zeros((0, logits.shape[1] if logits.ndim == 2 else 0))
    probs = softmax(np.asarray(logits, dtype=np.float64), axis=1)
    idx = np.arange(n)
    labels = np.asarray(labels, dtype=np.int64)
    loss = float(-np.log(probs[idx, labels]).mean())
    d = probs
    d[idx, labels] -= 1.0
    return loss, d / n


def sample_relation_pairs(seq: HidtoSequence, k: int, seed: int):
    """Up to k detail-slot pairs, stratified over the three relation classes."""
    real = [s.index for s in seq.real_detail_slots()]
    if len(real) < 2 or k < 1:
        return [], []
    by_class: dict[int, list[tuple[int, int]]] = {0: [], 1: [], 2: []}
    for a in range(len(real)):
        for b in range(a + 1, len(real)):
            pair = (real[a], real[b])
            by_class[seq.relation_class(*pair)].append(pair)
    rng = rng_from(seed, "rel_pairs", seq.center, seq.seed)
    chosen: list[tuple[int, int]] = []
    labels: list[int] = []
    quota = {c: k // 3 + (1 if c < k % 3 else 0) for c in range(3)}
    leftovers: list[tuple[int, int, int]] = []
    for c in (1, 2, 0):
        pool = by_class[c]
        order = rng.permutation(len(pool))
        take = min(quota[c], len(pool))
        for idx in order[:take]:
            chosen.append(pool[idx])
            labels.append(c)
        for idx in order[take:]:
            leftovers.append((c, *pool[idx]))
    missing = k - len(chosen)
    if missing > 0 and leftovers:
        order = rng.permutation(len(leftovers))
        for idx in order[:missing]:
            c, i, j = leftovers[idx]
            chosen.append((i, j))
            labels.append(c)
    return chosen, labels


def total_loss(
    sample: DialogueSample,
    lm: TinyCausalLm,
    hg_rows: np.ndarray,
    ord_logits: np.ndarray,
    ord_targets: Sequence[int],
    rel_logits: np.ndarray,
    rel_labels: Sequence[int],
    cfg: TrainConfig,
) -> LossReport:
    """Combine the three objectives into one report (no gradients)."""
    l_lm, _ = lm_loss(sample, lm, hg_rows, want_grad=False)
    l_ord, _ = cross_entropy(ord_logits, ord_targets)
    l_rel, _ = cross_entropy(rel_logits, rel_labels)
    return LossReport(
        l_lm=l_lm,
        l_ord=l_ord,
        l_rel=l_rel,
        total=l_lm + cfg.lambda_ord * l_ord + cfg.lambda_rel * l_rel,
        n_supervised=int(sample.mask.sum()),
        n_ord=len(ord_targets),
        n_pairs=len(rel_labels),
    )


def loss_and_grads(item: TrainItem, lm: TinyCausalLm, params: HipParams, cfg: TrainConfig, rel_seed: int):
    """Forward everything once, then pull gradients back into the projector."""
    t_rows, cache = forward(item.tokens, params)
    l_lm, d_t = lm_loss(item.sample, lm, t_rows)
    ord_logits, _, ord_targets = aux_ord_logits(cache, params)
    l_ord, d_ord = cross_entropy(ord_logits, ord_targets)
    pairs, rel_labels = sample_relation_pairs(item.tokens.seq, cfg.k_rel, rel_seed)
    rel_logits = aux_rel_logits(pairs, cache, params)
    l_rel, d_rel = cross_entropy(rel_logits, rel_labels)
    grads = backward(
        cache,
        params,
        d_t,
        cfg.lambda_ord * d_ord if len(ord_targets) else None,
        cfg.lambda_rel * d_rel if len(rel_labels) else None,
        pairs if len(rel_labels) else None,
    )
    report = LossReport(
        l_lm=l_lm,
        l_ord=l_ord,
        l_rel=l_rel,
        total=l_lm + cfg.lambda_ord * l_ord + cfg.lambda_rel * l_rel,
        n_supervised=int(item.sample.mask.sum()),
        n_ord=len(ord_targets),
        n_pairs=len(rel_labels),
    )
    return report, grads


class AdamW:
    """Decoupled-weight-decay adaptive-moment optimizer over a flat vector."""

    def __init__(self, n: int, betas=(0.9, 0.999), eps: float = 1e-8, weight_decay: float = 0.0):
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay

    def step(self, flat: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        b1, b2 = self.betas
        self.t += 1
        self.m = b1 * self.m + (1 - b1) * grad
        self.v = b2 * self.v + (1 - b2) * grad * grad
        m_hat = self.m / (1 - b1**self.t)
        v_hat = self.v / (1 - b2**self.t)
        return flat - lr * (m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * flat)


def lr_at(step: int, total_steps: int, cfg: TrainConfig) -> float:
    warmup = max(1, round(cfg.warmup_ratio * total_steps))
    if step < warmup:
        return cfg.lr * (step + 1) / warmup
    if total_steps <= warmup:
        return cfg.lr
    progress = (step - warmup) / (total_steps - warmup)
    return cfg.lr * 0.5 * (1.0 + math.cos(math.pi * progress))


def train_step(
    batch: list[TrainItem],
    lm: TinyCausalLm,
    params: HipParams,
    opt: AdamW,
    cfg: TrainConfig,
    lr: float,
    step_index: int,
) -> LossReport:
    """One optimizer step over a batch; aborts (params untouched) on a
    non-finite loss."""
    grad_sum = np.zeros(params.num_entries)
    acc = {"l_lm": 0.0, "l_ord": 0.0, "l_rel": 0.0, "total": 0.0}
    counts = {"n_supervised": 0, "n_ord": 0, "n_pairs": 0}
    for pos, item in enumerate(batch):
        rel_seed = child_seed(cfg.seed, "rel", step_index, pos)
        report, grads = loss_and_grads(item, lm, params, cfg, rel_seed)
        if not math.isfinite(report.total):
            raise NonFiniteLossError(f"non-finite loss at step {step_index}")
        grad_sum += grads.flatten()
        for key in acc:
            acc[key] += getattr(report, key)
        for key in counts:
            counts[key] += getattr(report, key)
    scale = 1.0 / len(batch)
    grad_mean = grad_sum * scale
    if not np.isfinite(grad_mean).all():
        raise NonFiniteLossError(f"non-finite gradients at step {step_index}")
    params.load_flat(opt.step(params.flatten(), grad_mean, lr))
    return LossReport(
        l_lm=acc["l_lm"] * scale,
        l_ord=acc["l_ord"] * scale,
        l_rel=acc["l_rel"] * scale,
        total=acc["total"] * scale,
        **counts,
    )


def train(
    items: list[TrainItem],
    lm: TinyCausalLm,
    params: HipParams,
    cfg: TrainConfig,
    log_path: str | Path | None = None,
) -> list[LossReport]:
    """Shuffled-interleave training over all items for cfg.epochs epochs."""
    if not items:
        raise DataError("no training items")
    theta_before = lm.theta_hash()
    n_batches = math.ceil(len(items) / cfg.batch_size)
    total_steps = cfg.epochs * n_batches
    opt = AdamW(params.num_entries, cfg.betas, cfg.eps, cfg.weight_decay)
    reports: list[LossReport] = []
    rows = []
    step = 0
    for epoch in range(cfg.epochs):
        order = rng_from(cfg.seed, "order", epoch).permutation(len(items))
        for b in range(n_batches):
            batch = [items[int(i)] for i in order[b * cfg.batch_size : (b + 1) * cfg.batch_size]]
            report = train_step(batch, lm, params, opt, cfg, lr_at(step, total_steps, cfg), step)
            reports.append(report)
            rows.append([step, report.l_lm, report.l_ord, report.l_rel, report.total])
            step += 1
    if lm.theta_hash() != theta_before:
        raise NonFiniteLossError("frozen LM parameters changed during training")
    if log_path is not None:
        with open(log_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "L_lm", "L_ord", "L_rel", "total"])
            writer.writerows(rows)
    return reports


# --- evaluation --------------------------------------------------------------


def parse_answer(text: str, label_set: Sequence[str]) -> str | None:
    """Exact or prefix match against the candidate labels; None if invalid."""
    s = text.strip()
    for lab in sorted(label_set, key=len, reverse=True):
        if s == lab or s.startswith(lab):
            return lab
    return None


@dataclass(frozen=True)
class EvalRecord:
    meta: tuple
    gold: str
    prediction: str | None
    correct: bool
    raw_text: str


def evaluate(items: list[TrainItem], lm: TinyCausalLm, params: HipParams, cfg: TrainConfig):
    """Greedy decoding + answer parsing; invalid outputs score as wrong."""
    records: list[EvalRecord] = []
    vocab = lm.vocab
    for item in items:
        t_rows, _ = forward(item.tokens, params)
        prefix = item.sample.tokens[: item.sample.answer_start]
        gen = lm.generate(prefix, t_rows, item.sample.hg_start, max_new=cfg.max_gen)
        text = vocab.decode(gen)
        pred = parse_answer(text, item.label_set)
        records.append(
            EvalRecord(
                meta=item.meta,
                gold=item.gold,
                prediction=pred,
                correct=pred == item.gold,
                raw_text=text,
            )
        )
    accuracy = 100.0 * sum(r.correct for r in records) / len(records) if records else 0.0
    return accuracy, records


def write_eval_csv(path: str | Path, records: list[EvalRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["meta", "gold", "prediction", "correct"])
        for r in records:
            writer.writerow(["/".join(str(m) for m in r.meta), r.gold, r.prediction or "INVALID", int(r.correct)])


# --- dataset builders ----------------------------------------------------------


def hip_config_for(
    spec: TemplateSpec,
    d_text: int,
    d_llm: int,
    d_core: int = 384,
    d_sidecar: int = 64,
) -> HipConfig:
    return HipConfig(
        d_text=d_text,
        d_struct=spec.struct_dim,
        d_llm=d_llm,
        d_core=d_core,
        d_sidecar=d_sidecar,
        num_order_buckets=spec.bucket_scheme.num_order_buckets,
    )


def build_classification_items(
    h: Hypergraph,
    centers: Sequence[int],
    task: Task,
    template: Template,
    provider,
    vocab: ByteVocab,
    label_names: Sequence[str],
    seed: int,
    max_len: int = 4096,
    with_details: bool = True,
) -> list[TrainItem]:
    """Vertex- or hyperedge-classification dialogues for the given centers."""
    if task not in (Task.VC, Task.HEC):
        raise DataError("use build_diag_items for the diagnostic task")
    labels = h.vertex_label if task is Task.VC else h.hyperedge_label
    items = []
    for center in centers:
        if center not in labels:
            raise DataError(f"center {center} has no label")
        seq = serialize(h, center, template, child_seed(seed, "item", center))
        tokens = encapsulate(seq, provider)
        details = render_details(seq) if with_details else ""
        parts = build_prompt(task, list(label_names), details)
        gold = label_names[labels[center]]
        sample = assemble(parts, template.num_slots, vocab, gold, max_len)
        items.append(
            TrainItem(
                sample=sample,
                tokens=tokens,
                gold=gold,
                label_set=parts.label_set,
                meta=(task.value, center),
            )
        )
    return items


def build_diag_items(
    pairs,
    template: Template,
    provider,
    vocab: ByteVocab,
    seed: int,
    max_len: int = 4096,
) -> list[TrainItem]:
    """Two dialogue items per matched pair, one per side, details omitted."""
    items = []
    parts = build_prompt(Task.DIAG, [])
    for pair in pairs:
        for sample_side in (pair.sample_a, pair.sample_b):
            seq = serialize(
                sample_side.h,
                sample_side.center,
                template,
                child_seed(seed, "diag_item", pair.pair_id, sample_side.side),
            )
            tokens = encapsulate(seq, provider)
            dlg = assemble(parts, template.num_slots, vocab, sample_side.gold, max_len)
            items.append(
                TrainItem(
                    sample=dlg,
                    tokens=tokens,
                    gold=sample_side.gold,
                    label_set=parts.label_set,
                    meta=(pair.pair_id, sample_side.side),
                )
            )
    return items


# --- key=value config files -----------------------------------------------------


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"config line {lineno} is not key=value: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_bounds(text: str) -> tuple[float, ...]:
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        vals.append(math.inf if tok in ("inf", "Inf", "INF") else float(int(tok)))
    return tuple(vals)


def train_config_from(d: dict[str, str]) -> TrainConfig:
    kw = {}
    for key, cast in (
        ("lr", float),
        ("warmup_ratio", float),
        ("lambda_ord", float),
        ("lambda_rel", float),
        ("batch", int),
        ("epochs", int),
        ("seed", int),
        ("k_rel", int),
        ("weight_decay", float),
        ("max_gen", int),
    ):
        if key in d:
            kw["batch_size" if key == "batch" else key] = cast(d[key])
    return TrainConfig(**kw)


def template_spec_from(d: dict[str, str], center_role) -> TemplateSpec:
    from .core import BucketScheme

    kw: dict = {"center_role": center_role}
    if "budgets" in d:
        kw["layer_budgets"] = tuple(int(x) for x in d["budgets"].split(","))
    if "hops" in d:
        kw["overview_hops"] = int(d["hops"])
    if "max_tokens" in d:
        kw["max_tokens"] = int(d["max_tokens"])
    if "pe_dim" in d:
        kw["pe_dim"] = int(d["pe_dim"])
    scheme_kw = {}
    if "order_bounds" in d:
        scheme_kw["order_bounds"] = _parse_bounds(d["order_bounds"])
    if "degree_bounds" in d:
        scheme_kw["degree_bounds"] = _parse_bounds(d["degree_bounds"])
    if scheme_kw:
        kw["bucket_scheme"] = BucketScheme(**scheme_kw)
    return TemplateSpec(**kw)


def fresh_template(spec: TemplateSpec) -> Template:
    return build_template(spec)
