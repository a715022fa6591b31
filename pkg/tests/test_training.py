import dataclasses
import math

import numpy as np
import pytest

from hgtok.bench import ingest, mini_corpus_path
from hgtok.diagnostic import DiagConfig, gen_dataset
from hgtok.errors import DataError, EmptyAnswerError
from hgtok.lm import LmConfig, TinyCausalLm
from hgtok.projector import aux_ord_logits, aux_rel_logits, forward, init_params
from hgtok.protocol import PromptParts, Task, assemble
from hgtok.semantic import StubProvider
from hgtok.template import CenterRole, TemplateSpec, build_template
from hgtok.training import (
    AdamW,
    TrainConfig,
    build_classification_items,
    build_diag_items,
    cross_entropy,
    evaluate,
    hip_config_for,
    lm_loss,
    loss_and_grads,
    lr_at,
    parse_config_text,
    sample_relation_pairs,
    template_spec_from,
    total_loss,
    train,
    train_step,
    train_config_from,
)
from hgtok.vocab import PLACEHOLDER, ByteVocab

SMALL_DIAG = DiagConfig(4, 4, 0, 8, 2, seed=1)


def small_world(d_llm=32, lm_dtype=np.float64, d_text=12):
    """Mini training world: diag items, tiny LM, tiny projector."""
    train_pairs, test_pairs = gen_dataset(SMALL_DIAG)
    spec = TemplateSpec(layer_budgets=(3, 2), overview_hops=1, pe_dim=4)
    template = build_template(spec)
    provider = StubProvider(dim=d_text, seed=0)
    vocab = ByteVocab()
    items = build_diag_items(train_pairs, template, provider, vocab, seed=0)
    test_items = build_diag_items(test_pairs, template, provider, vocab, seed=1)
    lm = TinyCausalLm(
        LmConfig(d_model=d_llm, n_layers=2, n_heads=4, d_ff=64, max_len=1024),
        seed=0,
        dtype=lm_dtype,
    )
    config = hip_config_for(spec, d_text=d_text, d_llm=d_llm, d_core=16, d_sidecar=8)
    params = init_params(config, seed=0)
    return items, test_items, lm, params, template, provider


class UniformLm:
    """Constant-logit stand-in: every token equally likely, zero gradients."""

    def __init__(self, vocab_size=256, d_model=32):
        self.vocab_size = vocab_size
        self.d_model = d_model
        self.vocab = ByteVocab()

    def forward(self, tokens, region_rows=None, hg_start=None, want_cache=False):
        logits = np.zeros((len(tokens), self.vocab_size))
        return (logits, {}) if want_cache else logits

    def backward_inputs(self, d_logits, cache):
        return np.zeros((len(d_logits), self.d_model))

    def theta_hash(self):
        return "uniform"


def _toy_sample(l_h=4, answer="ab"):
    parts = PromptParts(
        background=f"ctx {PLACEHOLDER} end",
        details="",
        question="answer?",
        label_set=("ab", "cd"),
    )
    return assemble(parts, l_h, ByteVocab(), answer)


class TestLmLoss:
    def test_uniform_logits_give_log_vocab(self):
        sample = _toy_sample()
        # keep every supervised target inside the stub's 256-way vocabulary
        targets = sample.targets.copy()
        targets[targets >= 256] = 0
        sample = dataclasses.replace(sample, targets=targets)
        loss, _ = lm_loss(sample, UniformLm(256), np.zeros((4, 1)), want_grad=False)
        assert abs(loss - math.log(256)) < 1e-12
        assert abs(loss - 5.545) < 1e-3

    def test_masked_label_perturbation_bit_identical(self):
        items, _, lm, params, _, _ = small_world()
        item = items[0]
        t_rows, _ = forward(item.tokens, params)
        base, _ = lm_loss(item.sample, lm, t_rows, want_grad=False)
        perturbed = item.sample.targets.copy()
        unmasked = np.flatnonzero(~item.sample.mask)
        perturbed[unmasked] = (perturbed[unmasked] + 13) % 256
        sample2 = dataclasses.replace(item.sample, targets=perturbed)
        after, _ = lm_loss(sample2, lm, t_rows, want_grad=False)
        assert base == after  # bit-exact

    def test_all_false_mask_rejected(self):
        sample = _toy_sample()
        broken = dataclasses.replace(sample, mask=np.zeros_like(sample.mask))
        with pytest.raises(EmptyAnswerError):
            lm_loss(broken, UniformLm(), np.zeros((4, 1)))

    def test_gradient_lands_on_region_only_shape(self):
        items, _, lm, params, _, _ = small_world()
        item = items[0]
        t_rows, _ = forward(item.tokens, params)
        loss, d_hg = lm_loss(item.sample, lm, t_rows)
        assert d_hg.shape == t_rows.shape
        assert np.isfinite(d_hg).all()
        assert np.abs(d_hg).sum() > 0


class TestRelationPairs:
    def test_labels_match_ground_truth(self):
        items, _, _, _, _, _ = small_world()
        seq = items[0].tokens.seq
        pairs, labels = sample_relation_pairs(seq, 16, seed=3)
        assert len(pairs) <= 16
        for (i, j), lab in zip(pairs, labels):
            assert seq.relation_class(i, j) == lab

    def test_stratification_covers_classes_when_available(self):
        items, _, _, _, _, _ = small_world()
        seq = items[0].tokens.seq
        pairs, labels = sample_relation_pairs(seq, 16, seed=3)
        present = set(labels)
        avail = {seq.relation_class(i, j)
                 for idx, i in enumerate(s.index for s in seq.real_detail_slots())
                 for j in [s.index for s in seq.real_detail_slots()][idx + 1:]}
        assert present == avail or len(pairs) == 16

    def test_deterministic(self):
        items, _, _, _, _, _ = small_world()
        seq = items[0].tokens.seq
        assert sample_relation_pairs(seq, 8, seed=5) == sample_relation_pairs(seq, 8, seed=5)

    def test_degenerate_sequence_empty(self):
        from hgtok.core import Hypergraph
        from hgtok.serialize import serialize

        h = Hypergraph.build([0, 1, 2], [(0, [1, 2])])
        template = build_template(TemplateSpec(layer_budgets=(2, 2), pe_dim=4))
        seq = serialize(h, 0, template, seed=0)  # isolated center, all pads
        pairs, labels = sample_relation_pairs(seq, 8, seed=0)
        assert pairs == [] and labels == []


class TestTotalLoss:
    def test_zero_lambdas_reduce_to_lm(self):
        items, _, lm, params, _, _ = small_world()
        item = items[0]
        cfg = TrainConfig(lambda_ord=0.0, lambda_rel=0.0)
        t_rows, cache = forward(item.tokens, params)
        ord_logits, _, ord_targets = aux_ord_logits(cache, params)
        pairs, rel_labels = sample_relation_pairs(item.tokens.seq, 8, seed=0)
        rel_logits = aux_rel_logits(pairs, cache, params)
        report = total_loss(item.sample, lm, t_rows, ord_logits, ord_targets, rel_logits, rel_labels, cfg)
        assert report.total == report.l_lm

    def test_perfect_aux_logits_zero_loss(self):
        items, _, lm, params, _, _ = small_world()
        item = items[0]
        cfg = TrainConfig()
        t_rows, cache = forward(item.tokens, params)
        _, _, ord_targets = aux_ord_logits(cache, params)
        big = 60.0
        ord_logits = np.full((len(ord_targets), 4), -big)
        for i, t in enumerate(ord_targets):
            ord_logits[i, t] = big
        pairs, rel_labels = sample_relation_pairs(item.tokens.seq, 8, seed=0)
        rel_logits = np.full((len(rel_labels), 3), -big)
        for i, t in enumerate(rel_labels):
            rel_logits[i, t] = big
        report = total_loss(item.sample, lm, t_rows, ord_logits, ord_targets, rel_logits, rel_labels, cfg)
        assert report.l_ord == 0.0
        assert report.l_rel == 0.0

    def test_additivity_to_1e9(self):
        items, _, lm, params, _, _ = small_world()
        item = items[0]
        cfg = TrainConfig(lambda_ord=0.37, lambda_rel=0.21)
        report, _ = loss_and_grads(item, lm, params, cfg, rel_seed=5)
        assert abs(report.total - (report.l_lm + 0.37 * report.l_ord + 0.21 * report.l_rel)) < 1e-9
        assert min(report.l_lm, report.l_ord, report.l_rel) >= 0.0


class TestOptimizer:
    def test_adamw_deterministic(self):
        rng = np.random.default_rng(0)
        flat = rng.standard_normal(50)
        grad = rng.standard_normal(50)
        a = AdamW(50).step(flat.copy(), grad, 1e-3)
        b = AdamW(50).step(flat.copy(), grad, 1e-3)
        assert np.array_equal(a, b)

    def test_zero_grad_is_identity_without_decay(self):
        flat = np.ones(10)
        out = AdamW(10, weight_decay=0.0).step(flat, np.zeros(10), 1e-2)
        assert np.array_equal(out, flat)

    def test_schedule_warmup_then_decay(self):
        cfg = TrainConfig(lr=1e-2, warmup_ratio=0.1)
        total = 100
        lrs = [lr_at(s, total, cfg) for s in range(total)]
        assert lrs[0] < lrs[9]
        assert abs(lrs[9] - 1e-2) < 1e-12
        assert lrs[-1] < 1e-3
        assert max(lrs) <= 1e-2 + 1e-15


class TestTrainStep:
    def test_theta_frozen_params_move(self):
        items, _, lm, params, _, _ = small_world(lm_dtype=np.float32)
        cfg = TrainConfig(batch_size=4, epochs=1, seed=0)
        opt = AdamW(params.num_entries)
        theta_before = lm.theta_hash()
        before = params.flatten().copy()
        for step in range(10):
            train_step(items[: cfg.batch_size], lm, params, opt, cfg, 1e-3, step)
        assert lm.theta_hash() == theta_before
        assert not np.array_equal(before, params.flatten())

    def test_pathological_batch_leaves_params_unchanged(self):
        items, _, _, params, _, _ = small_world()
        cfg = TrainConfig(lambda_ord=0.0, lambda_rel=0.0, k_rel=0)
        opt = AdamW(params.num_entries)
        before = params.flatten().copy()
        train_step(items[:2], UniformLm(vocab_size=258), params, opt, cfg, 1e-3, 0)
        assert np.array_equal(before, params.flatten())

    def test_gradient_check_through_total_loss(self):
        items, _, lm, params, _, _ = small_world(lm_dtype=np.float64)
        cfg = TrainConfig(seed=0)
        item = items[0]

        def loss_at(flat):
            probe = params.copy()
            probe.load_flat(flat)
            report, _ = loss_and_grads(item, lm, probe, cfg, rel_seed=7)
            return report.total

        report, grads = loss_and_grads(item, lm, params, cfg, rel_seed=7)
        flat = params.flatten()
        flat_g = grads.flatten()
        rng = np.random.default_rng(3)
        picks = rng.choice(flat.size, size=10, replace=False)
        for k in picks:
            eps = 1e-5
            up = flat.copy()
            up[k] += eps
            down = flat.copy()
            down[k] -= eps
            fd = (loss_at(up) - loss_at(down)) / (2 * eps)
            rel = abs(fd - flat_g[k]) / max(1e-6, abs(fd) + abs(flat_g[k]))
            assert rel < 1e-3, (k, fd, flat_g[k])


class TestTrainLoop:
    def test_deterministic_end_to_end(self, tmp_path):
        items, _, lm, params_a, _, _ = small_world(lm_dtype=np.float32)
        _, _, _, params_b, _, _ = small_world(lm_dtype=np.float32)
        cfg = TrainConfig(batch_size=4, epochs=1, seed=9)
        train(items, lm, params_a, cfg)
        train(items, lm, params_b, cfg)
        assert params_a.flatten().tobytes() == params_b.flatten().tobytes()

    def test_csv_log_schema(self, tmp_path):
        items, _, lm, params, _, _ = small_world(lm_dtype=np.float32)
        cfg = TrainConfig(batch_size=8, epochs=1, seed=0)
        log = tmp_path / "log.csv"
        reports = train(items, lm, params, cfg, log_path=log)
        lines = log.read_text().strip().splitlines()
        assert lines[0] == "step,L_lm,L_ord,L_rel,total"
        assert len(lines) == len(reports) + 1


class GoldEchoLm:
    """Stub LM whose generate() echoes a fixed per-call answer list."""

    def __init__(self, answers):
        self.vocab = ByteVocab()
        self.answers = list(answers)
        self.calls = 0

    def generate(self, prefix, region_rows=None, hg_start=None, max_new=32):
        text = self.answers[self.calls]
        self.calls += 1
        return list(text.encode()) + [self.vocab.eos_id]

    def theta_hash(self):
        return "echo"


class TestEvaluate:
    def test_gold_echo_scores_100(self):
        items, _, _, params, _, _ = small_world()
        lm = GoldEchoLm([it.gold for it in items])
        acc, records = evaluate(items, lm, params, TrainConfig())
        assert acc == 100.0
        assert all(r.correct for r in records)

    def test_gibberish_scores_zero_invalid(self):
        items, _, _, params, _, _ = small_world()
        lm = GoldEchoLm(["zzz!!" for _ in items])
        acc, records = evaluate(items, lm, params, TrainConfig())
        assert acc == 0.0
        assert all(r.prediction is None for r in records)

    def test_recount_oracle(self):
        items, _, _, params, _, _ = small_world()
        answers = [it.gold if i % 3 else "No" for i, it in enumerate(items)]
        lm = GoldEchoLm(answers)
        acc, records = evaluate(items, lm, params, TrainConfig())
        recount = 100.0 * sum(
            1 for r, it in zip(records, items) if r.prediction == it.gold
        ) / len(items)
        assert acc == recount


class TestConfigFile:
    def test_parse_and_build(self):
        text = """
        # training
        lr = 0.001
        lambda_ord=0.2
        batch=4
        epochs=1
        budgets=3,2
        hops=1
        order_bounds=2,4,inf
        """
        d = parse_config_text(text)
        cfg = train_config_from(d)
        assert cfg.lr == 0.001
        assert cfg.lambda_ord == 0.2
        assert cfg.batch_size == 4
        spec = template_spec_from(d, CenterRole.VERTEX)
        assert spec.layer_budgets == (3, 2)
        assert spec.overview_hops == 1
        assert spec.bucket_scheme.order_bounds == (2.0, 4.0, math.inf)

    def test_bad_line_rejected(self):
        with pytest.raises(DataError):
            parse_config_text("not a kv line")


class TestItemBuilders:
    def test_vc_items_from_mini_corpus(self):
        h, manifest, splits = ingest(mini_corpus_path())
        template = build_template(TemplateSpec(layer_budgets=(2, 2), pe_dim=4))
        provider = StubProvider(dim=8, seed=0)
        labels = [f"class{i}" for i in range(manifest.num_classes)]
        items = build_classification_items(
            h, splits["vc"]["train"], Task.VC, template, provider, ByteVocab(), labels, seed=0
        )
        assert len(items) == 10
        for item in items:
            assert item.gold in labels
            assert item.sample.hg_len == template.num_slots

    def test_hec_items_use_hyperedge_centers(self):
        h, manifest, splits = ingest(mini_corpus_path())
        template = build_template(
            TemplateSpec(center_role=CenterRole.HYPEREDGE, layer_budgets=(2, 2), pe_dim=4)
        )
        provider = StubProvider(dim=8, seed=0)
        labels = [f"class{i}" for i in range(manifest.num_classes)]
        items = build_classification_items(
            h, splits["hec"]["train"], Task.HEC, template, provider, ByteVocab(), labels, seed=0
        )
        assert len(items) == 6
        for item in items:
            assert item.tokens.seq.center_kind is CenterRole.HYPEREDGE
