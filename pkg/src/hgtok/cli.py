"""Command-line entry point binding all modules into reproducible pipelines.

Exit codes: 0 success, 2 usage, 3 data error, 4 numeric error. Failures
print one machine-readable JSON line to stderr. A single --seed governs
every RNG stream through hierarchical splitting.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, diagnostic, hgjl, tokens_io
from .core import Hypergraph
from .errors import DataError, HgtokError, NumericError
from .lm import LmConfig, TinyCausalLm
from .projector import init_params, load_checkpoint, save_checkpoint
from .protocol import Task, render_details
from .rng import child_seed
from .semantic import StubProvider, TableProvider
from .serialize import encapsulate, serialize
from .template import CenterRole, build_template
from .training import (
    TrainConfig,
    build_classification_items,
    build_diag_items,
    evaluate,
    hip_config_for,
    parse_config_text,
    template_spec_from,
    train,
    train_config_from,
    write_eval_csv,
)
from .vocab import ByteVocab

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _load_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def _center_role(task: str) -> CenterRole:
    return CenterRole.HYPEREDGE if task == "hec" else CenterRole.VERTEX


def _provider(cfg: dict[str, str], seed: int):
    if "emb_vertices" in cfg and "emb_hyperedges" in cfg:
        return TableProvider.from_files(cfg["emb_vertices"], cfg["emb_hyperedges"])
    return StubProvider(dim=int(cfg.get("d_text", 64)), seed=int(cfg.get("emb_seed", seed)))


def _load_hypergraph(path: str) -> Hypergraph:
    p = Path(path)
    if p.is_dir():
        h, _, _ = bench.ingest(p)
        return h
    h, _ = hgjl.read(p)
    return h


def _hip_config(cfg: dict[str, str], spec, d_text: int):
    return hip_config_for(
        spec,
        d_text=d_text,
        d_llm=int(cfg.get("d_llm", 128)),
        d_core=int(cfg.get("d_core", 384)),
        d_sidecar=int(cfg.get("d_sidecar", 64)),
    )


def _params_for(args, cfg, spec, provider):
    if getattr(args, "params", None):
        return load_checkpoint(args.params)
    return init_params(_hip_config(cfg, spec, provider.dim), child_seed(args.seed, "hip_init"))


def _compute_tokens(args, cfg, require_params: bool):
    h = _load_hypergraph(args.infile)
    spec = template_spec_from(cfg, _center_role(args.task))
    template = build_template(spec)
    provider = _provider(cfg, args.seed)
    if require_params and not args.params:
        raise DataError("this verb requires --params")
    params = _params_for(args, cfg, spec, provider)
    seq = serialize(h, args.center, template, child_seed(args.seed, "serialize", args.center))
    tokens = encapsulate(seq, provider)
    from .projector import forward

    t_rows, _ = forward(tokens, params)
    return seq, t_rows


def cmd_serialize(args) -> int:
    h = _load_hypergraph(args.infile)
    spec = template_spec_from(_load_config(args.config), _center_role(args.task))
    template = build_template(spec)
    seq = serialize(h, args.center, template, child_seed(args.seed, "serialize", args.center))
    payload = {
        "center": seq.center,
        "center_kind": seq.center_kind.value,
        "num_slots": template.num_slots,
        "slots": [
            {
                "index": s.index,
                "role": s.role.name,
                "layer": s.layer,
                "parent": s.parent_index,
                "binding": list(s.binding) if s.binding else None,
            }
            for s in seq.slots
        ],
        "details": render_details(seq),
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_export_tokens(args) -> int:
    _, t_rows = _compute_tokens(args, _load_config(args.config), require_params=False)
    tokens_io.write_tokens(args.out, t_rows)
    return 0


def cmd_project(args) -> int:
    _, t_rows = _compute_tokens(args, _load_config(args.config), require_params=True)
    tokens_io.write_tokens(args.out, t_rows)
    return 0


def _build_items(args, cfg):
    vocab = ByteVocab()
    provider = _provider(cfg, args.seed)
    seed = child_seed(args.seed, "items")
    if args.task == "diag":
        pairs = diagnostic.read_pairs(args.infile)
        spec = template_spec_from(cfg, CenterRole.VERTEX)
        template = build_template(spec)
        items = build_diag_items(pairs, template, provider, vocab, seed)
        return items, spec, provider, pairs
    h, manifest, splits = bench.ingest(args.infile)
    n_classes = manifest.num_classes
    label_names = (
        cfg["labels"].split(",") if "labels" in cfg else [f"class{i}" for i in range(n_classes)]
    )
    tasks = ["vc", "hec"] if args.task == "joint" else [args.task]
    items = []
    spec = None
    for task in tasks:
        spec_t = template_spec_from(cfg, _center_role(task))
        template = build_template(spec_t)
        centers = splits[task][args.split]
        items.extend(
            build_classification_items(
                h, centers, Task(task), template, provider, vocab, label_names, seed
            )
        )
        if spec is None:
            spec = spec_t
    return items, spec, provider, None


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    tcfg = train_config_from(cfg)
    if args.seed is not None:
        tcfg = TrainConfig(**{**tcfg.__dict__, "seed": args.seed})
    items, spec, provider, _ = _build_items(args, cfg)
    lm = TinyCausalLm(LmConfig(d_model=int(cfg.get("d_llm", 128))), seed=int(cfg.get("lm_seed", 0)))
    params = init_params(_hip_config(cfg, spec, provider.dim), child_seed(tcfg.seed, "hip_init"))
    train(items, lm, params, tcfg, log_path=args.log)
    save_checkpoint(args.out, params)
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    tcfg = train_config_from(cfg)
    items, spec, provider, pairs = _build_items(args, cfg)
    lm = TinyCausalLm(LmConfig(d_model=int(cfg.get("d_llm", 128))), seed=int(cfg.get("lm_seed", 0)))
    if args.params:
        params = load_checkpoint(args.params)
    else:
        params = init_params(_hip_config(cfg, spec, provider.dim), child_seed(args.seed, "hip_init"))
    if args.dialogues:
        _export_dialogues(args, items, params)
    accuracy, records = evaluate(items, lm, params, tcfg)
    write_eval_csv(args.out, records)
    summary = {"accuracy": accuracy, "n": len(records)}
    if args.task == "diag" and pairs is not None:
        preds = {(int(r.meta[0]), str(r.meta[1])): (r.prediction or "Invalid") for r in records}
        m = diagnostic.metrics(preds, pairs)
        summary.update(
            {
                "sample_acc": m.sample_acc,
                "pair_acc": m.pair_acc,
                "flip_rate": m.flip_rate,
                "invalid": m.invalid,
            }
        )
    print(json.dumps(summary))
    return 0


def _export_dialogues(args, items, params) -> None:
    """Write dialogue JSONL plus one HGTOK1 sidecar file per item, the
    interface consumed by external bridge tooling."""
    from .projector import forward

    tokens_dir = Path(args.tokens_dir or Path(args.dialogues).parent / "tokens")
    tokens_dir.mkdir(parents=True, exist_ok=True)
    with open(args.dialogues, "w", encoding="utf-8", newline="\n") as fh:
        for i, item in enumerate(items):
            t_rows, _ = forward(item.tokens, params)
            token_file = tokens_dir / f"{i:05d}.hgtok"
            tokens_io.write_tokens(token_file, t_rows)
            fh.write(
                json.dumps(
                    {
                        "prompt": item.sample.prompt_text,
                        "hg_region_index": item.sample.hg_start,
                        "answer": item.sample.answer_text,
                        "L_H": item.sample.hg_len,
                        "tokens_file": str(token_file),
                        "meta": "/".join(str(m) for m in item.meta),
                        "labels": list(item.label_set),
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )


def _diag_config(cfg: dict[str, str], seed: int) -> diagnostic.DiagConfig:
    if "preset" in cfg:
        preset = diagnostic.PRESETS.get(cfg["preset"])
        if preset is None:
            raise DataError(f"unknown preset {cfg['preset']!r}; known: {sorted(diagnostic.PRESETS)}")
        base = preset.__dict__ | {"seed": seed}
    else:
        base = {"seed": seed}
    for key, cast in (
        ("distractor_vertices", int),
        ("distractor_hyperedges", int),
        ("decoys_per_query", int),
        ("train_pairs", int),
        ("test_pairs", int),
    ):
        if key in cfg:
            base[key] = cast(cfg[key])
    return diagnostic.DiagConfig(**base)


def cmd_diag_generate(args) -> int:
    cfg = _load_config(args.config)
    config = _diag_config(cfg, args.seed)
    train_pairs, test_pairs = diagnostic.gen_dataset(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    diagnostic.write_pairs(out / "train.jsonl", train_pairs)
    diagnostic.write_pairs(out / "test.jsonl", test_pairs)
    print(json.dumps({"train_pairs": len(train_pairs), "test_pairs": len(test_pairs)}))
    return 0


def cmd_diag_verify(args) -> int:
    pairs = diagnostic.read_pairs(args.infile)
    failures = 0
    for pair in pairs:
        ok, _ = diagnostic.verify_equivalence(pair)
        failures += 0 if ok else 1
    print(json.dumps({"pairs": len(pairs), "failures": failures}))
    if failures:
        raise DataError(f"{failures} pairs failed verification")
    return 0


def cmd_diag_score(args) -> int:
    pairs = diagnostic.read_pairs(args.infile)
    preds: dict[tuple[int, str], str] = {}
    with open(args.pred, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            key = row.get("meta")
            if key is not None:
                pair_id, side = key.split("/")
            else:
                pair_id, side = row["pair_id"], row["side"]
            preds[(int(pair_id), side)] = row["prediction"]
    m = diagnostic.metrics(preds, pairs)
    payload = {
        "sample_acc": m.sample_acc,
        "pair_acc": m.pair_acc,
        "flip_rate": m.flip_rate,
        "invalid": m.invalid,
        "n_pairs": m.n_pairs,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(payload))
    return 0


def cmd_bench_stats(args) -> int:
    _, manifest, _ = bench.ingest(args.infile)
    text = manifest.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_bench_ccdf(args) -> int:
    h, _, _ = bench.ingest(args.infile)
    from .core import hyperedge_degree, vertex_degree

    if args.kind == "degree":
        values = [vertex_degree(h, v) for v in h.vertices]
    else:
        values = [hyperedge_degree(h, e) for e in h.hyperedge_ids]
    bench.write_ccdf_csv(args.out, bench.ccdf(values))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hgtok", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    def add(name, fn, **flags):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        for flag, kw in flags.items():
            p.add_argument(flag, **kw)
        return p

    common_in = {"--in": {"dest": "infile", "required": True}}
    seed = {"--seed": {"type": int, "default": 0}}
    cfgf = {"--config": {"default": None}}

    add(
        "serialize",
        cmd_serialize,
        **common_in,
        **cfgf,
        **seed,
        **{
            "--task": {"choices": ["vc", "hec", "diag"], "default": "vc"},
            "--center": {"type": int, "required": True},
            "--out": {"required": True},
        },
    )
    for verb, fn, need in (("export-tokens", cmd_export_tokens, False), ("project", cmd_project, True)):
        add(
            verb,
            fn,
            **common_in,
            **cfgf,
            **seed,
            **{
                "--task": {"choices": ["vc", "hec", "diag"], "default": "vc"},
                "--center": {"type": int, "required": True},
                "--params": {"default": None, "required": need},
                "--out": {"required": True},
            },
        )
    add(
        "train",
        cmd_train,
        **common_in,
        **cfgf,
        **{
            "--task": {"choices": ["vc", "hec", "diag", "joint"], "default": "vc"},
            "--split": {"default": "train"},
            "--seed": {"type": int, "default": None},
            "--out": {"required": True},
            "--log": {"default": None},
        },
    )
    add(
        "eval",
        cmd_eval,
        **common_in,
        **cfgf,
        **seed,
        **{
            "--task": {"choices": ["vc", "hec", "diag", "joint"], "default": "vc"},
            "--split": {"default": "test"},
            "--params": {"default": None},
            "--out": {"required": True},
            "--dialogues": {"default": None},
            "--tokens-dir": {"dest": "tokens_dir", "default": None},
        },
    )
    add("diag-generate", cmd_diag_generate, **cfgf, **seed, **{"--out": {"required": True}})
    add("diag-verify", cmd_diag_verify, **common_in)
    add(
        "diag-score",
        cmd_diag_score,
        **common_in,
        **{"--pred": {"required": True}, "--out": {"default": None}},
    )
    add("bench-stats", cmd_bench_stats, **common_in, **{"--out": {"default": None}})
    add(
        "bench-ccdf",
        cmd_bench_ccdf,
        **common_in,
        **{"--kind": {"choices": ["degree", "order"], "default": "degree"}, "--out": {"required": True}},
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except NumericError as exc:
        print(json.dumps({"error": "numeric", "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERIC
    except (HgtokError, OSError) as exc:
        print(json.dumps({"error": "data", "message": str(exc)}), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
