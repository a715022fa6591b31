"""Command line for the bridge: score a dialogue JSONL through an LM.

Example:
    hgbridge score --in dialogues.jsonl --labels Yes,No --out report.csv \
        --model sshleifer/tiny-gpt2
"""

from __future__ import annotations

import argparse
import json
import sys

from .backends import TransformersCausalLm
from .bridge import load_requests, score, write_report_csv
from .errors import BridgeError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hgbridge")
    sub = parser.add_subparsers(dest="verb", required=True)
    p = sub.add_parser("score")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--labels", default=None, help="comma-separated; JSONL labels otherwise")
    p.add_argument("--max-gen", dest="max_gen", type=int, default=32)
    p.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        labels = args.labels.split(",") if args.labels else None
        requests = load_requests(args.infile, labels, args.max_gen)
        backend = TransformersCausalLm.from_pretrained(args.model)
        report = score(requests, backend)
        write_report_csv(args.out, report)
        print(json.dumps({"accuracy": report.accuracy, "n": len(report.records), "invalid": report.invalid}))
        return 0
    except (BridgeError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
