"""Splice a hypergraph-token export into an LM's input embeddings at the
``<hypergraph>`` placeholder, decode greedily, and score parsed answers."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadFileError, DimensionMismatchError, MissingPlaceholderError
from .tokens import read_adapter, read_tokens

PLACEHOLDER = "<hypergraph>"


@dataclass(frozen=True)
class BridgeRequest:
    tokens_path: str
    prompt: str
    label_set: tuple[str, ...]
    max_gen: int = 32
    adapter_path: str | None = None
    gold: str | None = None
    meta: str = ""

    def __post_init__(self):
        if self.prompt.count(PLACEHOLDER) != 1:
            raise MissingPlaceholderError(
                f"prompt must contain exactly one {PLACEHOLDER!r}"
            )
        if not self.label_set:
            raise BadFileError("label set must be nonempty")


def spliced_embeds(request: BridgeRequest, backend) -> np.ndarray:
    """Text embeddings with the export rows replacing the placeholder.

    The spliced length is (text tokens - 1) + L: the placeholder's single
    token position is replaced by the L exported rows.
    """
    rows = read_tokens(request.tokens_path)
    if request.adapter_path:
        adapter = read_adapter(request.adapter_path)
        if adapter.shape[0] != rows.shape[1]:
            raise DimensionMismatchError(
                f"adapter expects width {adapter.shape[0]}, export has {rows.shape[1]}"
            )
        rows = rows @ adapter
    if rows.shape[1] != backend.width:
        raise DimensionMismatchError(
            f"export width {rows.shape[1]} does not match model width {backend.width}"
        )
    before, after = request.prompt.split(PLACEHOLDER)
    pieces = []
    if before:
        pieces.append(backend.embed_tokens(backend.encode(before)))
    pieces.append(rows)
    if after:
        pieces.append(backend.embed_tokens(backend.encode(after)))
    return np.concatenate(pieces, axis=0)


def parse_answer(text: str, label_set) -> str | None:
    s = text.strip()
    for lab in sorted(label_set, key=len, reverse=True):
        if s == lab or s.startswith(lab):
            return lab
    return None


def splice_and_generate(request: BridgeRequest, backend) -> tuple[str, str | None]:
    """Run greedy decoding on the spliced sequence; returns the raw answer
    text and the parsed label (None when unparseable)."""
    embeds = spliced_embeds(request, backend)
    text = backend.generate_from_embeds(embeds, max_new=request.max_gen)
    return text, parse_answer(text, request.label_set)


@dataclass(frozen=True)
class ScoreRecord:
    meta: str
    gold: str
    prediction: str | None
    correct: bool
    raw_text: str


@dataclass(frozen=True)
class ScoreReport:
    accuracy: float
    records: tuple[ScoreRecord, ...] = field(repr=False)
    invalid: int = 0


def load_requests(path: str | Path, label_set=None, max_gen: int = 32) -> list[BridgeRequest]:
    """Requests from a JSON-Lines dialogue file with token-export sidecars."""
    requests = []
    base = Path(path).parent
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        for key in ("prompt", "tokens_file", "answer"):
            if key not in obj:
                raise BadFileError(f"{path}:{lineno}: missing field {key!r}")
        tokens_file = obj["tokens_file"]
        if not Path(tokens_file).is_absolute():
            tokens_file = str(base / tokens_file)
        labels = tuple(label_set or obj.get("labels") or ())
        requests.append(
            BridgeRequest(
                tokens_path=tokens_file,
                prompt=obj["prompt"],
                label_set=labels,
                max_gen=max_gen,
                gold=obj["answer"],
                meta=obj.get("meta", str(lineno)),
            )
        )
    return requests


def score(requests: list[BridgeRequest], backend) -> ScoreReport:
    """Batch driver over splice_and_generate with accuracy accounting."""
    if not requests:
        raise BadFileError("empty request list")
    records = []
    invalid = 0
    for request in requests:
        raw, pred = splice_and_generate(request, backend)
        if pred is None:
            invalid += 1
        records.append(
            ScoreRecord(
                meta=request.meta,
                gold=request.gold or "",
                prediction=pred,
                correct=pred is not None and pred == request.gold,
                raw_text=raw,
            )
        )
    accuracy = 100.0 * sum(r.correct for r in records) / len(records)
    return ScoreReport(accuracy=accuracy, records=tuple(records), invalid=invalid)


def write_report_csv(path: str | Path, report: ScoreReport) -> None:
    """Same schema as the trainer's evaluation export."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["meta", "gold", "prediction", "correct"])
        for r in report.records:
            writer.writerow([r.meta, r.gold, r.prediction or "INVALID", int(r.correct)])
