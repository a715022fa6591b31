"""Prompt protocol: background/details/question parts, deterministic detail
rendering from the serialized sequence, and placeholder splicing into
supervision-masked dialogue samples."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import hyperedge_degree
from .errors import DataError, EmptyAnswerError, MissingPlaceholderError, OverLengthError
from .serialize import HidtoSequence
from .template import CenterRole, SlotRole
from .vocab import PLACEHOLDER, ByteVocab


class Task(enum.Enum):
    VC = "vc"
    HEC = "hec"
    DIAG = "diag"


@dataclass(frozen=True)
class PromptParts:
    background: str
    details: str
    question: str
    label_set: tuple[str, ...]

    def __post_init__(self):
        if self.background.count(PLACEHOLDER) != 1:
            raise MissingPlaceholderError(
                f"background must contain exactly one {PLACEHOLDER!r}"
            )
        if PLACEHOLDER in self.details or PLACEHOLDER in self.question:
            raise DataError(f"{PLACEHOLDER!r} may only appear in the background")
        if not self.label_set:
            raise DataError("label set must be nonempty")

    def text(self) -> str:
        parts = [self.background]
        if self.details:
            parts.append(self.details)
        parts.append(self.question)
        return "\n".join(parts)


def _object_name(seq: HidtoSequence, v: int) -> str:
    return seq.h.vertex_text.get(v, f"v{v}")


def render_details(seq: HidtoSequence) -> str:
    """Fixed-grammar text for the sampled local structure.

    One line per hyperedge at template depth <= 1 (for a hyperedge center
    that is the center itself), listing sampled members in slot order with a
    truncation marker when the sample did not cover the full membership.
    """
    lines = []
    detail = seq.slots[: seq.num_detail_slots]
    slot_children: dict[int, list] = {}
    for slot in detail:
        if slot.parent_index is not None:
            slot_children.setdefault(slot.parent_index, []).append(slot)
    for slot in detail:
        if slot.layer > 1 or slot.binding is None or slot.binding[0] != "e":
            continue
        eid = slot.binding[1]
        order = hyperedge_degree(seq.h, eid)
        names = []
        if seq.center_kind is CenterRole.VERTEX and slot.layer == 1:
            names.append(_object_name(seq, seq.center))
        for child in slot_children.get(slot.index, []):
            if child.binding is not None and child.binding[0] == "v":
                names.append(_object_name(seq, child.binding[1]))
        marker = ", ..." if len(names) < order else ""
        lines.append(f"Hyperedge {eid} (order {order}) connects: {', '.join(names)}{marker}.")
    if not lines:
        return "No local context available."
    return "\n".join(lines)


_BACKGROUNDS = {
    Task.VC: (
        "You are given a vertex-centered hypergraph context: "
        f"{PLACEHOLDER}. Each hyperedge groups several objects that are "
        "jointly related; the token region encodes the structure around the "
        "query vertex."
    ),
    Task.HEC: (
        "You are given a hyperedge-centered hypergraph context: "
        f"{PLACEHOLDER}. The token region encodes the queried hyperedge and "
        "the objects it groups together."
    ),
    Task.DIAG: (
        f"Given a vertex-centered hypergraph: {PLACEHOLDER}. The tokens mark "
        "one center vertex and two candidate vertices; no textual hyperedge "
        "list is provided."
    ),
}

_QUESTIONS = {
    Task.VC: (
        "Question: Which category does the query vertex belong to? "
        "Candidates: {labels}. Answer with the category name only."
    ),
    Task.HEC: (
        "Question: Which category does the source object of the query "
        "hyperedge belong to? Candidates: {labels}. Answer with the "
        "category name only."
    ),
    Task.DIAG: (
        "Question: Do the center vertex and the two candidate vertices "
        "jointly occur in a single hyperedge? Directly answer Yes or No."
    ),
}


def build_prompt(task: Task, label_set: list[str], details: str = "") -> PromptParts:
    """Three-part prompt for a task; the diagnostic omits details and fixes
    the label set to Yes/No."""
    if task is Task.DIAG:
        labels = ("Yes", "No")
        details = ""
    else:
        labels = tuple(label_set)
        if not labels:
            raise DataError("label set must be nonempty")
    question = _QUESTIONS[task].format(labels=", ".join(labels))
    return PromptParts(
        background=_BACKGROUNDS[task],
        details=details,
        question=question,
        label_set=labels,
    )


@dataclass(frozen=True)
class DialogueSample:
    """Tokenized dialogue with the hypergraph region and supervision mask.

    ``tokens`` holds the full teacher-forced input; region positions carry
    the sentinel id and are fed as projector rows. ``targets`` are the
    next-token labels; positions outside the answer are never supervised.
    """

    tokens: np.ndarray
    targets: np.ndarray
    mask: np.ndarray
    hg_start: int
    hg_len: int
    answer_start: int
    answer_ids: np.ndarray
    prompt_text: str
    answer_text: str

    @property
    def length(self) -> int:
        return len(self.tokens)


def assemble(
    parts: PromptParts,
    hg_tokens,
    vocab: ByteVocab,
    answer_text: str,
    max_len: int = 4096,
) -> DialogueSample:
    """Splice the hypergraph region at the placeholder and mask supervision.

    Total length is (prompt tokens - 1) + L_H + K: the placeholder position
    is replaced by L_H region rows and K answer tokens are appended.
    """
    l_h = len(hg_tokens) if hasattr(hg_tokens, "__len__") else int(hg_tokens)
    if l_h < 1:
        raise DataError("hypergraph region must contain at least one token")
    if not answer_text:
        raise EmptyAnswerError("answer text must be nonempty")
    prompt_text = parts.text()
    before, after = prompt_text.split(PLACEHOLDER)
    pre_ids = vocab.encode(before)
    post_ids = vocab.encode(after)
    answer_ids = vocab.encode_answer(answer_text)
    hg_start = len(pre_ids)
    answer_start = hg_start + l_h + len(post_ids)
    total = answer_start + len(answer_ids)
    if total > max_len:
        raise OverLengthError(f"assembled length {total} exceeds limit {max_len}")
    tokens = np.concatenate(
        [
            np.array(pre_ids, dtype=np.int64),
            np.full(l_h, vocab.hg_id, dtype=np.int64),
            np.array(post_ids, dtype=np.int64),
            answer_ids,
        ]
    )
    mask = np.zeros(total, dtype=bool)
    mask[answer_start:] = True
    return DialogueSample(
        tokens=tokens,
        targets=tokens.copy(),
        mask=mask,
        hg_start=hg_start,
        hg_len=l_h,
        answer_start=answer_start,
        answer_ids=answer_ids,
        prompt_text=prompt_text,
        answer_text=answer_text,
    )


def sample_to_json(sample: DialogueSample) -> str:
    return json.dumps(
        {
            "prompt": sample.prompt_text,
            "hg_region_index": sample.hg_start,
            "answer": sample.answer_text,
            "L_H": sample.hg_len,
        },
        separators=(",", ":"),
    )


def write_samples(path: str | Path, samples: list[DialogueSample]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sample in samples:
            fh.write(sample_to_json(sample) + "\n")
