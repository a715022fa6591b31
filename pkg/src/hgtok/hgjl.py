"""Hypergraph JSON-Lines (HGJL1) reading and writing.

Layout: UTF-8, LF line endings. Line 1 is a manifest record
``{"format":"HGJL1","num_vertices":N,"num_hyperedges":M,"num_classes":C}``,
then vertex records ``{"type":"v","id":...,"text":?,"label":?}`` in id order,
then hyperedge records ``{"type":"e","id":...,"members":[...],"text":?,
"label":?}`` in id order with ascending members.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import Hypergraph
from .errors import DanglingMemberError, MalformedRecordError, ManifestMismatchError

FORMAT_NAME = "HGJL1"


def num_classes(h: Hypergraph) -> int:
    """1 + max label over vertices and hyperedges, or 0 when unlabeled."""
    labels = list(h.vertex_label.values()) + list(h.hyperedge_label.values())
    return max(labels) + 1 if labels else 0


def dumps(h: Hypergraph, declared_classes: int | None = None) -> str:
    lines = [
        json.dumps(
            {
                "format": FORMAT_NAME,
                "num_vertices": h.num_vertices,
                "num_hyperedges": h.num_hyperedges,
                "num_classes": num_classes(h) if declared_classes is None else declared_classes,
            },
            separators=(",", ":"),
        )
    ]
    for v in h.vertices:
        rec: dict = {"type": "v", "id": v}
        if v in h.vertex_text:
            rec["text"] = h.vertex_text[v]
        if v in h.vertex_label:
            rec["label"] = h.vertex_label[v]
        lines.append(json.dumps(rec, separators=(",", ":")))
    for eid, mem in h.hyperedges:
        rec = {"type": "e", "id": eid, "members": sorted(mem)}
        if eid in h.hyperedge_text:
            rec["text"] = h.hyperedge_text[eid]
        if eid in h.hyperedge_label:
            rec["label"] = h.hyperedge_label[eid]
        lines.append(json.dumps(rec, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def loads(text: str) -> tuple[Hypergraph, dict]:
    """Parse HGJL1 text; returns the hypergraph and its declared manifest."""
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise MalformedRecordError("empty HGJL1 document")
    try:
        manifest = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise MalformedRecordError(f"manifest is not valid JSON: {exc}") from exc
    if manifest.get("format") != FORMAT_NAME:
        raise MalformedRecordError(f"unexpected format marker: {manifest.get('format')!r}")
    for key in ("num_vertices", "num_hyperedges", "num_classes"):
        if not isinstance(manifest.get(key), int):
            raise MalformedRecordError(f"manifest field {key} missing or not an integer")

    vertices: list[int] = []
    vtext: dict[int, str] = {}
    vlabel: dict[int, int] = {}
    edges: list[tuple[int, list[int]]] = []
    etext: dict[int, str] = {}
    elabel: dict[int, int] = {}
    for lineno, ln in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(ln)
        except json.JSONDecodeError as exc:
            raise MalformedRecordError(f"line {lineno}: invalid JSON: {exc}") from exc
        kind = rec.get("type")
        if kind == "v":
            if not isinstance(rec.get("id"), int):
                raise MalformedRecordError(f"line {lineno}: vertex id missing")
            vertices.append(rec["id"])
            if "text" in rec:
                vtext[rec["id"]] = rec["text"]
            if "label" in rec:
                vlabel[rec["id"]] = rec["label"]
        elif kind == "e":
            if not isinstance(rec.get("id"), int) or not isinstance(rec.get("members"), list):
                raise MalformedRecordError(f"line {lineno}: hyperedge id/members missing")
            edges.append((rec["id"], rec["members"]))
            if "text" in rec:
                etext[rec["id"]] = rec["text"]
            if "label" in rec:
                elabel[rec["id"]] = rec["label"]
        else:
            raise MalformedRecordError(f"line {lineno}: unknown record type {kind!r}")

    vset = set(vertices)
    for eid, mem in edges:
        for v in mem:
            if v not in vset:
                raise DanglingMemberError(f"hyperedge {eid} references missing vertex {v}")
    h = Hypergraph.build(
        vertices=vertices,
        hyperedges=edges,
        vertex_text=vtext,
        hyperedge_text=etext,
        vertex_label=vlabel,
        hyperedge_label=elabel,
    )
    if manifest["num_vertices"] != h.num_vertices or manifest["num_hyperedges"] != h.num_hyperedges:
        raise ManifestMismatchError(
            f"declared {manifest['num_vertices']}v/{manifest['num_hyperedges']}e, "
            f"found {h.num_vertices}v/{h.num_hyperedges}e"
        )
    declared_classes = manifest["num_classes"]
    if num_classes(h) > declared_classes:
        raise ManifestMismatchError(
            f"labels require {num_classes(h)} classes but manifest declares {declared_classes}"
        )
    return h, manifest


def write(path: str | Path, h: Hypergraph, declared_classes: int | None = None) -> None:
    Path(path).write_text(dumps(h, declared_classes), encoding="utf-8", newline="\n")


def read(path: str | Path) -> tuple[Hypergraph, dict]:
    return loads(Path(path).read_text(encoding="utf-8"))
