"""Dataset ingestion, statistics, split validation, and degree CCDFs.

Datasets live in a directory holding ``data.hgjl`` plus split files named
``<task>.<split>.ids`` (one object id per line, tasks ``vc``/``hec``,
splits ``train``/``valid``/``test``). A small bundled mini-corpus ships
with the package for tests and demos.
"""

from __future__ import annotations

import bisect
import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import hgjl
from .core import Hypergraph, hyperedge_degree, vertex_degree
from .errors import DataError, ManifestMismatchError, SplitOverlapError

TASKS = ("vc", "hec")
SPLITS = ("train", "valid", "test")


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    domain: str
    num_vertices: int
    num_hyperedges: int
    num_incidences: int
    num_classes: int
    splits: dict[str, dict[str, int]]

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "domain": self.domain,
                "num_vertices": self.num_vertices,
                "num_hyperedges": self.num_hyperedges,
                "num_incidences": self.num_incidences,
                "num_classes": self.num_classes,
                "splits": self.splits,
            },
            indent=2,
            sort_keys=True,
        )


def stats(h: Hypergraph) -> dict:
    """Degree/order histograms and the double-counted incidence total."""
    degree_hist: dict[int, int] = {}
    for v in h.vertices:
        d = vertex_degree(h, v)
        degree_hist[d] = degree_hist.get(d, 0) + 1
    order_hist: dict[int, int] = {}
    incidences = 0
    for eid, _ in h.hyperedges:
        r = hyperedge_degree(h, eid)
        order_hist[r] = order_hist.get(r, 0) + 1
        incidences += r
    return {
        "num_vertices": h.num_vertices,
        "num_hyperedges": h.num_hyperedges,
        "num_incidences": incidences,
        "degree_hist": dict(sorted(degree_hist.items())),
        "order_hist": dict(sorted(order_hist.items())),
    }


def _read_split_file(path: Path) -> list[int]:
    ids = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            ids.append(int(line))
        except ValueError as exc:
            raise DataError(f"{path.name}:{lineno}: not an id: {line!r}") from exc
    return ids


def ingest(path: str | Path, name: str = "", domain: str = ""):
    """Load and cross-check a dataset directory.

    Returns (hypergraph, manifest, splits); the declared HGJL1 manifest is
    validated against recomputation and splits are checked for overlap,
    dangling ids, and exact coverage of the labeled population per task.
    """
    root = Path(path)
    data_file = root / "data.hgjl"
    if not data_file.exists():
        raise DataError(f"{root}: data.hgjl not found")
    h, declared = hgjl.read(data_file)
    counts = stats(h)
    splits: dict[str, dict[str, list[int]]] = {}
    for task in TASKS:
        task_splits = {}
        for split in SPLITS:
            split_file = root / f"{task}.{split}.ids"
            if split_file.exists():
                task_splits[split] = _read_split_file(split_file)
        if task_splits:
            splits[task] = task_splits
            _validate_splits(h, task, task_splits)
    manifest = DatasetManifest(
        name=name or root.name,
        domain=domain,
        num_vertices=counts["num_vertices"],
        num_hyperedges=counts["num_hyperedges"],
        num_incidences=counts["num_incidences"],
        num_classes=declared["num_classes"],
        splits={t: {s: len(ids) for s, ids in ts.items()} for t, ts in splits.items()},
    )
    return h, manifest, splits


def _validate_splits(h: Hypergraph, task: str, task_splits: dict[str, list[int]]) -> None:
    population = set(h.vertex_label) if task == "vc" else set(h.hyperedge_label)
    seen: set[int] = set()
    total = 0
    for split, ids in task_splits.items():
        idset = set(ids)
        if len(idset) != len(ids):
            raise SplitOverlapError(f"{task}.{split}: duplicate ids within the split")
        clash = seen & idset
        if clash:
            raise SplitOverlapError(f"{task}: ids {sorted(clash)[:5]} appear in multiple splits")
        dangling = idset - population
        if dangling:
            raise DataError(f"{task}.{split}: ids {sorted(dangling)[:5]} have no label")
        seen |= idset
        total += len(ids)
    if total != len(population):
        raise ManifestMismatchError(
            f"{task}: split sizes sum to {total}, labeled population is {len(population)}"
        )


def export(path: str | Path, h: Hypergraph, splits: dict[str, dict[str, list[int]]], declared_classes: int | None = None) -> None:
    """Write the canonical dataset directory (inverse of ingest)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    hgjl.write(root / "data.hgjl", h, declared_classes)
    for task, task_splits in splits.items():
        for split, ids in task_splits.items():
            (root / f"{task}.{split}.ids").write_text(
                "".join(f"{i}\n" for i in ids), encoding="utf-8", newline="\n"
            )


def ccdf(values: list[int]) -> list[tuple[int, float]]:
    """(threshold, fraction of values >= threshold) at each distinct value."""
    if not values:
        raise DataError("ccdf needs at least one value")
    n = len(values)
    out = []
    distinct = sorted(set(values))
    ordered = sorted(values)
    for v in distinct:
        at_least = n - bisect.bisect_left(ordered, v)
        out.append((v, at_least / n))
    return out


def write_ccdf_csv(path: str | Path, pairs: list[tuple[int, float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "fraction"])
        for value, fraction in pairs:
            writer.writerow([value, repr(fraction)])


def mini_corpus_path() -> Path:
    """Directory of the bundled mini-corpus (core six-vertex structure plus
    ten synthetic vertices, fully labeled, with VC/HEC splits)."""
    return Path(resources.files("hgtok").joinpath("data/mini"))
