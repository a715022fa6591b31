"""Matched-pair structural diagnostic.

Two fixed six-vertex hypergraphs share every pairwise co-occurrence (their
clique expansions are identical multisets) yet group vertices differently,
so the same membership query gets opposite answers on the two sides. The
generator wraps that core in shared distractors (and, in the adversarial
preset, query-related decoys), applies leakage controls, and splits by an
isomorphism-invariant signature. Metrics score matched pairs: per-sample
accuracy, both-sides-correct pair accuracy, and the flip rate.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Callable, Mapping

from . import hgjl
from .core import Hypergraph, clique_expand
from .errors import (
    DataError,
    InfeasibleConfigError,
    PredictionCountMismatchError,
    UnknownVertexError,
)
from .rng import rng_from

CORE_VERTICES = (1, 2, 3, 4, 5, 6)
CORE_EDGES_A = ((1, 2, 3), (1, 4, 5), (2, 4, 6), (3, 5, 6))
CORE_EDGES_B = ((1, 2, 4), (1, 3, 5), (2, 3, 6), (4, 5, 6))

YES = "Yes"
NO = "No"


def core_pair() -> tuple[Hypergraph, Hypergraph]:
    """The fixed six-vertex pair with identical clique expansions."""
    h_a = Hypergraph.build(CORE_VERTICES, list(enumerate(CORE_EDGES_A)))
    h_b = Hypergraph.build(CORE_VERTICES, list(enumerate(CORE_EDGES_B)))
    return h_a, h_b


def label(h: Hypergraph, c: int, u: int, v: int) -> str:
    """Yes iff some hyperedge contains all of c, u, v."""
    triple = {c, u, v}
    if len(triple) != 3:
        raise DataError(f"query vertices must be distinct: {(c, u, v)}")
    for x in triple:
        if not h.has_vertex(x):
            raise UnknownVertexError(f"query vertex {x} not in hypergraph")
    for _, mem in h.hyperedges:
        if triple <= mem:
            return YES
    return NO


@dataclass(frozen=True)
class DiagnosticSample:
    h: Hypergraph
    center: int
    u: int
    v: int
    gold: str
    pair_id: int
    side: str


@dataclass(frozen=True)
class MatchedPair:
    pair_id: int
    sample_a: DiagnosticSample
    sample_b: DiagnosticSample
    signature: str
    core_edge_ids: tuple[int, ...]


@dataclass(frozen=True)
class DiagConfig:
    distractor_vertices: int = 20
    distractor_hyperedges: int = 20
    decoys_per_query: int = 0
    train_pairs: int = 2500
    test_pairs: int = 500
    seed: int = 0

    def __post_init__(self):
        if min(self.distractor_vertices, self.distractor_hyperedges, self.decoys_per_query) < 0:
            raise DataError("distractor/decoy counts must be nonnegative")
        if self.decoys_per_query and self.distractor_vertices < 1:
            raise DataError("decoys need at least one distractor vertex")


PRESETS = {
    "clean_d20": DiagConfig(20, 20, 0, 2500, 500),
    "adv_d50": DiagConfig(50, 50, 18, 2500, 500),
    "clean_d8": DiagConfig(8, 8, 0, 500, 100),
}


def usable_queries() -> list[tuple[int, int, int]]:
    """Center/candidate triples whose labels differ across the two sides."""
    h_a, h_b = core_pair()
    out = []
    for triple in combinations(CORE_VERTICES, 3):
        if label(h_a, *triple) == label(h_b, *triple):
            continue
        for c in triple:
            u, v = sorted(set(triple) - {c})
            out.append((c, u, v))
    return out


def _build_pair(config: DiagConfig, pair_id: int, query: tuple[int, int, int]) -> MatchedPair:
    rng = rng_from(config.seed, "diag_pair", pair_id)
    c, u, v = query
    triple = {c, u, v}
    n_vertices = 6 + config.distractor_vertices
    all_vertices = list(range(1, n_vertices + 1))
    distractors = all_vertices[6:]

    shared_edges: list[tuple[int, ...]] = []
    for _ in range(config.distractor_hyperedges):
        while True:
            size = int(rng.integers(2, 5))
            members = tuple(sorted(int(x) for x in rng.choice(all_vertices, size, replace=False)))
            if not triple <= set(members):
                break
        shared_edges.append(members)
    if config.decoys_per_query:
        anchors = [(c, u), (c, v), (u, v)]
        for d in range(config.decoys_per_query):
            a, b = anchors[d % 3]
            x = int(rng.choice(distractors))
            shared_edges.append(tuple(sorted((a, b, x))))

    # Same permutations on both sides keep the clique multisets identical.
    perm_vals = rng.permutation(n_vertices)
    vmap = {old: int(perm_vals[i]) + 1 for i, old in enumerate(all_vertices)}
    n_edges = 4 + len(shared_edges)
    emap = {old: int(new) for old, new in enumerate(rng.permutation(n_edges))}

    def build_side(core_edges) -> Hypergraph:
        edges = [(emap[i], tuple(vmap[x] for x in e)) for i, e in enumerate(core_edges)]
        edges += [
            (emap[4 + i], tuple(vmap[x] for x in e)) for i, e in enumerate(shared_edges)
        ]
        texts = {vmap[x]: "node" for x in all_vertices}
        texts[vmap[u]] = "candidate"
        texts[vmap[v]] = "candidate"
        return Hypergraph.build(
            vertices=list(vmap.values()),
            hyperedges=edges,
            vertex_text=texts,
        )

    h_a = build_side(CORE_EDGES_A)
    h_b = build_side(CORE_EDGES_B)
    pc, pu, pv = vmap[c], vmap[u], vmap[v]
    sample_a = DiagnosticSample(h_a, pc, pu, pv, label(h_a, pc, pu, pv), pair_id, "A")
    sample_b = DiagnosticSample(h_b, pc, pu, pv, label(h_b, pc, pu, pv), pair_id, "B")
    core_ids = tuple(sorted(emap[i] for i in range(4)))
    pair = MatchedPair(
        pair_id=pair_id,
        sample_a=sample_a,
        sample_b=sample_b,
        signature="",
        core_edge_ids=core_ids,
    )
    return MatchedPair(
        pair_id=pair_id,
        sample_a=sample_a,
        sample_b=sample_b,
        signature=canonical_signature(pair),
        core_edge_ids=core_ids,
    )


def gen_dataset(config: DiagConfig) -> tuple[list[MatchedPair], list[MatchedPair]]:
    """Generate train/test matched pairs with signature-disjoint splits."""
    queries = usable_queries()
    if not queries:
        raise InfeasibleConfigError("no label-opposite query triples available")
    total = config.train_pairs + config.test_pairs
    order = rng_from(config.seed, "diag_queries")
    picks = order.integers(0, len(queries), size=total)
    pairs = [_build_pair(config, i, queries[int(picks[i])]) for i in range(total)]

    groups: dict[str, list[MatchedPair]] = {}
    for pair in pairs:
        groups.setdefault(pair.signature, []).append(pair)
    keys = sorted(groups)
    rng_from(config.seed, "diag_split").shuffle(keys)
    test: list[MatchedPair] = []
    train: list[MatchedPair] = []
    for key in keys:
        group = groups[key]
        if len(test) + len(group) <= config.test_pairs:
            test.extend(group)
        else:
            train.extend(group)
    if len(test) != config.test_pairs:
        raise InfeasibleConfigError(
            f"could not fill the test split exactly: got {len(test)} of {config.test_pairs}"
        )
    return train, test


def verify_equivalence(pair: MatchedPair) -> tuple[bool, dict]:
    """Check clique-multiset equality, opposite labels, and label honesty."""
    a, b = pair.sample_a, pair.sample_b
    clique_a = clique_expand(a.h)
    clique_b = clique_expand(b.h)
    report = {
        "clique_equal": clique_a == clique_b,
        "labels_opposite": {a.gold, b.gold} == {YES, NO},
        "label_a_consistent": label(a.h, a.center, a.u, a.v) == a.gold,
        "label_b_consistent": label(b.h, b.center, b.u, b.v) == b.gold,
        "no_triple_leakage": _no_leakage(pair),
    }
    return all(report.values()), report


def _no_leakage(pair: MatchedPair) -> bool:
    """Only core hyperedges may contain the full query triple."""
    core = set(pair.core_edge_ids)
    for sample in (pair.sample_a, pair.sample_b):
        triple = {sample.center, sample.u, sample.v}
        for eid, mem in sample.h.hyperedges:
            if triple <= mem and eid not in core:
                return False
    return True


# --- canonical signatures ----------------------------------------------------


def _neighborhood(sample: DiagnosticSample) -> tuple[set[int], set[int]]:
    """Vertices/hyperedges within two hyperedge hops of the query triple."""
    verts = {sample.center, sample.u, sample.v}
    edges: set[int] = set()
    for _ in range(2):
        for eid, mem in sample.h.hyperedges:
            if mem & verts:
                edges.add(eid)
        verts = set().union(*(sample.h.members(e) for e in edges)) | verts
    return verts, edges


def _side_signature(sample: DiagnosticSample, rounds: int = 3) -> str:
    verts, edges = _neighborhood(sample)
    color: dict[tuple, str] = {}
    for x in verts:
        role = "c" if x == sample.center else ("q" if x in (sample.u, sample.v) else "o")
        color[("v", x)] = role
    for e in edges:
        color[("e", e)] = "e"
    for _ in range(rounds):
        nxt = {}
        for key in color:
            kind, ident = key
            if kind == "v":
                nbrs = sorted(
                    color[("e", e)] for e in sample.h.incident(ident) if e in edges
                )
            else:
                nbrs = sorted(
                    color[("v", x)] for x in sample.h.members(ident) if x in verts
                )
            nxt[key] = hashlib.sha256(
                (color[key] + "|" + ",".join(nbrs)).encode()
            ).hexdigest()[:16]
        color = nxt
    counts = sorted(f"{k[0]}:{c}" for k, c in color.items())
    return hashlib.sha256("\n".join(counts).encode()).hexdigest()


def canonical_signature(pair: MatchedPair) -> str:
    """Isomorphism-invariant key of the pair's query-centered structure."""
    return hashlib.sha256(
        (_side_signature(pair.sample_a) + "::" + _side_signature(pair.sample_b)).encode()
    ).hexdigest()


# --- metrics -----------------------------------------------------------------


@dataclass(frozen=True)
class DiagMetrics:
    sample_acc: float
    pair_acc: float
    flip_rate: float
    invalid: int
    n_pairs: int


def metrics(predictions: Mapping[tuple[int, str], str | None], pairs: list[MatchedPair]) -> DiagMetrics:
    """Sample accuracy, pair accuracy, and flip rate in percent.

    Predictions map (pair_id, side) to "Yes"/"No"; anything else counts as
    invalid: scored incorrect and never a flip.
    """
    n = len(pairs)
    if n == 0:
        raise DataError("metrics need at least one pair")
    correct = 0
    both = 0
    flips = 0
    invalid = 0
    for pair in pairs:
        preds = []
        for sample in (pair.sample_a, pair.sample_b):
            key = (pair.pair_id, sample.side)
            if key not in predictions:
                raise PredictionCountMismatchError(f"missing prediction for {key}")
            pred = predictions[key]
            if pred not in (YES, NO):
                pred = None
                invalid += 1
            preds.append(pred)
        ok_a = preds[0] == pair.sample_a.gold
        ok_b = preds[1] == pair.sample_b.gold
        correct += int(ok_a) + int(ok_b)
        both += int(ok_a and ok_b)
        if preds[0] is not None and preds[1] is not None and preds[0] != preds[1]:
            flips += 1
    return DiagMetrics(
        sample_acc=100.0 * correct / (2 * n),
        pair_acc=100.0 * both / n,
        flip_rate=100.0 * flips / n,
        invalid=invalid,
        n_pairs=n,
    )


def clique_baseline(
    pairs: list[MatchedPair],
    predictor: Callable[[dict[tuple[int, int], int], tuple[int, int, int]], str],
) -> DiagMetrics:
    """Score a predictor that sees only the clique-expanded pair multiset.

    All original hyperedges of order > 2 are gone after expansion; because
    matched sides expand identically, any deterministic predictor gives the
    same answer on both sides of every pair.
    """
    preds: dict[tuple[int, str], str] = {}
    for pair in pairs:
        for sample in (pair.sample_a, pair.sample_b):
            clique = clique_expand(sample.h)
            preds[(pair.pair_id, sample.side)] = predictor(
                clique, (sample.center, sample.u, sample.v)
            )
    return metrics(preds, pairs)


def pairwise_majority_predictor(clique: dict[tuple[int, int], int], query: tuple[int, int, int]) -> str:
    """Yes iff all three query pairs co-occur somewhere in the clique graph."""
    c, u, v = query
    need = [tuple(sorted(p)) for p in ((c, u), (c, v), (u, v))]
    return YES if all(p in clique for p in need) else NO


def constant_no_predictor(clique, query) -> str:
    return NO


# --- dataset file io ---------------------------------------------------------


def pair_to_json(pair: MatchedPair) -> str:
    def side_records(sample: DiagnosticSample) -> list:
        return [json.loads(line) for line in hgjl.dumps(sample.h).splitlines()]

    return json.dumps(
        {
            "pair_id": pair.pair_id,
            "signature": pair.signature,
            "query": {
                "center": pair.sample_a.center,
                "u": pair.sample_a.u,
                "v": pair.sample_a.v,
            },
            "label_a": pair.sample_a.gold,
            "label_b": pair.sample_b.gold,
            "core_edge_ids": list(pair.core_edge_ids),
            "side_a": side_records(pair.sample_a),
            "side_b": side_records(pair.sample_b),
        },
        separators=(",", ":"),
    )


def pair_from_json(line: str) -> MatchedPair:
    obj = json.loads(line)
    sides = {}
    for side in ("a", "b"):
        text = "\n".join(json.dumps(rec, separators=(",", ":")) for rec in obj[f"side_{side}"])
        sides[side], _ = hgjl.loads(text)
    q = obj["query"]
    sample_a = DiagnosticSample(
        sides["a"], q["center"], q["u"], q["v"], obj["label_a"], obj["pair_id"], "A"
    )
    sample_b = DiagnosticSample(
        sides["b"], q["center"], q["u"], q["v"], obj["label_b"], obj["pair_id"], "B"
    )
    return MatchedPair(
        pair_id=obj["pair_id"],
        sample_a=sample_a,
        sample_b=sample_b,
        signature=obj["signature"],
        core_edge_ids=tuple(obj["core_edge_ids"]),
    )


def write_pairs(path: str | Path, pairs: list[MatchedPair]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pair in pairs:
            fh.write(pair_to_json(pair) + "\n")


def read_pairs(path: str | Path) -> list[MatchedPair]:
    return [pair_from_json(ln) for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln]
