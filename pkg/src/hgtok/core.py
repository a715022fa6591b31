"""Canonical hypergraph data model and structural operations.

A hypergraph is a set of vertices plus hyperedges, each hyperedge an
arbitrary-size vertex subset, with optional per-object text and labels.
All operations are pure functions over immutable inputs and use ascending-id
canonical ordering so serialization and tests are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, UnknownHyperedgeError, UnknownVertexError

INF = math.inf

DEFAULT_ORDER_BOUNDS = (2, 4, 8, INF)
DEFAULT_DEGREE_BOUNDS = (1, 2, 4, INF)


@dataclass(frozen=True)
class Hypergraph:
    """Vertices, hyperedges-as-vertex-sets, and optional texts/labels.

    Vertex and hyperedge ids are opaque nonnegative integers, unique within
    their namespaces; members must reference existing vertices and every
    hyperedge has at least one member.
    """

    vertices: tuple[int, ...]
    hyperedges: tuple[tuple[int, frozenset[int]], ...]
    vertex_text: Mapping[int, str] = field(default_factory=dict)
    hyperedge_text: Mapping[int, str] = field(default_factory=dict)
    vertex_label: Mapping[int, int] = field(default_factory=dict)
    hyperedge_label: Mapping[int, int] = field(default_factory=dict)

    @staticmethod
    def build(
        vertices: Iterable[int],
        hyperedges: Mapping[int, Iterable[int]] | Sequence[tuple[int, Iterable[int]]],
        vertex_text: Mapping[int, str] | None = None,
        hyperedge_text: Mapping[int, str] | None = None,
        vertex_label: Mapping[int, int] | None = None,
        hyperedge_label: Mapping[int, int] | None = None,
    ) -> "Hypergraph":
        """Validate and canonicalize (ascending ids) into a Hypergraph."""
        vset = set()
        for v in vertices:
            if not isinstance(v, int) or v < 0:
                raise DataError(f"vertex id must be a nonnegative integer, got {v!r}")
            if v in vset:
                raise DataError(f"duplicate vertex id {v}")
            vset.add(v)
        items = hyperedges.items() if isinstance(hyperedges, Mapping) else hyperedges
        eids = set()
        edges = []
        for eid, members in items:
            if not isinstance(eid, int) or eid < 0:
                raise DataError(f"hyperedge id must be a nonnegative integer, got {eid!r}")
            if eid in eids:
                raise DataError(f"duplicate hyperedge id {eid}")
            eids.add(eid)
            mem = list(members)
            if len(mem) != len(set(mem)):
                raise DataError(f"hyperedge {eid} has duplicate members")
            if not mem:
                raise DataError(f"hyperedge {eid} is empty")
            for v in mem:
                if v not in vset:
                    raise DataError(f"hyperedge {eid} references missing vertex {v}")
            edges.append((eid, frozenset(mem)))
        edges.sort(key=lambda it: it[0])
        return Hypergraph(
            vertices=tuple(sorted(vset)),
            hyperedges=tuple(edges),
            vertex_text=dict(vertex_text or {}),
            hyperedge_text=dict(hyperedge_text or {}),
            vertex_label=dict(vertex_label or {}),
            hyperedge_label=dict(hyperedge_label or {}),
        )

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_hyperedges(self) -> int:
        return len(self.hyperedges)

    def has_vertex(self, v: int) -> bool:
        return v in self._vertex_index

    def has_hyperedge(self, e: int) -> bool:
        return e in self._edge_index

    def members(self, e: int) -> frozenset[int]:
        idx = self._edge_index.get(e)
        if idx is None:
            raise UnknownHyperedgeError(f"unknown hyperedge {e}")
        return self.hyperedges[idx][1]

    def incident(self, v: int) -> tuple[int, ...]:
        """Ids of hyperedges containing v, ascending."""
        if v not in self._vertex_index:
            raise UnknownVertexError(f"unknown vertex {v}")
        return self._incidence_by_vertex.get(v, ())

    @property
    def hyperedge_ids(self) -> tuple[int, ...]:
        return tuple(eid for eid, _ in self.hyperedges)

    # Lazy caches; the dataclass is frozen so these are computed once.
    @property
    def _vertex_index(self) -> dict[int, int]:
        cached = self.__dict__.get("_vidx")
        if cached is None:
            cached = {v: i for i, v in enumerate(self.vertices)}
            object.__setattr__(self, "_vidx", cached)
        return cached

    @property
    def _edge_index(self) -> dict[int, int]:
        cached = self.__dict__.get("_eidx")
        if cached is None:
            cached = {eid: i for i, (eid, _) in enumerate(self.hyperedges)}
            object.__setattr__(self, "_eidx", cached)
        return cached

    @property
    def _incidence_by_vertex(self) -> dict[int, tuple[int, ...]]:
        cached = self.__dict__.get("_inc_v")
        if cached is None:
            acc: dict[int, list[int]] = {}
            for eid, mem in self.hyperedges:
                for v in mem:
                    acc.setdefault(v, []).append(eid)
            cached = {v: tuple(sorted(es)) for v, es in acc.items()}
            object.__setattr__(self, "_inc_v", cached)
        return cached


@dataclass(frozen=True)
class IncidenceMatrix:
    """0/1 incidence with rows in vertex order and columns in hyperedge order."""

    entries: np.ndarray
    vertex_ids: tuple[int, ...]
    hyperedge_ids: tuple[int, ...]

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class BucketScheme:
    """Maps hyperedge orders and vertex degrees to small interval indices.

    Bounds are ascending upper limits; the last may be inf for an open top
    bucket. ``null_bucket`` marks tokens where the descriptor does not apply.
    """

    order_bounds: tuple[float, ...] = DEFAULT_ORDER_BOUNDS
    degree_bounds: tuple[float, ...] = DEFAULT_DEGREE_BOUNDS

    def __post_init__(self):
        for bounds in (self.order_bounds, self.degree_bounds):
            if len(bounds) < 1:
                raise DataError("bucket bounds must contain at least one bound")
            if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
                raise DataError(f"bucket bounds must be strictly ascending: {bounds}")

    @property
    def num_order_buckets(self) -> int:
        return len(self.order_bounds)

    @property
    def num_degree_buckets(self) -> int:
        return len(self.degree_bounds)

    @property
    def null_order_bucket(self) -> int:
        return len(self.order_bounds)

    @property
    def null_degree_bucket(self) -> int:
        return len(self.degree_bounds)


def vertex_degree(h: Hypergraph, v: int) -> int:
    """Number of hyperedges containing v."""
    return len(h.incident(v))


def hyperedge_degree(h: Hypergraph, e: int) -> int:
    """Number of member vertices; also the hyperedge order."""
    return len(h.members(e))


def incidence_matrix(h: Hypergraph) -> IncidenceMatrix:
    """Dense 0/1 incidence matrix with deterministic row/column order."""
    vidx = {v: i for i, v in enumerate(h.vertices)}
    b = np.zeros((h.num_vertices, h.num_hyperedges), dtype=np.int8)
    for j, (_, mem) in enumerate(h.hyperedges):
        for v in mem:
            b[vidx[v], j] = 1
    return IncidenceMatrix(entries=b, vertex_ids=h.vertices, hyperedge_ids=h.hyperedge_ids)


def clique_expand(h: Hypergraph) -> dict[tuple[int, int], int]:
    """All unordered member pairs per hyperedge, with multiplicity.

    Each hyperedge of order r contributes its C(r,2) pairs once; the same
    pair appearing in several hyperedges keeps the multiplicity. Hyperedges
    of order 1 contribute nothing.
    """
    out: dict[tuple[int, int], int] = {}
    for _, mem in h.hyperedges:
        ms = sorted(mem)
        for i in range(len(ms)):
            for j in range(i + 1, len(ms)):
                pair = (ms[i], ms[j])
                out[pair] = out.get(pair, 0) + 1
    return out


def dual(h: Hypergraph) -> Hypergraph:
    """Swap roles: hyperedges become vertices, vertex stars become hyperedges.

    Dual vertices reuse original hyperedge ids; each original vertex v with
    degree >= 1 induces a dual hyperedge (id = v) over the hyperedges
    containing v. Hyperedge texts/labels carry over to the dual vertices and
    vertex texts/labels to the dual hyperedges.
    """
    dual_vertices = list(h.hyperedge_ids)
    dual_edges = []
    dual_edge_text = {}
    dual_edge_label = {}
    for v in h.vertices:
        star = h.incident(v)
        if not star:
            continue
        dual_edges.append((v, star))
        if v in h.vertex_text:
            dual_edge_text[v] = h.vertex_text[v]
        if v in h.vertex_label:
            dual_edge_label[v] = h.vertex_label[v]
    return Hypergraph.build(
        vertices=dual_vertices,
        hyperedges=dual_edges,
        vertex_text=dict(h.hyperedge_text),
        vertex_label=dict(h.hyperedge_label),
        hyperedge_text=dual_edge_text,
        hyperedge_label=dual_edge_label,
    )


@dataclass(frozen=True)
class CocitationReport:
    num_sources: int
    num_kept: int
    num_skipped: int
    skipped_sources: tuple[int, ...]


def build_cocitation(
    citations: Mapping[int, Sequence[int]],
    source_text: Mapping[int, str] | None = None,
    cited_text: Mapping[int, str] | None = None,
    source_label: Mapping[int, int] | None = None,
    cited_label: Mapping[int, int] | None = None,
) -> tuple[Hypergraph, CocitationReport]:
    """One hyperedge per source over its cited objects, source excluded.

    Sources with fewer than two distinct cited objects left after removing
    the source itself are skipped and counted in the report. Hyperedge ids
    are the source ids, which makes the source available as the hyperedge
    label provenance. Vertices are all cited objects plus any source that
    itself appears as a citation.
    """
    source_text = source_text or {}
    cited_text = cited_text or {}
    source_label = source_label or {}
    cited_label = cited_label or {}

    cited_union: set[int] = set()
    for cited in citations.values():
        cited_union.update(cited)
    vertices = set(cited_union)
    vertices.update(s for s in citations if s in cited_union)

    edges = []
    skipped = []
    for src in sorted(citations):
        mem = sorted({c for c in citations[src] if c != src})
        if len(mem) < 2:
            skipped.append(src)
            continue
        edges.append((src, mem))

    vtext = {v: cited_text[v] for v in vertices if v in cited_text}
    vlabel = {v: cited_label[v] for v in vertices if v in cited_label}
    etext = {src: source_text[src] for src, _ in edges if src in source_text}
    elabel = {src: source_label[src] for src, _ in edges if src in source_label}
    hg = Hypergraph.build(
        vertices=sorted(vertices),
        hyperedges=edges,
        vertex_text=vtext,
        vertex_label=vlabel,
        hyperedge_text=etext,
        hyperedge_label=elabel,
    )
    report = CocitationReport(
        num_sources=len(citations),
        num_kept=len(edges),
        num_skipped=len(skipped),
        skipped_sources=tuple(skipped),
    )
    return hg, report


def bucket_of_order(scheme: BucketScheme, r: int) -> int:
    """Smallest order bucket whose upper bound covers r."""
    if r < 1:
        raise DataError(f"order must be >= 1, got {r}")
    return _bucket(scheme.order_bounds, r)


def bucket_of_degree(scheme: BucketScheme, d: int) -> int:
    """Smallest degree bucket whose upper bound covers d."""
    if d < 0:
        raise DataError(f"degree must be >= 0, got {d}")
    return _bucket(scheme.degree_bounds, d)


def _bucket(bounds: tuple[float, ...], x: int) -> int:
    for i, bound in enumerate(bounds):
        if x <= bound:
            return i
    # Values above a finite top bound land in the last bucket.
    return len(bounds) - 1
