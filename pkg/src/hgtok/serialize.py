"""Compile a query-centered hypergraph context into the fixed-shape sequence.

``serialize`` fills the template's detail tree by sampling neighborhoods
(uniform, without replacement, one RNG stream per branch), records the true
incidence pattern among the sampled slots, and collects the overview shells.
``encapsulate`` then attaches semantics: text embeddings for detail slots,
alternating mean-aggregation states for overview cells, zeros for pads, plus
the structural descriptor vector for every slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    BucketScheme,
    Hypergraph,
    bucket_of_degree,
    bucket_of_order,
    hyperedge_degree,
    vertex_degree,
)
from .errors import RoleMismatchError, UnknownHyperedgeError, UnknownVertexError
from .rng import rng_from
from .template import NUM_SLOT_ROLES, CenterRole, SlotRole, Template

# Projector-side role conditioning: vertex, hyperedge, overview, pad.
HIP_ROLE_V = 0
HIP_ROLE_E = 1
HIP_ROLE_O = 2
HIP_ROLE_P = 3
NUM_HIP_ROLES = 4


@dataclass(frozen=True)
class HidtoSlot:
    index: int
    role: SlotRole
    layer: int
    parent_index: int | None
    binding: tuple | None  # ("v", id) | ("e", id) | ("o", hop, bucket) | None


@dataclass(frozen=True)
class HidtoSequence:
    """Fixed-shape slot sequence plus ground-truth structure.

    ``members`` maps each real hyperedge-kind slot to every real vertex-kind
    slot whose bound vertex lies in that hyperedge (true membership in the
    source hypergraph, not just tree edges); ``incident`` is the transpose.
    ``cell_edges`` holds the hyperedge ids collected per overview cell.
    """

    h: Hypergraph
    template: Template
    center: int
    center_kind: CenterRole
    seed: int
    slots: tuple[HidtoSlot, ...]
    members: dict[int, tuple[int, ...]]
    incident: dict[int, tuple[int, ...]]
    incidence_pairs: frozenset[tuple[int, int]]
    co_member_pairs: frozenset[tuple[int, int]]
    cell_edges: dict[tuple[int, int], tuple[int, ...]]

    @property
    def num_detail_slots(self) -> int:
        return self.template.num_detail_slots

    def real_detail_slots(self) -> list[HidtoSlot]:
        return [
            s
            for s in self.slots[: self.num_detail_slots]
            if s.role in (SlotRole.CENTER, SlotRole.V, SlotRole.E)
        ]

    def relation_class(self, i: int, j: int) -> int:
        """0 = unrelated, 1 = incidence, 2 = co-member, for detail slots."""
        pair = (i, j) if i < j else (j, i)
        if pair in self.incidence_pairs:
            return 1
        if pair in self.co_member_pairs:
            return 2
        return 0


def serialize(h: Hypergraph, center: int, template: Template, seed: int) -> HidtoSequence:
    """Fill the template around ``center`` and record ground truth."""
    spec = template.spec
    if spec.center_role is CenterRole.VERTEX:
        if not h.has_vertex(center):
            if h.has_hyperedge(center):
                raise RoleMismatchError(f"center {center} is a hyperedge, template expects a vertex")
            raise UnknownVertexError(f"center vertex {center} not in hypergraph")
    else:
        if not h.has_hyperedge(center):
            if h.has_vertex(center):
                raise RoleMismatchError(f"center {center} is a vertex, template expects a hyperedge")
            raise UnknownHyperedgeError(f"center hyperedge {center} not in hypergraph")

    n_detail = template.num_detail_slots
    bindings: list[tuple | None] = [None] * n_detail
    roles: list[SlotRole] = [SlotRole.V_PAD] * n_detail
    kind0 = "v" if spec.center_role is CenterRole.VERTEX else "e"
    bindings[0] = (kind0, center)
    roles[0] = SlotRole.CENTER

    for idx in range(n_detail):
        child_ids = template.children[idx]
        if not child_ids:
            continue
        depth = template.layer[idx] + 1
        child_kind = spec.expected_kind(depth)
        binding = bindings[idx]
        candidates: list[int] = []
        if binding is not None:
            kind, obj = binding
            parent_binding = (
                bindings[template.parent[idx]] if template.parent[idx] is not None else None
            )
            if kind == "e":
                exclude = parent_binding[1] if parent_binding and parent_binding[0] == "v" else None
                candidates = sorted(v for v in h.members(obj) if v != exclude)
            else:
                exclude = parent_binding[1] if parent_binding and parent_binding[0] == "e" else None
                candidates = sorted(e for e in h.incident(obj) if e != exclude)
        if candidates:
            rng = rng_from(seed, "serialize", kind0, center, template.paths[idx])
            order = rng.permutation(len(candidates))
            chosen = [candidates[k] for k in order[: len(child_ids)]]
        else:
            chosen = []
        for pos, slot_idx in enumerate(child_ids):
            if pos < len(chosen):
                obj = chosen[pos]
                if child_kind is CenterRole.VERTEX:
                    bindings[slot_idx] = ("v", obj)
                    roles[slot_idx] = SlotRole.V
                else:
                    bindings[slot_idx] = ("e", obj)
                    roles[slot_idx] = SlotRole.E
            else:
                bindings[slot_idx] = None
                roles[slot_idx] = (
                    SlotRole.V_PAD if child_kind is CenterRole.VERTEX else SlotRole.E_PAD
                )

    slots = [
        HidtoSlot(
            index=i,
            role=roles[i],
            layer=template.layer[i],
            parent_index=template.parent[i],
            binding=bindings[i],
        )
        for i in range(n_detail)
    ]
    for pos, (hop, b) in enumerate(template.overview_cells):
        slots.append(
            HidtoSlot(
                index=n_detail + pos,
                role=SlotRole.OVERVIEW,
                layer=hop,
                parent_index=None,
                binding=("o", hop, b),
            )
        )

    members, incident, inc_pairs = _incidence_pattern(h, slots[:n_detail])
    co_pairs = _co_member_pairs(slots[:n_detail])
    cells = overview_shells(h, center, spec.center_role, spec.overview_hops, spec.bucket_scheme)
    return HidtoSequence(
        h=h,
        template=template,
        center=center,
        center_kind=spec.center_role,
        seed=seed,
        slots=tuple(slots),
        members=members,
        incident=incident,
        incidence_pairs=frozenset(inc_pairs),
        co_member_pairs=frozenset(co_pairs),
        cell_edges=cells,
    )


def _incidence_pattern(h: Hypergraph, detail_slots: list[HidtoSlot]):
    v_slots = [(s.index, s.binding[1]) for s in detail_slots if s.binding and s.binding[0] == "v"]
    e_slots = [(s.index, s.binding[1]) for s in detail_slots if s.binding and s.binding[0] == "e"]
    members: dict[int, tuple[int, ...]] = {}
    incident: dict[int, tuple[int, ...]] = {i: () for i, _ in v_slots}
    pairs: set[tuple[int, int]] = set()
    for ei, eid in e_slots:
        mem = h.members(eid)
        hit = tuple(vi for vi, v in v_slots if v in mem)
        members[ei] = hit
        for vi in hit:
            incident[vi] = incident[vi] + (ei,)
            pairs.add((vi, ei) if vi < ei else (ei, vi))
    return members, incident, pairs


def _co_member_pairs(detail_slots: list[HidtoSlot]) -> set[tuple[int, int]]:
    """Vertex slots sitting in member branches of the same sampled hyperedge."""
    by_edge: dict[int, list[int]] = {}
    slot_by_index = {s.index: s for s in detail_slots}
    for s in detail_slots:
        if s.binding is None or s.binding[0] != "v" or s.parent_index is None:
            continue
        parent = slot_by_index[s.parent_index]
        if parent.binding is not None and parent.binding[0] == "e":
            by_edge.setdefault(parent.binding[1], []).append(s.index)
    pairs: set[tuple[int, int]] = set()
    for group in by_edge.values():
        group.sort()
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                pairs.add((group[a], group[b]))
    return pairs


def overview_shells(
    h: Hypergraph,
    center: int,
    center_kind: CenterRole,
    hops: int,
    scheme: BucketScheme,
) -> dict[tuple[int, int], tuple[int, ...]]:
    """Alternating BFS shells, partitioned by order bucket.

    A visited set over both vertices and hyperedges assigns every object to
    the first layer at which it is reached; shell h holds the hyperedges
    first reached at the h-th hyperedge layer. For a hyperedge center the
    center itself is the starting layer and is not summarized.
    """
    if center_kind is CenterRole.VERTEX:
        frontier_v = {center}
        visited_v = {center}
        visited_e: set[int] = set()
    else:
        visited_e = {center}
        frontier_v = set(h.members(center))
        visited_v = set(frontier_v)
    cells: dict[tuple[int, int], list[int]] = {
        (hop, b): [] for hop in range(1, hops + 1) for b in range(scheme.num_order_buckets)
    }
    for hop in range(1, hops + 1):
        shell = set()
        for v in frontier_v:
            for e in h.incident(v):
                if e not in visited_e:
                    shell.add(e)
        visited_e |= shell
        next_v = set()
        for e in shell:
            for v in h.members(e):
                if v not in visited_v:
                    next_v.add(v)
        visited_v |= next_v
        frontier_v = next_v
        for e in sorted(shell):
            b = bucket_of_order(scheme, hyperedge_degree(h, e))
            cells[(hop, b)].append(e)
    return {key: tuple(eids) for key, eids in cells.items()}


def bucket_offsets(scheme: BucketScheme, dim: int, seed: int = 0) -> np.ndarray:
    """Fixed unit-norm vector per order bucket, used during propagation."""
    out = np.zeros((scheme.num_order_buckets, dim))
    for b in range(scheme.num_order_buckets):
        raw = rng_from(seed, "bucket_offset", b).standard_normal(dim)
        out[b] = raw / np.linalg.norm(raw)
    return out


def propagate(
    h: Hypergraph,
    steps: int,
    scheme: BucketScheme,
    vertex_init: Callable[[int], np.ndarray],
    edge_init: Callable[[int], np.ndarray],
    offsets: np.ndarray,
) -> tuple[list[dict[int, np.ndarray]], list[dict[int, np.ndarray]]]:
    """Alternating mean propagation over the incidence bipartite graph.

    Step t first averages member vertex states into each hyperedge, then
    averages (hyperedge state + its order-bucket offset) into each vertex.
    Isolated vertices have no incident hyperedges and go to zero. Returns
    the full per-step state dicts (index 0 = initial states).
    """
    dim = offsets.shape[1]
    m_v = {v: np.asarray(vertex_init(v), dtype=float) for v in h.vertices}
    m_e = {eid: np.asarray(edge_init(eid), dtype=float) for eid, _ in h.hyperedges}
    v_states = [dict(m_v)]
    e_states = [dict(m_e)]
    for _ in range(steps):
        new_e = {}
        for eid, mem in h.hyperedges:
            new_e[eid] = sum(m_v[v] for v in mem) / len(mem)
        new_v = {}
        for v in h.vertices:
            star = h.incident(v)
            if not star:
                new_v[v] = np.zeros(dim)
                continue
            acc = np.zeros(dim)
            for e in star:
                acc += new_e[e] + offsets[bucket_of_order(scheme, hyperedge_degree(h, e))]
            new_v[v] = acc / len(star)
        m_v, m_e = new_v, new_e
        v_states.append(dict(m_v))
        e_states.append(dict(m_e))
    return v_states, e_states


def overview_aggregate(
    seq: HidtoSequence,
    provider,
    offsets: np.ndarray,
) -> tuple[dict[tuple[int, int], np.ndarray], dict[tuple[int, int], bool]]:
    """Mean hyperedge state at propagation step t = hop, per overview cell.

    Empty cells yield the zero vector and a False presence flag.
    """
    h = seq.h
    spec = seq.template.spec

    def psi_v(v: int) -> np.ndarray:
        return provider.vertex(h, v)

    def psi_e(e: int) -> np.ndarray:
        if e in h.hyperedge_text:
            return provider.hyperedge(h, e)
        mem = sorted(h.members(e))
        return sum(provider.vertex(h, v) for v in mem) / len(mem)

    _, e_states = propagate(h, spec.overview_hops, spec.bucket_scheme, psi_v, psi_e, offsets)
    values: dict[tuple[int, int], np.ndarray] = {}
    nonempty: dict[tuple[int, int], bool] = {}
    for (hop, b), eids in seq.cell_edges.items():
        if eids:
            values[(hop, b)] = sum(e_states[hop][e] for e in eids) / len(eids)
            nonempty[(hop, b)] = True
        else:
            values[(hop, b)] = np.zeros(offsets.shape[1])
            nonempty[(hop, b)] = False
    return values, nonempty


@dataclass(frozen=True)
class EncapsulatedTokens:
    """Per-slot semantic rows ``a``, structural rows ``s``, and HIP roles."""

    seq: HidtoSequence
    a: np.ndarray
    s: np.ndarray
    hip_roles: np.ndarray

    @property
    def g(self) -> np.ndarray:
        return np.hstack([self.a, self.s])


def encapsulate(seq: HidtoSequence, provider, offset_seed: int = 0) -> EncapsulatedTokens:
    """Attach semantic vectors and structural descriptors to every slot.

    Semantic side: vertex slots embed their text, hyperedge slots fall back
    to the mean of member-vertex embeddings when textless, overview slots
    take their aggregated cell vector, pads are zero. Structural side packs
    [ PE row | type one-hot | depth one-hot | order bucket | degree bucket ],
    using the null bucket wherever a descriptor does not apply (including
    empty overview cells, which is how slot emptiness is signaled).
    """
    h = seq.h
    template = seq.template
    spec = template.spec
    scheme = spec.bucket_scheme
    n = template.num_slots
    d_text = provider.dim

    offsets = bucket_offsets(scheme, d_text, offset_seed)
    cell_values, cell_nonempty = overview_aggregate(seq, provider, offsets)

    a = np.zeros((n, d_text))
    s = np.zeros((n, spec.struct_dim))
    hip_roles = np.zeros(n, dtype=np.int64)

    n_depth = spec.num_depth_codes
    n_ord = scheme.num_order_buckets + 1
    n_deg = scheme.num_degree_buckets + 1
    off_type = spec.pe_dim
    off_depth = off_type + NUM_SLOT_ROLES
    off_ord = off_depth + n_depth
    off_deg = off_ord + n_ord

    def psi_e(e: int) -> np.ndarray:
        if e in h.hyperedge_text:
            return provider.hyperedge(h, e)
        mem = sorted(h.members(e))
        return sum(provider.vertex(h, v) for v in mem) / len(mem)

    for slot in seq.slots:
        i = slot.index
        row = s[i]
        row[: spec.pe_dim] = template.pe_all[i]
        row[off_type + slot.role.value] = 1.0
        row[off_depth + slot.layer] = 1.0
        ord_bucket = scheme.null_order_bucket
        deg_bucket = scheme.null_degree_bucket

        if slot.role is SlotRole.CENTER:
            kind, obj = slot.binding
            if kind == "v":
                a[i] = provider.vertex(h, obj)
                deg_bucket = bucket_of_degree(scheme, vertex_degree(h, obj))
                hip_roles[i] = HIP_ROLE_V
            else:
                a[i] = psi_e(obj)
                ord_bucket = bucket_of_order(scheme, hyperedge_degree(h, obj))
                hip_roles[i] = HIP_ROLE_E
        elif slot.role is SlotRole.V:
            _, v = slot.binding
            a[i] = provider.vertex(h, v)
            deg_bucket = bucket_of_degree(scheme, vertex_degree(h, v))
            hip_roles[i] = HIP_ROLE_V
        elif slot.role is SlotRole.E:
            _, e = slot.binding
            a[i] = psi_e(e)
            ord_bucket = bucket_of_order(scheme, hyperedge_degree(h, e))
            hip_roles[i] = HIP_ROLE_E
        elif slot.role is SlotRole.OVERVIEW:
            _, hop, b = slot.binding
            a[i] = cell_values[(hop, b)]
            if cell_nonempty[(hop, b)]:
                ord_bucket = b
            hip_roles[i] = HIP_ROLE_O
        else:  # pads
            hip_roles[i] = HIP_ROLE_P

        row[off_ord + ord_bucket] = 1.0
        row[off_deg + deg_bucket] = 1.0
    return EncapsulatedTokens(seq=seq, a=a, s=s, hip_roles=hip_roles)
