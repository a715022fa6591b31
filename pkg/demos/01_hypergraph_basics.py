"""Walkthrough of the hypergraph data model and structural operations.

Run: python demos/01_hypergraph_basics.py
"""

from hgtok import (
    BucketScheme,
    Hypergraph,
    bucket_of_degree,
    bucket_of_order,
    build_cocitation,
    clique_expand,
    dual,
    hyperedge_degree,
    incidence_matrix,
    vertex_degree,
)

# A small co-authorship-style hypergraph: each hyperedge groups a team.
h = Hypergraph.build(
    vertices=range(7),
    hyperedges={0: [0, 1, 2], 1: [1, 3], 2: [2, 3, 4, 5], 3: [5, 6]},
    vertex_text={i: f"author {i}" for i in range(7)},
)

print("vertices:", h.vertices)
print("hyperedges:")
for eid, members in h.hyperedges:
    print(f"  e{eid}: {sorted(members)}  (order {hyperedge_degree(h, eid)})")

print("\nvertex degrees:", {v: vertex_degree(h, v) for v in h.vertices})

b = incidence_matrix(h)
print("\nincidence matrix (rows = vertices, cols = hyperedges):")
print(b.entries)
print("row sums == degrees, column sums == orders:",
      list(b.entries.sum(axis=1)), list(b.entries.sum(axis=0)))

print("\nclique expansion (pair -> multiplicity):")
for pair, mult in sorted(clique_expand(h).items()):
    print(f"  {pair}: {mult}")

d = dual(h)
print("\ndual hypergraph: hyperedges become vertices, vertex stars become hyperedges")
for eid, members in d.hyperedges:
    print(f"  dual edge for original vertex {eid}: hyperedges {sorted(members)}")

# Co-citation construction: every source's cited set becomes one hyperedge,
# the source itself excluded, sources with fewer than 2 citations skipped.
citations = {100: [1, 2, 3], 200: [2, 200, 4], 300: [5]}
cc, report = build_cocitation(citations)
print("\nco-citation hyperedges:", {e: sorted(cc.members(e)) for e in cc.hyperedge_ids})
print("skipped sources:", report.skipped_sources)

scheme = BucketScheme()
print("\norder buckets for orders 1..12:", [bucket_of_order(scheme, r) for r in range(1, 13)])
print("degree buckets for degrees 0..8:", [bucket_of_degree(scheme, d_) for d_ in range(9)])
