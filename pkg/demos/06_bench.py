"""Dataset tooling: ingest the bundled mini-corpus, recompute statistics,
and export degree CCDFs.

Run: python demos/06_bench.py
"""

from hgtok.bench import ccdf, ingest, mini_corpus_path, stats
from hgtok.core import hyperedge_degree, vertex_degree

h, manifest, splits = ingest(mini_corpus_path(), name="mini", domain="synthetic")
print(manifest.to_json())

counts = stats(h)
print("\ndegree histogram:", counts["degree_hist"])
print("order histogram:", counts["order_hist"])
print("incidence double-count identity:",
      counts["num_incidences"],
      "=", sum(d * n for d, n in counts["degree_hist"].items()),
      "=", sum(r * n for r, n in counts["order_hist"].items()))

degrees = [vertex_degree(h, v) for v in h.vertices]
orders = [hyperedge_degree(h, e) for e in h.hyperedge_ids]
print("\nvertex-degree CCDF:", ccdf(degrees))
print("hyperedge-order CCDF:", ccdf(orders))
