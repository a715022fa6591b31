import numpy as np
import pytest

from hgtok.core import Hypergraph


def random_hypergraph(
    rng: np.random.Generator,
    max_vertices: int = 20,
    max_edges: int = 15,
    min_vertices: int = 2,
    with_text: bool = False,
    ensure_covered: bool = False,
) -> Hypergraph:
    """Small random hypergraph for property tests; may contain isolated
    vertices unless ensure_covered is set."""
    n_v = int(rng.integers(min_vertices, max_vertices + 1))
    n_e = int(rng.integers(1, max_edges + 1))
    vertices = list(range(n_v))
    edges = []
    for eid in range(n_e):
        size = int(rng.integers(1, min(n_v, 6) + 1))
        members = rng.choice(n_v, size=size, replace=False)
        edges.append((eid, [int(v) for v in members]))
    if ensure_covered:
        covered = set()
        for _, mem in edges:
            covered.update(mem)
        missing = [v for v in vertices if v not in covered]
        for v in missing:
            eid = len(edges)
            other = int(rng.integers(0, n_v))
            edges.append((eid, [v] if other == v else [v, other]))
    vtext = {v: f"object {v}" for v in vertices} if with_text else None
    return Hypergraph.build(vertices, edges, vertex_text=vtext)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
