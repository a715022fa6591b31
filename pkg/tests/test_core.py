import math

import numpy as np
import pytest

from conftest import random_hypergraph
from hgtok.core import (
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
from hgtok.diagnostic import core_pair
from hgtok.errors import DataError, UnknownHyperedgeError, UnknownVertexError

EXPECTED_CLIQUE = {
    (1, 2), (1, 3), (1, 4), (1, 5),
    (2, 3), (2, 4), (2, 6),
    (3, 5), (3, 6),
    (4, 5), (4, 6), (5, 6),
}


@pytest.fixture
def h_a():
    return core_pair()[0]


class TestDegrees:
    def test_core_vertex_degree_is_two(self, h_a):
        for v in h_a.vertices:
            assert vertex_degree(h_a, v) == 2

    def test_isolated_vertex_has_degree_zero(self):
        h = Hypergraph.build([0, 1, 2], [(0, [0, 1])])
        assert vertex_degree(h, 2) == 0

    def test_core_hyperedge_degree_is_three(self, h_a):
        for e in h_a.hyperedge_ids:
            assert hyperedge_degree(h_a, e) == 3

    def test_singleton_hyperedge(self):
        h = Hypergraph.build([7], [(0, [7])])
        assert hyperedge_degree(h, 0) == 1

    def test_degrees_match_incidence_sums(self, rng):
        for _ in range(20):
            h = random_hypergraph(rng)
            b = incidence_matrix(h).entries
            for i, v in enumerate(h.vertices):
                assert vertex_degree(h, v) == b[i].sum()
            for j, e in enumerate(h.hyperedge_ids):
                assert hyperedge_degree(h, e) == b[:, j].sum()

    def test_unknown_ids_raise(self, h_a):
        with pytest.raises(UnknownVertexError):
            vertex_degree(h_a, 99)
        with pytest.raises(UnknownHyperedgeError):
            hyperedge_degree(h_a, 99)


class TestIncidenceMatrix:
    def test_membership_oracle(self, h_a):
        b = incidence_matrix(h_a)
        for j, eid in enumerate(b.hyperedge_ids):
            mem = h_a.members(eid)
            for i, v in enumerate(b.vertex_ids):
                assert b.entries[i, j] == (1 if v in mem else 0)

    def test_all_pairwise_edges_have_column_sum_two(self):
        h = Hypergraph.build(range(5), [(0, [0, 1]), (1, [1, 2]), (2, [3, 4])])
        assert (incidence_matrix(h).entries.sum(axis=0) == 2).all()

    def test_dual_transpose_oracle(self, rng):
        for _ in range(20):
            h = random_hypergraph(rng)
            b = incidence_matrix(h).entries
            bd = incidence_matrix(dual(h)).entries
            covered = b.sum(axis=1) > 0
            assert np.array_equal(bd, b[covered].T)

    def test_incidence_double_count(self, rng):
        for _ in range(20):
            h = random_hypergraph(rng)
            total_d = sum(vertex_degree(h, v) for v in h.vertices)
            total_r = sum(hyperedge_degree(h, e) for e in h.hyperedge_ids)
            assert total_d == total_r == incidence_matrix(h).entries.sum()


class TestCliqueExpand:
    def test_core_twelve_edges(self, h_a):
        clique = clique_expand(h_a)
        assert set(clique) == EXPECTED_CLIQUE
        assert all(mult == 1 for mult in clique.values())

    def test_single_hyperedge(self):
        h = Hypergraph.build([1, 2, 3], [(0, [1, 2, 3])])
        assert clique_expand(h) == {(1, 2): 1, (1, 3): 1, (2, 3): 1}

    def test_graph_degeneration(self, rng):
        # all hyperedges of order 2: expansion is the edge multiset itself
        edges = [(0, [0, 1]), (1, [1, 2]), (2, [0, 1]), (3, [2, 3])]
        h = Hypergraph.build(range(4), edges)
        assert clique_expand(h) == {(0, 1): 2, (1, 2): 1, (2, 3): 1}

    def test_shared_pair_multiplicity(self):
        h = Hypergraph.build([1, 2, 3, 4], [(0, [1, 2, 3]), (1, [1, 2, 4])])
        assert clique_expand(h)[(1, 2)] == 2

    def test_total_multiplicity(self, rng):
        for _ in range(20):
            h = random_hypergraph(rng)
            total = sum(clique_expand(h).values())
            expect = sum(math.comb(hyperedge_degree(h, e), 2) for e in h.hyperedge_ids)
            assert total == expect

    def test_degree_one_emits_nothing(self):
        h = Hypergraph.build([0], [(0, [0])])
        assert clique_expand(h) == {}


class TestDual:
    def test_core_dual_shape(self, h_a):
        d = dual(h_a)
        assert d.num_vertices == 4
        assert d.num_hyperedges == 6
        assert all(hyperedge_degree(d, e) == 2 for e in d.hyperedge_ids)

    def test_single_edge_dual(self):
        h = Hypergraph.build([1, 2], [(0, [1, 2])])
        d = dual(h)
        assert d.num_vertices == 1
        assert d.num_hyperedges == 2
        assert all(hyperedge_degree(d, e) == 1 for e in d.hyperedge_ids)

    def test_involution_on_incidence(self, rng):
        for _ in range(20):
            h = random_hypergraph(rng, ensure_covered=True)
            b = incidence_matrix(h).entries
            b2 = incidence_matrix(dual(dual(h))).entries
            assert np.array_equal(b, b2)

    def test_text_propagates(self):
        h = Hypergraph.build(
            [1, 2], [(0, [1, 2])], vertex_text={1: "a"}, hyperedge_text={0: "grp"}
        )
        d = dual(h)
        assert d.vertex_text[0] == "grp"
        assert d.hyperedge_text[1] == "a"


class TestCocitation:
    def test_simple_source(self):
        h, report = build_cocitation({10: [1, 2, 3]})
        assert h.num_hyperedges == 1
        assert h.members(10) == frozenset({1, 2, 3})
        assert report.num_skipped == 0

    def test_source_excluded_from_own_hyperedge(self):
        h, _ = build_cocitation({5: [1, 5, 2]})
        assert h.members(5) == frozenset({1, 2})

    def test_small_sources_skipped(self):
        h, report = build_cocitation({1: [2], 3: [4, 5]})
        assert h.num_hyperedges == 1
        assert report.num_skipped == 1
        assert report.skipped_sources == (1,)

    def test_toy_table_against_bruteforce(self):
        table = {
            0: [10, 11, 12],
            1: [10, 1, 13],
            2: [2],
            3: [11, 12, 13, 14],
            4: [0, 10],
        }
        h, report = build_cocitation(table)
        # independent hand construction
        expected_edges = {}
        for src, cited in table.items():
            mem = sorted(set(cited) - {src})
            if len(mem) >= 2:
                expected_edges[src] = set(mem)
        assert {eid: set(h.members(eid)) for eid in h.hyperedge_ids} == expected_edges
        expected_vertices = set()
        for mem in expected_edges.values():
            expected_vertices |= mem
        expected_vertices |= {s for s in table if any(s in c for c in table.values())}
        assert set(h.vertices) == expected_vertices
        assert report.num_kept == len(expected_edges)


class TestBuckets:
    def test_default_boundaries(self):
        s = BucketScheme()
        assert bucket_of_order(s, 2) == 0
        assert bucket_of_order(s, 3) == 1
        assert bucket_of_order(s, 100) == s.num_order_buckets - 1
        assert bucket_of_degree(s, 1) == 0

    def test_monotone(self):
        s = BucketScheme()
        buckets = [bucket_of_order(s, r) for r in range(1, 65)]
        assert buckets == sorted(buckets)
        dbuckets = [bucket_of_degree(s, d) for d in range(0, 65)]
        assert dbuckets == sorted(dbuckets)

    def test_null_bucket_distinct(self):
        s = BucketScheme()
        reachable = {bucket_of_order(s, r) for r in range(1, 200)}
        assert s.null_order_bucket not in reachable

    def test_bad_bounds_rejected(self):
        with pytest.raises(DataError):
            BucketScheme(order_bounds=(4, 2))


class TestModelValidation:
    def test_duplicate_members_rejected(self):
        with pytest.raises(DataError):
            Hypergraph.build([1, 2], [(0, [1, 1, 2])])

    def test_empty_hyperedge_rejected(self):
        with pytest.raises(DataError):
            Hypergraph.build([1], [(0, [])])

    def test_dangling_member_rejected(self):
        with pytest.raises(DataError):
            Hypergraph.build([1], [(0, [1, 2])])

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DataError):
            Hypergraph.build([1, 1], [])
        with pytest.raises(DataError):
            Hypergraph.build([1, 2], [(0, [1]), (0, [2])])
