"""Graph representation, generators, census oracles, and serialization."""

import math
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cliquesim.graphs import (
    C4,
    K4,
    TRIANGLE,
    EdgeListError,
    Graph,
    GraphError,
    ParameterError,
    arboricity_exact,
    census,
    degeneracy,
    generate,
    oracle_contains,
    parse_edge_list,
    serialize_edge_list,
)


def complete_graph(n):
    return Graph(n, list(combinations(range(1, n + 1), 2)))


class TestGraphType:
    def test_adjacency_is_symmetric(self):
        g = Graph(4, [(1, 2), (3, 4)])
        for u in range(1, 5):
            for v in g.neighbors(u):
                assert u in g.neighbors(v)

    def test_self_loop_rejected(self):
        with pytest.raises(GraphError):
            Graph(3, [(2, 2)])

    def test_out_of_range_rejected(self):
        with pytest.raises(GraphError):
            Graph(3, [(1, 4)])

    def test_edge_count_and_degrees(self):
        g = Graph(5, [(1, 2), (2, 3), (2, 4)])
        assert g.num_edges == 3
        assert g.degree(2) == 3
        assert g.max_degree == 3


class TestGenerators:
    def test_shared_edge_structure(self):
        g = generate("shared-edge", {"n": 10, "t": 8})
        assert g.has_edge(1, 2)
        for k in range(3, 11):
            assert g.has_edge(1, k) and g.has_edge(2, k)
        assert g.num_edges == 17

    def test_disjoint_triangles(self):
        g = generate("disjoint-triangles", {"n": 9, "t": 3})
        assert g.num_edges == 9
        assert census(g).t == 3

    def test_gnp_p_one_is_complete(self):
        g = generate("gnp", {"n": 4, "p": 1.0}, seed=17)
        assert g.num_edges == 6

    def test_parameter_errors(self):
        with pytest.raises(ParameterError):
            generate("shared-edge", {"n": 5, "t": 4})
        with pytest.raises(ParameterError):
            generate("disjoint-triangles", {"n": 8, "t": 3})
        with pytest.raises(ParameterError):
            generate("no-such-family", {"n": 4})

    def test_determinism(self):
        a = generate("gnp", {"n": 20, "p": 0.3}, seed=5)
        b = generate("gnp", {"n": 20, "p": 0.3}, seed=5)
        assert a == b
        assert a != generate("gnp", {"n": 20, "p": 0.3}, seed=6)

    def test_tree_is_acyclic_connected(self):
        g = generate("tree", {"n": 30}, seed=2)
        assert g.num_edges == 29
        assert census(g).t == 0

    def test_forest_union_arboricity_bound(self):
        g = generate("forest-union", {"n": 12, "k": 2}, seed=3)
        assert arboricity_exact(g) <= 2


class TestCensus:
    def test_k4(self):
        c = census(complete_graph(4))
        assert c.t == 4
        assert (c.t4, c.t5, c.t6) == (6, 0, 0)
        assert c.delta_max == 2

    def test_empty(self):
        c = census(Graph(5, []))
        assert c.t == 0 and c.delta_max == 0

    def test_pair_enumeration_matches_identities(self):
        for seed in range(30):
            g = generate("gnp", {"n": 24, "p": 0.3}, seed=seed)
            a = census(g, pair_enumeration=True)
            b = census(g, pair_enumeration=False)
            assert (a.t4, a.t5, a.t6) == (b.t4, b.t5, b.t6)

    def test_pair_classes_sum(self):
        for seed in range(100):
            g = generate("gnp", {"n": 20 + seed % 45, "p": 0.15}, seed=seed)
            c = census(g)
            assert c.t4 + c.t5 + c.t6 == c.t * (c.t - 1) // 2

    def test_max_edge_multiplicity_lower_bound(self):
        for seed in range(60):
            g = generate("gnp", {"n": 32, "p": 0.25}, seed=seed)
            c = census(g)
            if c.t > 0:
                assert c.delta_max >= 2 * c.t4 / (3 * c.t)

    def test_k6_counting_identity(self):
        c = census(complete_graph(6))
        by_edges = sum(
            d * (d - 1) // 2 for d in c.delta_per_edge.values()
        )
        assert c.t4 == by_edges


class TestOracle:
    def test_triangle_in_k4(self):
        assert oracle_contains(complete_graph(4), TRIANGLE)

    def test_c4_is_triangle_free(self):
        cyc = Graph(4, [(1, 2), (2, 3), (3, 4), (1, 4)])
        assert not oracle_contains(cyc, TRIANGLE)
        assert oracle_contains(cyc, C4)

    def test_shared_edge_has_no_k4(self):
        g = generate("shared-edge", {"n": 10, "t": 8})
        assert not oracle_contains(g, K4)

    def test_matches_census(self):
        for seed in range(40):
            g = generate("gnp", {"n": 16, "p": 0.12}, seed=seed)
            assert oracle_contains(g, TRIANGLE) == (census(g).t > 0)

    def test_pattern_larger_than_graph(self):
        assert not oracle_contains(Graph(2, [(1, 2)]), TRIANGLE)


class TestDegeneracyArboricity:
    def test_tree_degeneracy_one(self):
        assert degeneracy(generate("tree", {"n": 25}, seed=1)) == 1

    def test_k4_degeneracy(self):
        assert degeneracy(complete_graph(4)) == 3

    def test_star_degeneracy_one(self):
        assert degeneracy(generate("star", {"n": 16})) == 1

    def test_monotone_under_edge_addition(self):
        import numpy as np

        rng = np.random.default_rng(9)
        n = 14
        edges = []
        prev = 0
        all_pairs = list(combinations(range(1, n + 1), 2))
        rng.shuffle(all_pairs)
        for e in all_pairs[:40]:
            edges.append(tuple(int(x) for x in e))
            cur = degeneracy(Graph(n, edges))
            assert cur >= prev
            prev = cur

    def test_arboricity_examples(self):
        assert arboricity_exact(complete_graph(4)) == 2
        assert arboricity_exact(generate("tree", {"n": 10}, seed=0)) == 1
        with pytest.raises(ValueError):
            arboricity_exact(complete_graph(15))

    def test_degeneracy_brackets_arboricity(self):
        for seed in range(15):
            g = generate("gnp", {"n": 10, "p": 0.4}, seed=seed)
            a = arboricity_exact(g)
            d = degeneracy(g)
            if g.num_edges:
                assert a <= d <= 2 * a - 1


class TestEdgeListFormat:
    def test_parse_triangle(self):
        g = parse_edge_list("n 3\n1 2\n2 3\n1 3")
        assert g.num_edges == 3 and census(g).t == 1

    def test_round_trip(self):
        g = generate("gnp", {"n": 12, "p": 0.4}, seed=4)
        assert parse_edge_list(serialize_edge_list(g)) == g

    def test_self_loop_line_number(self):
        with pytest.raises(EdgeListError) as err:
            parse_edge_list("n 2\n1 1")
        assert err.value.line_no == 2

    def test_duplicate_edge(self):
        with pytest.raises(EdgeListError) as err:
            parse_edge_list("n 3\n1 2\n2 1")
        assert err.value.line_no == 3

    def test_bad_header(self):
        with pytest.raises(EdgeListError):
            parse_edge_list("vertices 3\n1 2")

    def test_out_of_range(self):
        with pytest.raises(EdgeListError) as err:
            parse_edge_list("n 3\n1 5")
        assert err.value.line_no == 2

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=1, max_value=15), st.integers(min_value=0, max_value=2 ** 31))
    def test_round_trip_random(self, n, seed):
        g = generate("gnp", {"n": n, "p": 0.5}, seed=seed)
        assert parse_edge_list(serialize_edge_list(g)) == g
