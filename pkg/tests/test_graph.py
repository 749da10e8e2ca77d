import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elicit.linalg import mpq
from elicit.graph import (
    GF2Basis,
    build_graph,
    changed_factors,
    cycle_edges,
    graph_from_edges,
    horton_mcb,
    is_adjacent,
    longest_cycle,
    minimum_cycle_basis,
    orient,
    structured_mcb,
    to_dot,
)
from elicit.model import Task, product_task, task_optimal_actions

from conftest import mcq, random_task


def complete(n):
    vs = [f"v{i}" for i in range(n)]
    return graph_from_edges(vs, itertools.combinations(vs, 2))


def nx_graph(g):
    G = nx.Graph()
    G.add_nodes_from(g.vertices)
    G.add_edges_from(g.edges)
    return G


@st.composite
def random_graphs(draw, max_n=8):
    n = draw(st.integers(2, max_n))
    vs = [f"v{i}" for i in range(n)]
    pairs = list(itertools.combinations(vs, 2))
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return graph_from_edges(vs, [p for p, k in zip(pairs, keep) if k])


def gf2_independent(g, cycles):
    idx = {e: k for k, e in enumerate(g.edges)}
    basis = GF2Basis()
    for c in cycles:
        mask = 0
        for s, t in cycle_edges(c):
            mask ^= 1 << idx[orient(s, t)]
        if not basis.add(mask):
            return False
    return True


class TestAdjacency:
    def test_two_actions(self):
        t = Task.from_rows(["x", "y"], ["a", "b"], [[1, 0], [0, 1]])
        w = is_adjacent(t, "a", "b")
        assert w is not None and w.gap > 0

    def test_dominated_pair(self):
        t = Task.from_rows(["x", "y"], ["a", "b", "c"], [[1, 0], [0, 1], [mpq(1, 3), mpq(1, 3)]])
        assert is_adjacent(t, "a", "c") is None
        assert is_adjacent(t, "a", "b") is not None

    def test_self(self, mcq3):
        with pytest.raises(ValueError):
            is_adjacent(mcq3, "0", "0")

    def test_witnesses_exact(self, rng):
        for _ in range(5):
            t = random_task(rng, 5, 4)
            g = build_graph(t)
            for (a, b), w in g.witnesses.items():
                assert task_optimal_actions(t, w.p) == {a, b}
                assert w.gap > 0

    def test_symmetric(self, rng):
        t = random_task(rng, 4, 3)
        for a, b in itertools.permutations(t.actions, 2):
            assert (is_adjacent(t, a, b) is None) == (is_adjacent(t, b, a) is None)

    def test_float_backend_agrees(self, rng):
        t = random_task(rng, 5, 4)
        assert build_graph(t).edges == build_graph(t.with_backend(False)).edges


class TestStructure:
    def test_quadratic_guess_is_path(self):
        vals = [0, 1, 2, 3, 4]
        t = Task.from_function(vals, vals, lambda a, s: -(a - s) ** 2)
        g = build_graph(t)
        assert g.is_tree()
        assert set(g.edges) == {("0", "1"), ("1", "2"), ("2", "3"), ("3", "4")}
        assert g.mcb == ()

    def test_safe_option(self, t4):
        g = build_graph(t4)
        assert set(g.edges) == {("a1", "a2"), ("a1", "o"), ("a2", "o"), ("b1", "b2"), ("b1", "o"), ("b2", "o")}
        assert sorted(map(sorted, g.block_vertices())) == [["a1", "a2", "o"], ["b1", "b2", "o"]]
        assert g.cut_vertices == ("o",)
        assert sorted(len(c) for c in g.mcb) == [3, 3]
        assert {frozenset(c) for c in g.mcb} == {frozenset({"a1", "a2", "o"}), frozenset({"b1", "b2", "o"})}

    def test_mcq4_complete(self):
        g = build_graph(mcq(4))
        assert g.is_complete() and len(g.blocks) == 1 and g.cut_vertices == ()
        assert len(g.mcb) == 3 and all(len(c) == 3 for c in g.mcb)

    def test_two_mcq_product_is_square(self):
        t = product_task([mcq(2), mcq(2)])
        g = build_graph(t)
        assert len(g.edges) == 4 and len(g.mcb) == 1 and len(g.mcb[0]) == 4
        for a, b in g.edges:
            assert len(changed_factors(t, a, b)) == 1

    def test_incidence_columns(self, t4):
        A = build_graph(t4).incidence
        assert all(sorted(col) == [-1] + [0] * (A.shape[0] - 2) + [1] for col in A.T)

    def test_dot(self, t4):
        dot = to_dot(build_graph(t4))
        assert dot.startswith('graph "adjacency" {')
        assert '"o" [shape=box' in dot and dot.count(" -- ") == 6


class TestMCB:
    def test_tree_empty(self):
        g = graph_from_edges(list("abcd"), [("a", "b"), ("b", "c"), ("b", "d")])
        assert g.mcb == () and g.is_tree()

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_complete_triangles(self, n):
        g = complete(n)
        assert len(g.mcb) == (n - 1) * (n - 2) // 2
        assert all(len(c) == 3 for c in g.mcb)

    def test_k5_total_length(self):
        mcb = minimum_cycle_basis(complete(5))
        assert len(mcb) == 6 and sum(map(len, mcb)) == 18

    def test_horton_direct(self):
        vs = list("abcdef")
        edges = [("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "f"), ("f", "a"), ("a", "d")]
        assert sorted(len(c) for c in horton_mcb(vs, edges)) == [4, 4]

    @given(random_graphs())
    def test_against_networkx(self, g):
        G = nx_graph(g)
        assert len(g.mcb) == g.cycle_space_dim() == G.number_of_edges() - G.number_of_nodes() + nx.number_connected_components(G)
        assert sum(map(len, g.mcb)) == sum(map(len, nx.minimum_cycle_basis(G)))
        A = g.incidence
        for c in g.mcb:
            assert not np.any(A @ g.cycle_vector(c))
        assert gf2_independent(g, g.mcb)

    @given(random_graphs())
    def test_blocks_against_networkx(self, g):
        G = nx_graph(g)
        ours = {frozenset(map(frozenset, blk)) for blk in g.blocks}
        theirs = {frozenset(frozenset(e) for e in comp) for comp in nx.biconnected_component_edges(G)}
        assert ours == theirs
        assert set(g.cut_vertices) == set(nx.articulation_points(G))
        edges = [e for blk in g.blocks for e in blk]
        assert len(edges) == len(set(edges)) == len(g.edges)

    @given(random_graphs(max_n=7))
    def test_cut_vertex_removal(self, g):
        G = nx_graph(g)
        for v in g.vertices:
            H = G.copy()
            H.remove_node(v)
            more = nx.number_connected_components(H) > nx.number_connected_components(G)
            isolated = G.degree(v) == 0
            assert more == (v in g.cut_vertices) or isolated

    def test_blockwise_union_safe_option(self, t4):
        g = build_graph(t4)
        per_block = []
        for blk in g.blocks:
            vs = [v for v in g.vertices if any(v in e for e in blk)]
            per_block.extend(horton_mcb(vs, blk))
        assert {frozenset(c) for c in per_block} == {frozenset(c) for c in g.mcb}


class TestProductMCB:
    def test_single_factor_requires_product(self, mcq3):
        with pytest.raises(ValueError):
            structured_mcb(mcq3)

    def test_k2_k2(self):
        t = product_task([mcq(2), mcq(2)])
        mcb = structured_mcb(t)
        assert len(mcb) == 1 and len(mcb[0]) == 4

    def test_k3_k2_dimension(self):
        t = product_task([mcq(3), mcq(2)])
        g = build_graph(t)
        mcb = structured_mcb(t)
        assert len(g.edges) == 9 and len(mcb) == len(g.edges) - len(g.vertices) + 1 == 4
        assert gf2_independent(g, mcb)
        assert sum(map(len, mcb)) == sum(map(len, g.mcb))

    def test_k4_k4_longest(self):
        f = mcq(4)
        gf = build_graph(f)
        t = product_task([f, f])
        mcb = structured_mcb(t, [gf, gf])
        assert longest_cycle(mcb) == max(4, longest_cycle(gf.mcb), longest_cycle(gf.mcb)) == 4
        vs = list(t.actions)
        edges = [(a, b) for a, b in itertools.combinations(vs, 2) if len(changed_factors(t, a, b)) == 1]
        g = graph_from_edges(vs, edges)
        assert len(mcb) == g.cycle_space_dim()
        assert gf2_independent(g, mcb)
        assert longest_cycle(g.mcb) == 4
        assert sum(map(len, mcb)) == sum(map(len, g.mcb))
