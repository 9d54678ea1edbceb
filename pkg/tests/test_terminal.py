from __future__ import annotations

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from twcert.decomposition import from_bags, prepare
from twcert.graph import Graph, generate
from twcert.regular.terminal import (
    GlueError,
    GlueMatrix,
    TerminalGraph,
    decomposition_to_expression,
    evaluate_graph,
    glue,
    identity_matrix,
    plus_matrix,
)

EXAMPLE_EDGES = [(1, 2), (1, 3), (2, 5), (3, 4), (4, 5), (3, 6)]


def edge(a, b):
    return TerminalGraph(frozenset({a, b}), frozenset({(min(a, b), max(a, b))}), (a, b))


def as_nx(tg):
    h = nx.Graph()
    h.add_nodes_from(tg.vertices)
    h.add_edges_from(tg.edges)
    return h


def test_arity_one_identity():
    tg = edge(1, 2)
    assert glue(GlueMatrix(1, ((1,), (2,))), tg) == tg


def test_glue_two_edges_into_path():
    # terminal 2 of the first edge is identified with terminal 1 of the second
    f = GlueMatrix(2, ((1, 0), (2, 1), (0, 2)))
    out = glue(f, edge(10, 20), edge(30, 40))
    assert len(out.vertices) == 3
    assert out.edges == {(10, 20), (20, 40)}
    assert out.terminals == (10, 20, 40)


def test_matrix_errors():
    with pytest.raises(GlueError):
        GlueMatrix(2, ((1, 1), (1, 2)))
    with pytest.raises(GlueError):
        GlueMatrix(2, ((0, 0),))
    with pytest.raises(GlueError):
        glue(GlueMatrix(2, ((3, 1),)), edge(1, 2), edge(3, 4))
    with pytest.raises(GlueError):
        glue(identity_matrix(2), edge(1, 2))


def test_plus_matrix_rows_follow_parent_bag():
    m = plus_matrix((2, 4, 5), (1, 2, 4))
    assert m.rows == ((0, 1), (1, 2), (2, 3))


def test_example_expression_reconstructs_graph():
    g = Graph.from_edges(range(1, 7), EXAMPLE_EDGES)
    td = from_bags([{1, 2, 4}, {1, 3, 4}, {2, 4, 5}, {3, 6}], [(0, 1), (0, 2), (1, 3)])
    root, nodes = decomposition_to_expression(td, g)
    out = evaluate_graph(root)
    assert out.terminals == (1, 2, 4)
    assert nx.is_isomorphic(as_nx(out), nx.Graph(EXAMPLE_EDGES))
    assert out.edges == {tuple(sorted(e)) for e in EXAMPLE_EDGES}
    # per-node intermediates: G_i^b is the induced bag, G_i the subtree
    leaf = evaluate_graph(nodes[3].full)
    assert leaf.vertices == {3, 6} and leaf.terminals == (3, 6)
    mid = evaluate_graph(nodes[1].full)
    assert mid.vertices == {1, 3, 4, 6}
    plus = evaluate_graph(nodes[2].plus)
    assert plus.terminals == (1, 2, 4) and plus.vertices == {1, 2, 4, 5}


def test_single_bag_is_base():
    g = Graph.from_edges([1, 2], [(1, 2)])
    root, _ = decomposition_to_expression(from_bags([{1, 2}], []), g)
    assert root.base is not None


@settings(max_examples=25)
@given(st.integers(1, 60), st.integers(0, 10**6), st.booleans())
def test_expression_reproduces_graph(n, seed, decorated):
    g, w = generate("partial-k-tree", {"n": n, "k": 2}, seed)
    td, dm = prepare(g, 2, w)
    root, _ = decomposition_to_expression(td, g, dm if decorated else None)
    out = evaluate_graph(root)
    assert out.vertices == set(g.vertices)
    assert out.edges == {tuple(sorted(e)) for e in g.edges()}
    assert out.terminals == td.node_id(td.root)
