from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from twcert.decomposition import verify_decomposition
from twcert.graph import (
    Graph,
    GraphError,
    components,
    generate,
    graph_from_json,
    graph_to_json,
    is_connected,
    load_graph,
    neighbors,
    parse_edge_list,
    save_graph,
    validate_graph,
)


def test_single_vertex_is_valid():
    rep = validate_graph(Graph.from_edges([7], []))
    assert rep.ok


def test_two_isolated_vertices_not_connected():
    rep = validate_graph(Graph.from_edges([1, 2], []))
    assert not rep.ok
    assert not is_connected(Graph.from_edges([1, 2], []))


def test_self_loop_rejected():
    with pytest.raises(GraphError):
        graph_from_json({"vertices": [1], "edges": [[1, 1]]})
    with pytest.raises(GraphError):
        parse_edge_list("3 3\n")


def test_clique_k5():
    g, w = generate("clique", {"m": 5}, 0)
    assert g.n == 5 and g.m == 10 and w is None


def test_grid_3x3():
    g, _ = generate("grid", {"rows": 3, "cols": 3}, 0)
    assert g.n == 9 and g.m == 12


def test_neighbors_triangle_and_path():
    g = Graph.from_edges([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
    assert neighbors(g, 1) == {2, 3}
    p = Graph.from_edges([1, 2, 3], [(1, 2), (2, 3)])
    assert neighbors(p, 2) == {1, 3}
    with pytest.raises(Exception):
        neighbors(p, 99)


def test_partial_k_tree_witness():
    g, w = generate("partial-k-tree", {"n": 100, "k": 2}, 7)
    assert g.n == 100 and is_connected(g)
    rep = verify_decomposition(w, g, width=2)
    assert rep.ok, rep.violations


def test_ids_are_not_one_to_n():
    g, _ = generate("path", {"m": 50}, 1)
    assert set(g.vertices) != set(range(1, 51))
    assert all(0 <= v < 50**3 for v in g.vertices)


@given(
    kind=st.sampled_from(["partial-k-tree", "random-connected", "cycle", "path"]),
    n=st.integers(3, 40),
    seed=st.integers(0, 10**6),
)
def test_generate_reproducible_and_connected(kind, n, seed):
    params = {"n": n, "k": 2, "m": n}
    g1, _ = generate(kind, params, seed)
    g2, _ = generate(kind, params, seed)
    assert sorted(g1.edges()) == sorted(g2.edges())
    assert validate_graph(g1).ok


@given(k=st.integers(1, 4), n=st.integers(1, 60), seed=st.integers(0, 10**6))
def test_partial_k_tree_witness_property(k, n, seed):
    g, w = generate("partial-k-tree", {"n": n, "k": k}, seed)
    assert verify_decomposition(w, g, width=k).ok


def test_json_roundtrip(tmp_path):
    g = Graph.from_edges([5, 9, 11], [(5, 9), (9, 11)], {9: b"\x01"}, {5: -3})
    doc = json.loads(json.dumps(graph_to_json(g)))
    h = graph_from_json(doc)
    assert sorted(h.edges()) == sorted(g.edges())
    assert h.label(9) == b"\x01" and h.weight(5) == -3 and h.weight(9) == 1
    save_graph(g, tmp_path / "g.json")
    assert sorted(load_graph(tmp_path / "g.json").edges()) == sorted(g.edges())


def test_edge_list(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# comment\n1 2\n2 3\n7\n")
    g = load_graph(p)
    assert g.n == 4 and g.m == 2
    assert len(components(g)) == 2
