from __future__ import annotations

import dataclasses
import random

import pytest
from hypothesis import given, settings, strategies as st

from twcert.bits import id_width_for
from twcert.decomposition import prepare
from twcert.graph import Graph, generate
from twcert.oracle import check_opt_runs, connected_graphs
from twcert.opt import (
    build_opt,
    opt_extraction_oracle,
    prove_opt,
    run_opt,
    solution_of,
    spanning_tree,
    with_solution,
)
from twcert.regular.algebras import get_algebra
from twcert.regular.dp import brute_force_optimum, dp_argmax, dp_optimum
from twcert.tw import Main, TwCert

IS = "independent-set"
P4_MIS = 2  # brute force over the 16 subsets of P4


def path(n):
    return Graph.from_edges(range(n), [(i, i + 1) for i in range(n - 1)])


def root_vertex(g, k):
    td, _ = prepare(g, k)
    return min(td.fresh[td.root])


def test_p4_optimal_accepts():
    g = with_solution(path(4), {1, 3})
    assert brute_force_optimum(IS, g)[0] == P4_MIS
    certs = prove_opt(g, 1, IS)
    assert run_opt(g, certs, 1, IS).global_accept
    assert opt_extraction_oracle(g, certs, 1, IS) == []


def test_p4_single_vertex_rejected_at_root():
    g = with_solution(path(4), {1})
    v = run_opt(g, prove_opt(g, 1, IS), 1, IS)
    assert "OPT-max" in v.per_vertex[root_vertex(g, 1)]


def test_p4_adjacent_pair_rejected():
    g = with_solution(path(4), {1, 2})
    v = run_opt(g, prove_opt(g, 1, IS), 1, IS)
    assert not v.global_accept and "OPT-accept" in v.causes()


def test_solution_labels():
    g = with_solution(path(5), {0, 4})
    assert solution_of(g) == {0, 4}
    with pytest.raises(ValueError):
        with_solution(path(3), {9})


def test_spanning_tree_weights():
    g = path(5).with_weights({i: i + 1 for i in range(5)})
    span = spanning_tree(g, 0, {1, 3})
    assert span[0].parent is None and span[0].dist == 0
    assert span[0].weight_x == 2 + 4
    assert span[4].weight_x == 0 and span[3].weight_x == 4


def test_hundred_vertex_instance_reaches_dp_optimum():
    g, w = generate("partial-k-tree", {"n": 100, "k": 2}, 5)
    alg = get_algebra(IS)
    td, _ = prepare(g, 2, w)
    best, X = dp_argmax(alg, td, g)
    assert best == dp_optimum(alg, td, g)
    g = with_solution(g, X)
    certs = prove_opt(g, 2, IS, witness=w)
    assert run_opt(g, certs, 2, IS).global_accept
    assert opt_extraction_oracle(g, certs, 2, IS) == []


def _opt_instance():
    g, w = generate("partial-k-tree", {"n": 25, "k": 2}, 11)
    td, _ = prepare(g, 2, w)
    _, X = dp_argmax(get_algebra(IS), td, g)
    g = with_solution(g, X)
    proof = build_opt(g, 2, IS, witness=w)
    return g, proof


def test_inflated_table_entry_rejected():
    g, proof = _opt_instance()
    width = id_width_for(max(g.adj))
    certs = proof.encoded()
    v = next(u for u, c in proof.certs.items() if c.main.ext.table_v)
    c = proof.certs[v]
    ext = c.main.ext
    (cls, val), *rest = ext.table_v
    ext2 = dataclasses.replace(ext, table_v=((cls, val + 1), *rest))
    bad = dict(certs)
    bad[v] = proof.codec.encode(TwCert(Main(c.main.d, c.main.levels, ext2), c.aux), width)
    verdict = run_opt(g, bad, 2, IS)
    assert "OPT-mw" in verdict.per_vertex[v]


def test_decremented_root_weight_rejected():
    g, proof = _opt_instance()
    width = id_width_for(max(g.adj))
    certs = proof.encoded()
    vr = min(proof.td.fresh[proof.td.root])
    c = proof.certs[vr]
    ext = c.main.ext
    span = dataclasses.replace(ext.span, weight_x=ext.span.weight_x - 1)
    bad = dict(certs)
    bad[vr] = proof.codec.encode(
        TwCert(Main(c.main.d, c.main.levels, dataclasses.replace(ext, span=span)), c.aux), width
    )
    verdict = run_opt(g, bad, 2, IS)
    hit = {vr} | set(g.adj[vr])
    assert set(verdict.rejecting()) & hit
    assert {"OPT-sum", "OPT-root-weight"} & set(verdict.per_vertex[vr])


@pytest.mark.parametrize("pid", [IS, "dominating-set"])
def test_small_graph_runs(pid):
    rep = check_opt_runs(connected_graphs(5)[:40], pid, seed=3)
    assert rep.ok, rep.failures[:3]


@settings(max_examples=15)
@given(st.sampled_from([IS, "dominating-set"]), st.integers(1, 12), st.integers(0, 10**6))
def test_weighted_completeness(pid, n, seed):
    rng = random.Random(seed)
    g, w = generate("partial-k-tree", {"n": n, "k": 2}, seed)
    g = g.with_weights({v: rng.randint(-5, 5) for v in g.adj})
    best, X = brute_force_optimum(pid, g)
    g = with_solution(g, X)
    certs = prove_opt(g, 2, pid, witness=w)
    assert run_opt(g, certs, 2, pid).global_accept
    assert opt_extraction_oracle(g, certs, 2, pid) == []
