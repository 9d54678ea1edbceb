from __future__ import annotations

import dataclasses
import random

import pytest
from hypothesis import given, settings, strategies as st

from twcert.bits import id_width_for
from twcert.decomposition import TwExceeded, exact_treewidth, verify_decomposition
from twcert.graph import Graph, generate
from twcert.oracle import connected_graphs
from twcert.tw import (
    TW,
    Main,
    TwCert,
    build_tw,
    certificate_bits,
    check_claims,
    decode_claimed_decomposition,
    depth_bound,
    prove_tw,
    run_tw,
)


def encode(cert, g):
    return TW.encode(cert, id_width_for(max(g.adj)))


def test_tree_completeness_and_bag_size():
    g, _ = generate("random-connected", {"n": 100, "p": 0.0}, 1)
    certs = prove_tw(g, 1)
    assert run_tw(g, certs, 1).global_accept
    for c in certs.values():
        assert all(len(l.bag) <= 5 for l in TW.decode(c).main.levels)


def test_clique_exceeds():
    g, _ = generate("clique", {"m": 7})
    with pytest.raises(TwExceeded):
        prove_tw(g, 1)


def test_single_vertex():
    g = Graph.from_edges([42], [])
    certs = prove_tw(g, 1)
    cert = TW.decode(certs[42])
    assert cert.main.d == 1 and cert.main.at(1).bag == (42,)
    assert run_tw(g, certs, 1).global_accept
    td = decode_claimed_decomposition(certs)
    assert list(td.bags.values()) == [frozenset({42})]
    assert certificate_bits(certs).max < 256


def test_partial_2_tree_completeness():
    g, w = generate("partial-k-tree", {"n": 100, "k": 2}, 0)
    certs = prove_tw(g, 2, w)
    assert run_tw(g, certs, 2).global_accept
    assert check_claims(g, certs, 2) == []
    td = decode_claimed_decomposition(certs)
    rep = verify_decomposition(td, g, width=8, depth=depth_bound(g.n), coherent=True)
    assert rep.ok, rep.violations


def test_decoded_equals_prover_decomposition():
    g, w = generate("partial-k-tree", {"n": 60, "k": 2}, 3)
    proof = build_tw(g, 2, w)
    td = decode_claimed_decomposition(proof.encoded())
    honest = proof.td
    assert set(td.bags) == {honest.node_id(i) for i in honest.bags}
    for i, p in honest.parent.items():
        want = None if p is None else honest.node_id(p)
        assert td.parent[honest.node_id(i)] == want


def test_empty_certificates_decode_reject():
    g, _ = generate("clique", {"m": 3})
    v = run_tw(g, {u: b"" for u in g.adj}, 1)
    assert all("DECODE" in c for c in v.per_vertex.values())


@pytest.mark.parametrize("seed", range(5))
def test_depth_increment_rejected(seed):
    g, w = generate("partial-k-tree", {"n": 40, "k": 2}, seed)
    certs = prove_tw(g, 2, w)
    v = random.Random(seed).choice(g.vertices)
    c = TW.decode(certs[v])
    m = c.main
    bad = dict(certs)
    bad[v] = encode(TwCert(Main(m.d + 1, m.levels + (m.levels[-1],)), c.aux), g)
    verdict = run_tw(g, bad, 2)
    hit = {v} | set(g.adj[v])
    assert set(verdict.rejecting()) & hit


def test_edge_list_tamper_detected():
    g, w = generate("partial-k-tree", {"n": 30, "k": 2}, 8)
    certs = prove_tw(g, 2, w)
    v = g.vertices[0]
    c = TW.decode(certs[v])
    m = c.main
    own = m.at(m.d)
    extra = tuple(
        (a, b) for a in own.bag for b in own.bag if a < b and (a, b) not in own.edges
    )
    if own.edges:
        edges = own.edges - {min(own.edges)}
    else:
        edges = own.edges | {extra[0]}
    lvl = dataclasses.replace(own, edges=frozenset(edges))
    bad = dict(certs)
    bad[v] = encode(TwCert(Main(m.d, m.levels[:-1] + (lvl,)), c.aux), g)
    assert not run_tw(g, bad, 2).global_accept


def test_every_small_graph_certifies_at_its_treewidth():
    for g in connected_graphs(5):
        k = max(1, exact_treewidth(g))
        certs = prove_tw(g, k)
        assert run_tw(g, certs, k).global_accept
        assert check_claims(g, certs, k) == []


@settings(max_examples=20)
@given(st.integers(1, 3), st.integers(1, 120), st.integers(0, 10**6))
def test_completeness_property(k, n, seed):
    g, w = generate("partial-k-tree", {"n": n, "k": k}, seed)
    certs = prove_tw(g, k, w)
    assert run_tw(g, certs, k).global_accept
    assert check_claims(g, certs, k) == []
    rep = certificate_bits(certs)
    assert rep.max >= rep.mean > 0


def test_verifier_is_deterministic():
    g, w = generate("partial-k-tree", {"n": 50, "k": 2}, 4)
    certs = prove_tw(g, 2, w)
    assert run_tw(g, certs, 2).per_vertex == run_tw(g, certs, 2).per_vertex


def test_wide_certificates_rejected_at_small_k():
    g, _ = generate("clique", {"m": 8})
    certs = prove_tw(g, 7)
    v = run_tw(g, certs, 1)
    assert not v.global_accept
    assert "C1" in v.causes()
