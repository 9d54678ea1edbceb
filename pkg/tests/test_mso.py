from __future__ import annotations

import random

import pytest

from twcert.bits import id_width_for
from twcert.decomposition import prepare
from twcert.graph import Graph, generate
from twcert.mso import build_mso, mso_codec, mso_extraction_oracle, prove_mso, run_mso
from twcert.oracle import check_protocol_small, connected_graphs
from twcert.regular.algebras import get_algebra
from twcert.regular.dp import brute_force_property, dp_evaluate
from twcert.tw import Main, TwCert

N3C = "non-3-colorability"


def cycle(n):
    return Graph.from_edges(range(n), [(i, (i + 1) % n) for i in range(n)])


def root_fresh(certs, pid):
    codec = mso_codec(pid)
    return [v for v, c in certs.items() if codec.decode(c).main.d == 1]


def test_k4_accepts():
    g, _ = generate("clique", {"m": 4})
    certs = prove_mso(g, 3, N3C)
    assert run_mso(g, certs, 3, N3C).global_accept
    assert mso_extraction_oracle(g, certs, 3, N3C) == []


def test_c5_rejected_at_root():
    g = cycle(5)
    certs = prove_mso(g, 2, N3C)
    v = run_mso(g, certs, 2, N3C)
    roots = root_fresh(certs, N3C)
    assert roots and all("MSO-c" in v.per_vertex[r] for r in roots)
    assert set(v.rejecting()) == set(roots)


def test_tree_is_bipartite():
    g, _ = generate("random-connected", {"n": 30, "p": 0.0}, 2)
    certs = prove_mso(g, 1, "non-2-colorability")
    v = run_mso(g, certs, 1, "non-2-colorability")
    assert not v.global_accept and set(v.causes()) == {"MSO-c"}


def test_subset_property_refused():
    g = cycle(4)
    with pytest.raises(ValueError):
        prove_mso(g, 2, "independent-set")


def partial_3_trees(count, seed, want_accept):
    rng = random.Random(seed)
    out = []
    t = 0
    while len(out) < count:
        t += 1
        g, w = generate("partial-k-tree", {"n": rng.randint(5, 30), "k": 3, "keep": 0.8}, seed * 10_000 + t)
        if brute_force_property(N3C, g) == want_accept:
            out.append((g, w))
    return out


def test_non_3_colourable_partial_3_trees_accept():
    for g, w in partial_3_trees(40, 1, True):
        certs = prove_mso(g, 3, N3C, w)
        assert run_mso(g, certs, 3, N3C).global_accept
        assert mso_extraction_oracle(g, certs, 3, N3C) == []


def test_3_colourable_rejected_and_dp_agrees():
    alg = get_algebra(N3C)
    for g, w in partial_3_trees(20, 2, False):
        certs = prove_mso(g, 3, N3C, w)
        assert "MSO-c" in run_mso(g, certs, 3, N3C).causes()
        td, dm = prepare(g, 3, w)
        assert not alg.accepting(dp_evaluate(alg, td, g, dm=dm))


def test_replaced_charge_class_rejected():
    (g, w), = partial_3_trees(1, 3, True)
    proof = build_mso(g, 3, N3C, w)
    codec = proof.codec
    alg = codec.alg
    width = id_width_for(max(g.adj))
    certs = proof.encoded()
    v = max(g.adj, key=lambda u: len(proof.certs[u].main.at(proof.certs[u].main.d).bag))
    c = proof.certs[v]
    cg, cv = c.main.ext
    other = _flip(alg, cv)
    bad = dict(certs)
    bad[v] = codec.encode(TwCert(Main(c.main.d, c.main.levels, (cg, other)), c.aux), width)
    verdict = run_mso(g, bad, 3, N3C)
    assert "MSO-a" in verdict.per_vertex[v]


def _flip(alg, c):
    t = alg.tensor(c).copy()
    t.flat[0] = not t.flat[0]
    return alg._pack(t, c[0])


def test_small_graph_battery():
    graphs = connected_graphs(5)
    for pid in (N3C, "non-2-colorability"):
        rep = check_protocol_small("mso", pid, graphs)
        assert rep.ok, rep.failures[:3]
