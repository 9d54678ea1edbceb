from __future__ import annotations

import json

import pytest

from twcert.decomposition import prepare
from twcert.fuzz import CATALOGUE_VERSION, KINDS, fuzz, locality_trials
from twcert.graph import generate
from twcert.local import run_round
from twcert.opt import with_solution
from twcert.protocols import get_protocol
from twcert.regular.dp import dp_argmax


def tw_instance(n=64, seed=0):
    g, w = generate("partial-k-tree", {"n": n, "k": 2}, seed)
    proto = get_protocol("tw", 2)
    return g, proto, proto.prove(g, w), [get_protocol("tw", 3).prove(g)]


def test_zero_trials_empty_report():
    g, proto, certs, _ = tw_instance(20)
    rep = fuzz(g, certs, proto, 0)
    assert rep.trials == 0 and rep.mutations == [] and rep.escapes == [] and rep.ok
    doc = json.loads(rep.dumps())
    assert doc["catalogue_version"] == CATALOGUE_VERSION


def test_tw_thousand_trials_no_failed_escape():
    g, proto, certs, alts = tw_instance()
    rep = fuzz(g, certs, proto, 1000, seed=1, alternatives=alts)
    assert rep.ok, rep.failed_escapes[:3]
    assert set(rep.kind_counts()) <= set(KINDS)
    assert len(rep.mutations) + rep.skipped + rep.noops == 1000
    rejected = sum(m.verdict.startswith("reject") for m in rep.mutations)
    assert rejected > 0.5 * len(rep.mutations)


def test_far_swap_rejects_or_valid():
    g, proto, certs, _ = tw_instance(40, 2)
    rep = fuzz(g, certs, proto, 200, seed=2, kinds=("neighbor-swap",))
    assert rep.ok


def test_fuzz_is_deterministic():
    g, proto, certs, alts = tw_instance(30, 3)
    a = fuzz(g, certs, proto, 100, seed=5, alternatives=alts).to_json()
    b = fuzz(g, certs, proto, 100, seed=5, alternatives=alts).to_json()
    assert a == b


@pytest.mark.parametrize("name,pid", [("mso", "non-3-colorability"), ("opt", "independent-set"), ("opt", "dominating-set")])
def test_extension_protocols(name, pid):
    if name == "mso":
        g, w = generate("clique", {"m": 4})
        w = None
        k = 3
    else:
        g, w = generate("partial-k-tree", {"n": 20, "k": 2}, 4)
        k = 2
        td, _ = prepare(g, k, w)
        _, X = dp_argmax(get_protocol(name, k, pid).alg, td, g)
        g = with_solution(g, X)
    proto = get_protocol(name, k, pid)
    certs = proto.prove(g, w)
    assert proto.run(g, certs).global_accept
    rep = fuzz(g, certs, proto, 300, seed=6)
    assert rep.ok, rep.failed_escapes[:3]
    assert "class" in rep.kind_counts()


def test_locality():
    g, proto, certs, _ = tw_instance(40, 7)
    assert locality_trials(g, certs, proto.verifier, 100, seed=1) == []
    base = run_round(g, certs, proto.verifier)
    assert base.global_accept
