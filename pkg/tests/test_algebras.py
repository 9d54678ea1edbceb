from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from twcert.bits import BitReader, BitWriter
from twcert.decomposition import prepare
from twcert.graph import Graph, generate
from twcert.regular.algebras import ALGEBRAS, get_algebra
from twcert.regular.terminal import (
    GlueMatrix,
    TerminalGraph,
    base_expr,
    evaluate_class,
    evaluate_graph,
    glue,
    _fresh_names,
    decomposition_to_expression,
    identity_matrix,
    op_expr,
)

TRIANGLE_COLOURINGS = 6  # 3^3 assignments filtered by properness


def base(edges, t):
    return TerminalGraph(frozenset(range(t)), frozenset(edges), tuple(range(t)))


def test_triangle_class_size():
    alg = get_algebra("non-3-colorability")
    c = alg.base(3, [(0, 1), (0, 2), (1, 2)])
    assert int(alg.tensor(c).sum()) == TRIANGLE_COLOURINGS
    proper = sum(
        1 for a in itertools.product(range(3), repeat=3) if len(set(a)) == 3
    )
    assert proper == TRIANGLE_COLOURINGS


def test_single_and_k4_base():
    alg = get_algebra("non-3-colorability")
    assert int(alg.tensor(alg.base(1, [])).sum()) == 3
    k4 = alg.base(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])
    assert alg.accepting(k4)


def test_unknown_property():
    with pytest.raises(ValueError):
        get_algebra("hamiltonicity")


def random_terminal_graph(rng, t, extra):
    n = t + extra
    edges = frozenset((a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.4)
    return TerminalGraph(frozenset(range(n)), edges, tuple(rng.sample(range(n), t)))


def random_matrix(rng, t1, t2):
    """A random arity-2 matrix over operands with t1 and t2 terminals."""
    rows = []
    left = list(range(1, t1 + 1))
    right = list(range(1, t2 + 1))
    rng.shuffle(left)
    rng.shuffle(right)
    for m1 in left:
        if rng.random() < 0.7:
            rows.append((m1, right.pop() if right and rng.random() < 0.5 else 0))
    for m2 in right:
        if rng.random() < 0.5:
            rows.append((0, m2))
    if not rows:
        rows.append((1, 0))
    rng.shuffle(rows)
    return GlueMatrix(2, tuple(rows))


@settings(max_examples=60)
@given(st.sampled_from(sorted(ALGEBRAS)), st.integers(0, 10**6))
def test_compose_matches_direct(pid, seed):
    """h(f(G1, G2)) computed from classes equals the class of the glued graph."""
    rng = random.Random(seed)
    alg = get_algebra(pid)
    t1, t2 = rng.randint(1, 3), rng.randint(1, 3)
    g1 = random_terminal_graph(rng, t1, rng.randint(0, 2))
    g2 = random_terminal_graph(rng, t2, rng.randint(0, 2))
    f = random_matrix(rng, t1, t2)
    out = glue(f, g1, g2)
    # X on the glued graph, pulled back to the operands through the renaming
    X = frozenset(v for v in out.vertices if rng.random() < 0.4) if alg.takes_subset else frozenset()
    X1 = frozenset(v for v in g1.vertices if v in X)
    shifted = _g2_names(f, g1, g2)
    X2 = frozenset(v for v in g2.vertices if shifted[v] in X)
    got = alg.compose(f, alg.direct(g1, X1), alg.direct(g2, X2))
    assert got == alg.direct(out, X)


def _g2_names(f, g1, g2):
    """Name each g2 vertex receives in glue(f, g1, g2)."""
    out = glue(f, g1, g2)
    probe = {}
    used = set(g1.vertices)
    glued = {g2.terminals[m2 - 1]: g1.terminals[m1 - 1] for m1, m2 in f.rows if m1 and m2}
    fresh = _fresh_names(used | set(g2.vertices))
    for v in sorted(g2.vertices, key=repr):
        if v in glued:
            probe[v] = glued[v]
            continue
        probe[v] = v if v not in used else next(fresh)
        used.add(probe[v])
    assert set(probe.values()) <= out.vertices
    return probe


@settings(max_examples=30)
@given(st.sampled_from(sorted(ALGEBRAS)), st.integers(0, 10**6))
def test_arity_one_matches_direct(pid, seed):
    rng = random.Random(seed)
    alg = get_algebra(pid)
    t = rng.randint(1, 4)
    g1 = random_terminal_graph(rng, t, rng.randint(0, 2))
    keep = rng.sample(range(1, t + 1), rng.randint(1, t))
    f = GlueMatrix(1, tuple((m,) for m in keep))
    X = frozenset(v for v in g1.vertices if rng.random() < 0.4) if alg.takes_subset else frozenset()
    assert alg.compose(f, alg.direct(g1, X)) == alg.direct(glue(f, g1), X)


@settings(max_examples=20)
@given(st.sampled_from(sorted(ALGEBRAS)), st.integers(2, 25), st.integers(0, 10**6))
def test_expression_class_equals_direct(pid, n, seed):
    rng = random.Random(seed)
    alg = get_algebra(pid)
    g, w = generate("partial-k-tree", {"n": n, "k": 2}, seed)
    td, dm = prepare(g, 2, w)
    X = frozenset(v for v in g.vertices if rng.random() < 0.3) if alg.takes_subset else frozenset()
    root, _ = decomposition_to_expression(td, g, dm, X)
    assert evaluate_class(root, alg) == alg.direct(evaluate_graph(root), X)


@pytest.mark.parametrize("pid", sorted(ALGEBRAS))
def test_class_codec_roundtrip(pid):
    alg = get_algebra(pid)
    for t in (0, 1, 2):
        for c in alg.universe(t):
            w = BitWriter()
            alg.write(w, c)
            r = BitReader(w.to_bytes())
            assert alg.read(r, t) == c


@pytest.mark.parametrize("pid", ["independent-set", "dominating-set"])
def test_term_is_x_on_terminals(pid):
    alg = get_algebra(pid)
    rng = random.Random(1)
    for _ in range(50):
        tg = random_terminal_graph(rng, 3, 2)
        X = frozenset(v for v in tg.vertices if rng.random() < 0.5)
        mask = alg.term(alg.direct(tg, X))
        assert {tg.terminals[r] for r in range(3) if (mask >> r) & 1} == X & set(tg.terminals)


def test_identity_fold_keeps_terminals():
    alg = get_algebra("dominating-set")
    tg = base([(0, 1)], 2)
    e = base_expr(tg, {0})
    both = op_expr(identity_matrix(2), e, e)
    assert evaluate_class(both, alg) == alg.direct(tg, {0})
    assert alg.accepting(evaluate_class(both, alg))
