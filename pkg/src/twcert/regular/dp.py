"""Sequential dynamic programming over decompositions, MaxWeight tables and brute-force oracles."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping

from ..graph import Graph
from .algebras import Algebra, get_algebra
from .terminal import GlueMatrix, decomposition_to_expression, evaluate_class, identity_matrix


class OracleTooLarge(ValueError):
    pass


def dp_evaluate(alg: Algebra, td, g: Graph, X=frozenset(), dm=None):
    """Class of (G, X) with the root bag as terminals, computed bottom-up."""
    root, _ = decomposition_to_expression(td, g, dm, frozenset(X))
    return evaluate_class(root, alg)


def dp_holds(alg: Algebra, td, g: Graph, X=frozenset()) -> bool:
    return alg.accepting(dp_evaluate(alg, td, g, X))


# -- brute force ----------------------------------------------------------------


def _colorable(g: Graph, q: int) -> bool:
    order = sorted(g.adj, key=lambda v: -len(g.adj[v]))
    col: dict = {}

    def rec(i):
        if i == len(order):
            return True
        v = order[i]
        for c in range(q):
            if all(col.get(u) != c for u in g.adj[v]):
                col[v] = c
                if rec(i + 1):
                    return True
                del col[v]
        return False

    return rec(0)


def brute_force_property(pid: str, g: Graph, X=frozenset()) -> bool:
    """Evaluate the property directly on the whole graph."""
    X = frozenset(X)
    if pid.startswith("non-") and pid.endswith("-colorability"):
        if g.n > 40:
            raise OracleTooLarge("colorability oracle limited to 40 vertices")
        return not _colorable(g, int(pid.split("-")[1]))
    if g.n > 20:
        raise OracleTooLarge("set-property oracle limited to 20 vertices")
    if pid == "independent-set":
        return not any(u in X for v in X for u in g.adj[v])
    if pid == "dominating-set":
        return all(v in X or g.adj[v] & X for v in g.adj)
    raise ValueError(f"unknown property {pid!r}")


def brute_force_optimum(pid: str, g: Graph) -> tuple[int | None, frozenset | None]:
    """Maximum weight of X with P(G, X), by enumerating every subset."""
    if g.n > 20:
        raise OracleTooLarge("optimum oracle limited to 20 vertices")
    vs = g.vertices
    best, arg = None, None
    for mask in range(1 << len(vs)):
        X = frozenset(v for i, v in enumerate(vs) if (mask >> i) & 1)
        if brute_force_property(pid, g, X):
            w = sum(g.weight(v) for v in X)
            if best is None or w > best:
                best, arg = w, X
    return best, arg


# -- MaxWeight tables ------------------------------------------------------------
#
# A table maps class -> best weight. Only realizable, viable classes are stored;
# a missing class stands for the unrealizable marker.


class _Unrealizable:
    """The -infinity of the MaxWeight recurrences: absorbing under + and below every int."""

    def __repr__(self):
        return "UNREALIZABLE"

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __sub__(self, other):
        return self

    def __lt__(self, other):
        return other is not self

    def __gt__(self, other):
        return False

    def __le__(self, other):
        return True

    def __ge__(self, other):
        return other is self


UNREALIZABLE = _Unrealizable()


def lookup(table: Mapping, c):
    return table.get(c, UNREALIZABLE)


def base_table(alg: Algebra, t: int, edges, weights: list[int]) -> dict:
    """MaxWeight(G^b, c) = weight(term(c, W)) over every subset of the terminals."""
    out: dict = {}
    for mask in range(1 << t):
        c = alg.base(t, edges, mask)
        if not alg.viable(c):
            continue
        w = sum(weights[r] for r in range(t) if (mask >> r) & 1)
        if c not in out or w > out[c]:
            out[c] = w
    return out


def combine1(alg: Algebra, f: GlueMatrix, t1: Mapping) -> dict:
    out: dict = {}
    for c1, v1 in t1.items():
        c = alg.compose(f, c1)
        if c is None or not alg.viable(c):
            continue
        if c not in out or v1 > out[c]:
            out[c] = v1
    return out


def _identified_key(f: GlueMatrix, col: int, c, alg: Algebra) -> tuple:
    x = alg.term(c)
    return tuple((x >> (row[col] - 1)) & 1 for row in f.rows if row[0] and row[1])


def combine2(alg: Algebra, f: GlueMatrix, t1: Mapping, t2: Mapping, row_weights: list[int]) -> dict:
    """Arity-2 recurrence: max over compatible (c1, c2) of
    MW(G1, c1) + MW(G2, c2) - weight(term(c1, W1) & term(c2, W2))."""
    shared = [r for r, row in enumerate(f.rows) if row[0] and row[1]]
    buckets: dict = {}
    for c2, v2 in t2.items():
        buckets.setdefault(_identified_key(f, 1, c2, alg), []).append((c2, v2))
    out: dict = {}
    for c1, v1 in t1.items():
        key = _identified_key(f, 0, c1, alg)
        overlap = sum(row_weights[r] for r, b in zip(shared, key) if b)
        for c2, v2 in buckets.get(key, ()):
            c = alg.compose(f, c1, c2)
            if c is None or not alg.viable(c):
                continue
            val = v1 + v2 - overlap
            if c not in out or val > out[c]:
                out[c] = val
    return out


def fold_tables(alg: Algebra, tables: list[Mapping], row_weights: list[int]) -> dict:
    out = dict(tables[0])
    m = identity_matrix(len(row_weights))
    for t in tables[1:]:
        out = combine2(alg, m, out, t, row_weights)
    return out


def best_accepting(alg: Algebra, table: Mapping):
    vals = [v for c, v in table.items() if alg.accepting(c)]
    return max(vals) if vals else UNREALIZABLE


@dataclass
class NodeTables:
    bag: tuple
    base: dict
    full: dict
    plus: dict | None
    by_charge: dict  # w -> table of G_i[w]


def node_tables(alg: Algebra, td, g: Graph, dm=None) -> dict:
    """MaxWeight tables for G_i^b, G_i, G_i^+ and G_i[w] at every node."""
    from .terminal import plus_matrix

    if not alg.takes_subset:
        raise ValueError("MaxWeight tables need a subset property")
    out: dict = {}
    for i in reversed(td.order):
        bag = td.node_id(i)
        t = len(bag)
        wts = [g.weight(v) for v in bag]
        bt = base_table(alg, t, _bag_edges(g, bag), wts)
        kids = td.children[i]
        by_charge: dict = {}
        if dm is None:
            parts = [out[j].plus for j in kids]
            full = fold_tables(alg, parts, wts) if parts else bt
        else:
            for w in sorted(td.fresh[i]):
                mine = sorted((j for j in kids if dm.in_charge[j] == w), key=lambda j: dm.exit[j])
                by_charge[w] = fold_tables(alg, [out[j].plus for j in mine], wts) if mine else bt
            full = fold_tables(alg, [by_charge[w] for w in sorted(td.fresh[i])], wts)
        plus = None
        p = td.parent[i]
        if p is not None:
            pbag = td.node_id(p)
            pw = [g.weight(v) for v in pbag]
            pbt = base_table(alg, len(pbag), _bag_edges(g, pbag), pw)
            plus = combine2(alg, plus_matrix(bag, pbag), full, pbt, pw)
        out[i] = NodeTables(bag, bt, full, plus, by_charge)
    return out


def max_weight_table(alg: Algebra, td, g: Graph, dm=None) -> dict:
    """(node id, class) -> MaxWeight(G_i, c) for every realizable viable class."""
    tabs = node_tables(alg, td, g, dm)
    return {(td.node_id(i), c): v for i, nt in tabs.items() for c, v in nt.full.items()}


def dp_optimum(alg: Algebra, td, g: Graph):
    tabs = node_tables(alg, td, g)
    return best_accepting(alg, tabs[td.root].full)


def _bag_edges(g: Graph, bag: tuple) -> list[tuple[int, int]]:
    return [(a, b) for a, b in combinations(range(len(bag)), 2) if g.has_edge(bag[a], bag[b])]


bag_edges = _bag_edges

__all__ = [
    "UNREALIZABLE",
    "base_table",
    "best_accepting",
    "brute_force_optimum",
    "brute_force_property",
    "combine1",
    "combine2",
    "dp_argmax",
    "dp_evaluate",
    "dp_holds",
    "dp_optimum",
    "fold_tables",
    "get_algebra",
    "lookup",
    "max_weight_table",
    "node_tables",
]


def dp_argmax(alg: Algebra, td, g: Graph) -> tuple:
    """(optimum, X) by the MaxWeight recurrences, keeping one witness set per class."""
    from .terminal import plus_matrix

    def base(bag):
        out: dict = {}
        t = len(bag)
        edges = _bag_edges(g, bag)
        for mask in range(1 << t):
            c = alg.base(t, edges, mask)
            if not alg.viable(c):
                continue
            X = frozenset(bag[r] for r in range(t) if (mask >> r) & 1)
            w = sum(g.weight(v) for v in X)
            if c not in out or w > out[c][0]:
                out[c] = (w, X)
        return out

    def join(f, t1, t2):
        out: dict = {}
        for c1, (v1, x1) in t1.items():
            for c2, (v2, x2) in t2.items():
                c = alg.compose(f, c1, c2)
                if c is None or not alg.viable(c):
                    continue
                X = x1 | x2
                val = sum(g.weight(v) for v in X)
                if c not in out or val > out[c][0]:
                    out[c] = (val, X)
        return out

    full: dict = {}
    for i in reversed(td.order):
        bag = td.node_id(i)
        parts = []
        for j in td.children[i]:
            parts.append(join(plus_matrix(td.node_id(j), bag), full[j], base(bag)))
        if not parts:
            full[i] = base(bag)
            continue
        acc = parts[0]
        for p in parts[1:]:
            acc = join(identity_matrix(len(bag)), acc, p)
        full[i] = acc
    best = None
    for c, (v, X) in full[td.root].items():
        if alg.accepting(c) and (best is None or v > best[0]):
            best = (v, X)
    return best if best is not None else (UNREALIZABLE, None)
