"""Terminal graphs, glue matrices and expressions built from tree decompositions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..graph import Graph


class GlueError(ValueError):
    pass


def _pair(a, b) -> tuple:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class TerminalGraph:
    vertices: frozenset
    edges: frozenset  # of ordered pairs (a, b) with a < b
    terminals: tuple  # ascending identifiers for graphs built from bags

    @classmethod
    def base(cls, g: Graph, bag: Iterable[int]) -> "TerminalGraph":
        b = tuple(sorted(bag))
        s = set(b)
        edges = frozenset(_pair(u, v) for u in b for v in g.adj[u] if v in s)
        return cls(frozenset(b), edges, b)

    @property
    def tau(self) -> int:
        return len(self.terminals)

    @property
    def is_base(self) -> bool:
        return set(self.terminals) == set(self.vertices)

    def as_graph(self) -> Graph:
        return Graph.from_edges(self.vertices, self.edges)

    def edge_indices(self) -> list[tuple[int, int]]:
        """Edges between terminals as index pairs into ``terminals``."""
        pos = {v: i for i, v in enumerate(self.terminals)}
        return sorted(
            _pair(pos[a], pos[b]) for a, b in self.edges if a in pos and b in pos
        )


@dataclass(frozen=True)
class GlueMatrix:
    """Rows are the terminals of the result; entry c of a row is a 1-based
    terminal index of operand c, or 0 when operand c contributes nothing."""

    arity: int
    rows: tuple

    def __post_init__(self):
        if self.arity not in (1, 2):
            raise GlueError("arity must be 1 or 2")
        for row in self.rows:
            if len(row) != self.arity:
                raise GlueError("row length differs from arity")
            if not any(row):
                raise GlueError("a result terminal must come from some operand")
        for c in range(self.arity):
            col = [row[c] for row in self.rows if row[c]]
            if len(col) != len(set(col)):
                raise GlueError(f"column {c + 1} repeats a terminal")

    def column(self, c: int) -> tuple:
        return tuple(row[c] for row in self.rows)

    def check(self, *taus: int) -> None:
        if len(taus) != self.arity:
            raise GlueError("operand count differs from arity")
        for c, t in enumerate(taus):
            if any(m > t or m < 0 for m in self.column(c)):
                raise GlueError(f"column {c + 1} refers past {t} terminals")


def identity_matrix(t: int) -> GlueMatrix:
    return GlueMatrix(2, tuple((r, r) for r in range(1, t + 1)))


def plus_matrix(child_bag: tuple, bag: tuple) -> GlueMatrix:
    """Matrix of G_j^+ = f(G_j, G_i^b): rows over B_i, shared vertices glued."""
    pos = {v: r for r, v in enumerate(child_bag, 1)}
    return GlueMatrix(2, tuple((pos.get(v, 0), r) for r, v in enumerate(bag, 1)))


def glue(f: GlueMatrix, g1: TerminalGraph, g2: TerminalGraph | None = None) -> TerminalGraph:
    """Apply composition ``f``: vertex names of g1 are kept, g2 vertices glued to a
    g1 terminal take its name, and other clashing g2 names are renamed."""
    if f.arity == 1:
        if g2 is not None:
            raise GlueError("arity-1 matrix with two operands")
        f.check(g1.tau)
        return TerminalGraph(g1.vertices, g1.edges, tuple(g1.terminals[r[0] - 1] for r in f.rows))
    if g2 is None:
        raise GlueError("arity-2 matrix needs two operands")
    f.check(g1.tau, g2.tau)
    rename: dict = {}
    for m1, m2 in f.rows:
        if m1 and m2:
            rename[g2.terminals[m2 - 1]] = g1.terminals[m1 - 1]
    used = set(g1.vertices)
    fresh = _fresh_names(used | set(g2.vertices))
    for v in sorted(g2.vertices, key=repr):
        if v in rename:
            continue
        rename[v] = v if v not in used else next(fresh)
        used.add(rename[v])
    terms = []
    for m1, m2 in f.rows:
        terms.append(g1.terminals[m1 - 1] if m1 else rename[g2.terminals[m2 - 1]])
    edges = set(g1.edges)
    edges.update(_pair(rename[a], rename[b]) for a, b in g2.edges)
    return TerminalGraph(frozenset(used), frozenset(edges), tuple(terms))


def _fresh_names(taken: set):
    nxt = max((v for v in taken if isinstance(v, int)), default=-1) + 1
    while True:
        if nxt not in taken:
            yield nxt
        nxt += 1


# -- expressions ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Expr:
    """Either a base graph (``base`` set) or a composition of ``args``."""

    base: TerminalGraph | None = None
    op: GlueMatrix | None = None
    args: tuple = ()
    terminals: tuple = ()
    xmask: int = 0  # for bases: X restricted to terminals, bit r = terminal r


def base_expr(tg: TerminalGraph, X: frozenset | set = frozenset()) -> Expr:
    mask = sum(1 << r for r, v in enumerate(tg.terminals) if v in X)
    return Expr(base=tg, terminals=tg.terminals, xmask=mask)


def op_expr(f: GlueMatrix, *args: Expr) -> Expr:
    if len(args) != f.arity:
        raise GlueError("operand count differs from arity")
    terms = []
    for row in f.rows:
        c = next(i for i, m in enumerate(row) if m)
        terms.append(args[c].terminals[row[c] - 1])
    return Expr(op=f, args=args, terminals=tuple(terms))


def _postorder(root: Expr):
    out, stack = [], [(root, False)]
    while stack:
        e, done = stack.pop()
        if done or e.base is not None:
            out.append(e)
            continue
        stack.append((e, True))
        for a in reversed(e.args):
            stack.append((a, False))
    return out


def evaluate_graph(root: Expr) -> TerminalGraph:
    val: dict = {}
    for e in _postorder(root):
        if id(e) in val:
            continue
        val[id(e)] = e.base if e.base is not None else glue(e.op, *(val[id(a)] for a in e.args))
    return val[id(root)]


def evaluate_class(root: Expr, alg, memo: dict | None = None):
    """Class of the expression under ``alg``; shared sub-expressions are evaluated once."""
    val = {} if memo is None else memo
    for e in _postorder(root):
        if id(e) in val:
            continue
        if e.base is not None:
            val[id(e)] = alg.base(e.base.tau, e.base.edge_indices(), e.xmask)
        else:
            c = alg.compose(e.op, *(val[id(a)] for a in e.args))
            if c is None:
                raise GlueError("incompatible vertex subsets in glue")
            val[id(e)] = c
    return val[id(root)]


@dataclass
class NodeExprs:
    """Expressions for one decomposition node: G_i^b, G_i, G_i^+ and G_i[w]."""

    bag: tuple
    base: Expr
    full: Expr = None
    plus: Expr | None = None
    by_charge: dict = field(default_factory=dict)  # w -> Expr for G_i[w]
    charge_children: dict = field(default_factory=dict)  # w -> child nodes, ascending exit id


def fold(exprs: list[Expr], t: int) -> Expr:
    out = exprs[0]
    m = identity_matrix(t)
    for e in exprs[1:]:
        out = op_expr(m, out, e)
    return out


def decomposition_to_expression(td, g: Graph, dm=None, X: frozenset = frozenset()):
    """Bottom-up expressions for every node; returns (root expression, per-node NodeExprs).

    Without a decoration, G_i is the consecutive glue on B_i of the G_j^+ of the
    children (G_i^b for a leaf). With one, children are grouped by in-charge
    vertex: G_i[w] glues the G_j^+ with alpha_j = w (ascending exit id, G_i^b if
    none) and G_i glues the G_i[w] over w in F_i ascending.
    """
    out: dict = {}
    for i in reversed(td.order):
        bag = td.node_id(i)
        ne = NodeExprs(bag, base_expr(TerminalGraph.base(g, bag), X))
        kids = td.children[i]
        t = len(bag)
        if dm is None:
            parts = [out[j].plus for j in kids]
            ne.full = fold(parts, t) if parts else ne.base
        else:
            for w in sorted(td.fresh[i]):
                mine = sorted((j for j in kids if dm.in_charge[j] == w), key=lambda j: dm.exit[j])
                ne.charge_children[w] = mine
                ne.by_charge[w] = fold([out[j].plus for j in mine], t) if mine else ne.base
            ne.full = fold([ne.by_charge[w] for w in sorted(td.fresh[i])], t)
        p = td.parent[i]
        if p is not None:
            pbag = td.node_id(p)
            pbase = base_expr(TerminalGraph.base(g, pbag), X)
            ne.plus = op_expr(plus_matrix(bag, pbag), ne.full, pbase)
        out[i] = ne
    return out[td.root].full, out
