"""Certifying that a vertex set X has maximum weight among sets satisfying P(G, X).

The input set is given through vertex labels (``IN_X`` marks members). On top
of the treewidth certificates every level carries X and the vertex weights on
its bag, the main message carries a global spanning tree aggregating the
weight of X, the classes of (G_i, X) and (G_i[v], X) and the MaxWeight table of
G_i[v]. The aux message of node i carries the table of G_i and, for every
w in F_i, the class, X-weight and table of G_i[w].

Tables are sparse: only realizable classes that can still lead to an
accepting class are listed, every other class is UNREALIZABLE.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

from .bits import BitReader, BitWriter, DecodeError, get_signed, put_signed, signed_width
from .decomposition import TreeDecomposition, prepare
from .graph import Graph
from .local import LocalView, Verdict, run_round
from .mso import children_of, fold_classes, local_base_class
from .regular.algebras import Algebra, get_algebra
from .regular.dp import (
    OracleTooLarge,
    base_table,
    best_accepting,
    brute_force_optimum,
    brute_force_property,
    combine2,
    dp_evaluate,
    fold_tables,
    node_tables,
)
from .regular.terminal import GlueError, decomposition_to_expression, evaluate_class, plus_matrix
from .tw import (
    Aux,
    Main,
    TwCodec,
    TwProof,
    build_tw,
    check_claims,
    check_tw,
    decode_all,
    decode_claimed_decomposition,
)

IN_X = b"\x01"
MAX_TABLE = 1 << 20


def with_solution(g: Graph, X) -> Graph:
    """Copy of ``g`` whose labels encode membership in X."""
    X = set(X)
    if not X <= set(g.adj):
        raise ValueError("X is not a subset of the vertices")
    return g.with_labels({v: (IN_X if v in X else b"") for v in g.adj})


def solution_of(g: Graph) -> frozenset:
    return frozenset(v for v in g.adj if g.label(v) == IN_X)


@dataclass(frozen=True)
class BagData:
    """X and the weights restricted to one bag (bit r / entry r = bag[r])."""

    xmask: int
    weights: tuple


@dataclass(frozen=True)
class Span:
    parent: int | None
    dist: int
    weight_x: int


@dataclass(frozen=True)
class MainExt:
    span: Span
    class_g: object
    class_v: object
    weight_v: int
    table_v: tuple  # ((class, value), ...) ascending by class


@dataclass(frozen=True)
class AuxExt:
    class_g: object
    weight_g: int
    table_g: tuple
    per_w: tuple  # (class, weight, table) for w in F_i ascending


def _table_tuple(table: Mapping) -> tuple:
    return tuple(sorted(table.items()))


class OptCodec(TwCodec):
    def __init__(self, alg: Algebra):
        if not alg.takes_subset:
            raise ValueError(f"{alg.pid} is not a subset property")
        self.alg = alg
        self.name = f"opt:{alg.pid}"

    def write_level_extra(self, w: BitWriter, lvl) -> None:
        bd: BagData = lvl.extra
        w.mask(bd.xmask, len(lvl.bag))
        for x in bd.weights:
            w.sint(x)

    def read_level_extra(self, r: BitReader, bag):
        xmask = r.mask(len(bag))
        return BagData(xmask, tuple(r.sint() for _ in bag))

    def _write_table(self, w: BitWriter, table: tuple) -> None:
        w.nat(len(table))
        bound = max((abs(v) for _, v in table), default=0)
        vw = signed_width(bound)
        w.nat(vw)
        for c, val in table:
            self.alg.write(w, c)
            put_signed(w, val, vw)

    def _read_table(self, r: BitReader, t: int) -> tuple:
        n = r.nat(MAX_TABLE)
        vw = r.nat(256)
        if vw < 1:
            raise DecodeError("value width must be positive")
        out = []
        for _ in range(n):
            c = self.alg.read(r, t)
            if out and not out[-1][0] < c:
                raise DecodeError("table classes not strictly ascending")
            out.append((c, get_signed(r, vw)))
        return tuple(out)

    def write_main_ext(self, w: BitWriter, main: Main) -> None:
        e: MainExt = main.ext
        w.opt_vid(e.span.parent)
        w.nat(e.span.dist)
        w.sint(e.span.weight_x)
        self.alg.write(w, e.class_g)
        self.alg.write(w, e.class_v)
        w.sint(e.weight_v)
        self._write_table(w, e.table_v)

    def read_main_ext(self, r: BitReader, levels, d):
        t = len(levels[d - 1].bag)
        span = Span(r.opt_vid(), r.nat(1 << 40), r.sint())
        cg = self.alg.read(r, t)
        cv = self.alg.read(r, t)
        return MainExt(span, cg, cv, r.sint(), self._read_table(r, t))

    def write_aux_ext(self, w: BitWriter, aux: Aux) -> None:
        e: AuxExt = aux.ext
        self.alg.write(w, e.class_g)
        w.sint(e.weight_g)
        self._write_table(w, e.table_g)
        for c, wt, tab in e.per_w:
            self.alg.write(w, c)
            w.sint(wt)
            self._write_table(w, tab)

    def read_aux_ext(self, r: BitReader, node, fresh):
        t = len(node)
        cg = self.alg.read(r, t)
        wg = r.sint()
        tg = self._read_table(r, t)
        per_w = tuple((self.alg.read(r, t), r.sint(), self._read_table(r, t)) for _ in fresh)
        return AuxExt(cg, wg, tg, per_w)


@lru_cache(maxsize=None)
def opt_codec(pid: str) -> OptCodec:
    return OptCodec(get_algebra(pid))


# -- prover -------------------------------------------------------------------------------


def spanning_tree(g: Graph, root: int, X) -> dict[int, Span]:
    """BFS tree rooted at ``root`` with subtree weights of X."""
    parent = {root: None}
    dist = {root: 0}
    order = [root]
    q = deque([root])
    while q:
        u = q.popleft()
        for x in sorted(g.adj[u]):
            if x not in parent:
                parent[x] = u
                dist[x] = dist[u] + 1
                order.append(x)
                q.append(x)
    if len(order) != g.n:
        raise ValueError("graph is not connected")
    acc = {v: (g.weight(v) if v in X else 0) for v in order}
    for v in reversed(order):
        if parent[v] is not None:
            acc[parent[v]] += acc[v]
    return {v: Span(parent[v], dist[v], acc[v]) for v in order}


def build_opt(
    g: Graph, k: int, pid: str, X=None, witness: TreeDecomposition | None = None, prepared=None
) -> TwProof:
    """Honest certificates for ``X`` (default: the labels of ``g``).

    Certificates are emitted even when X is not optimal or P(G, X) fails; the
    verifier then rejects at the root.
    """
    codec = opt_codec(pid)
    alg = codec.alg
    if X is None:
        X = solution_of(g)
    X = frozenset(X)
    g = with_solution(g, X)
    td, dm = prepared if prepared is not None else prepare(g, k, witness)
    _, exprs = decomposition_to_expression(td, g, dm, X)
    memo: dict = {}
    full = {i: evaluate_class(ne.full, alg, memo) for i, ne in exprs.items()}
    charge = {i: {w: evaluate_class(e, alg, memo) for w, e in ne.by_charge.items()} for i, ne in exprs.items()}
    tabs = node_tables(alg, td, g, dm)

    # vertex sets of G_i and G_i[w]
    below: dict = {}
    for i in reversed(td.order):
        below[i] = set(td.bags[i]).union(*(below[j] for j in td.children[i]))
    wx = lambda vs: sum(g.weight(v) for v in vs if v in X)  # noqa: E731
    wfull = {i: wx(below[i]) for i in td.order}
    wcharge = {
        i: {
            w: wx(set(td.bags[i]).union(*(below[j] for j in ne.charge_children[w])))
            for w in ne.by_charge
        }
        for i, ne in exprs.items()
    }

    root_v = min(td.fresh[td.root])
    span = spanning_tree(g, root_v, X)

    def level_extra(i):
        bag = td.node_id(i)
        return BagData(sum(1 << r for r, v in enumerate(bag) if v in X), tuple(g.weight(v) for v in bag))

    def main_ext(v, i):
        return MainExt(span[v], full[i], charge[i][v], wcharge[i][v], _table_tuple(tabs[i].by_charge[v]))

    aux_cache: dict = {}

    def aux_ext(i, w):
        if i not in aux_cache:
            fr = sorted(td.fresh[i])
            per_w = tuple((charge[i][u], wcharge[i][u], _table_tuple(tabs[i].by_charge[u])) for u in fr)
            aux_cache[i] = AuxExt(full[i], wfull[i], _table_tuple(tabs[i].full), per_w)
        return aux_cache[i]

    return build_tw(
        g,
        k,
        codec=codec,
        level_extra=level_extra,
        main_ext=main_ext,
        aux_ext=aux_ext,
        prepared=(td, dm),
    )


def prove_opt(g: Graph, k: int, pid: str, X=None, witness: TreeDecomposition | None = None) -> dict[int, bytes]:
    return build_opt(g, k, pid, X, witness).encoded()


# -- verifier ----------------------------------------------------------------------------


def _bag_index_edges(bag: tuple, edges) -> list[tuple[int, int]]:
    pos = {v: i for i, v in enumerate(bag)}
    return sorted((pos[a], pos[b]) for a, b in edges)


def _weight_of_mask(bd: BagData, mask: int) -> int:
    return sum(x for r, x in enumerate(bd.weights) if (mask >> r) & 1)


def _check_bag_data(ctx, bad: list[str]) -> None:
    """X and weights agree across levels, with v's own input and with its neighbours' inputs."""
    v = ctx.v
    L = ctx.me.main.levels
    me = ctx.view.me
    truth = {v: (me.label == IN_X, me.weight)}
    for p in ctx.view.neighbors:
        truth[p.id] = (p.label == IN_X, p.weight)
    seen: dict = {}
    for lvl in L:
        bd = lvl.extra
        if not isinstance(bd, BagData) or len(bd.weights) != len(lvl.bag):
            bad.append("OPT-X")
            return
        for r, u in enumerate(lvl.bag):
            entry = (bool((bd.xmask >> r) & 1), bd.weights[r])
            if seen.setdefault(u, entry) != entry:
                bad.append("OPT-X")
                return
            if u in truth and truth[u] != entry:
                bad.append("OPT-X")
                return
    if v not in seen:
        bad.append("OPT-X")


def check_opt(view: LocalView, k: int, pid: str) -> list[str]:
    codec = opt_codec(pid)
    alg = codec.alg
    bad, ctx = check_tw(view, k, codec)
    if ctx is None:
        return bad
    main = ctx.me.main
    d = main.d
    own = main.at(d)
    bag = own.bag
    bd: BagData = own.extra
    e: MainExt = main.ext
    v = ctx.v
    _check_bag_data(ctx, bad)
    if "OPT-X" in bad:
        return bad

    # spanning tree of the whole graph, rooted at the smallest fresh vertex of the root
    sp = e.span
    is_root_v = d == 1 and v == min(own.fresh, default=None)
    if sp.parent is None:
        if not is_root_v or sp.dist != 0:
            bad.append("OPT-span")
    elif is_root_v or sp.parent not in ctx.nbrs or ctx.nbrs[sp.parent].main.ext.span.dist != sp.dist - 1:
        bad.append("OPT-span")
    total = view.me.weight if view.me.label == IN_X else 0
    for u, cu in ctx.nbrs.items():
        if cu.main.ext.span.parent == v:
            total += cu.main.ext.span.weight_x
    if total != sp.weight_x:
        bad.append("OPT-sum")

    # class, weight and table of G_i[v] from the children in charge of v
    t = len(bag)
    edges = _bag_index_edges(bag, own.edges)
    kids = children_of(ctx, d)
    base = local_base_class(alg, bag, own.edges, bd.xmask)
    try:
        parts = [alg.compose(plus_matrix(a.node, bag), a.ext.class_g, base) for a in kids]
        mine = fold_classes(alg, parts, t) if parts else base
    except GlueError:
        mine = None
    if mine != e.class_v:
        bad.append("OPT-class")
    wbag = _weight_of_mask(bd, bd.xmask)
    wv = wbag
    for a in kids:
        shared = sum(1 << r for r, u in enumerate(bag) if u in set(a.node))
        wv += a.ext.weight_g - _weight_of_mask(bd, bd.xmask & shared)
    if wv != e.weight_v:
        bad.append("OPT-weight")
    bt = base_table(alg, t, edges, list(bd.weights))
    try:
        plus = [combine2(alg, plus_matrix(a.node, bag), dict(a.ext.table_g), bt, list(bd.weights)) for a in kids]
        tv = fold_tables(alg, plus, list(bd.weights)) if plus else bt
    except GlueError:
        tv = None
    if tv is None or _table_tuple(tv) != e.table_v:
        bad.append("OPT-mw")

    # node-level values shared through the aux message
    aux = ctx.me.aux.get(bag)
    if aux is not None:
        ae: AuxExt = aux.ext
        idx = own.fresh.index(v) if v in own.fresh else None
        if (
            ae.class_g != e.class_g
            or idx is None
            or idx >= len(ae.per_w)
            or ae.per_w[idx] != (e.class_v, e.weight_v, e.table_v)
        ):
            bad.append("OPT-aux")
        if fold_classes(alg, [c for c, _, _ in ae.per_w], t) != ae.class_g:
            bad.append("OPT-class-node")
        p = len(ae.per_w)
        if sum(wt for _, wt, _ in ae.per_w) - (p - 1) * wbag != ae.weight_g:
            bad.append("OPT-weight-node")
        tg = fold_tables(alg, [dict(tab) for _, _, tab in ae.per_w], list(bd.weights))
        if _table_tuple(tg) != ae.table_g:
            bad.append("OPT-mw-node")
        if d == 1 and is_root_v:
            if sp.weight_x != ae.weight_g:
                bad.append("OPT-root-weight")
            if sp.weight_x < best_accepting(alg, dict(ae.table_g)):
                bad.append("OPT-max")
    if d == 1 and not alg.accepting(e.class_g):
        bad.append("OPT-accept")
    return bad


def verify_opt_vertex(view: LocalView, k: int, pid: str) -> tuple:
    return tuple(check_opt(view, k, pid))


def opt_verifier(k: int, pid: str):
    def verifier(view: LocalView) -> tuple:
        return verify_opt_vertex(view, k, pid)

    return verifier


def run_opt(g: Graph, certs: Mapping[int, bytes], k: int, pid: str) -> Verdict:
    """Run one round; ``g`` must carry X in its labels (see :func:`with_solution`)."""
    return run_round(g, certs, opt_verifier(k, pid))


# -- oracle --------------------------------------------------------------------------------


def opt_extraction_oracle(g: Graph, certs: Mapping[int, bytes], k: int, pid: str, brute_limit: int = 12) -> list[str]:
    """Failures of the soundness oracle for a globally accepted certificate map."""
    codec = opt_codec(pid)
    alg = codec.alg
    out = check_claims(g, certs, k, codec)
    if out:
        return out
    td = decode_claimed_decomposition(certs, codec)
    dec = decode_all(certs, codec)
    X = solution_of(g)
    for v, c in dec.items():
        for lvl in c.main.levels:
            for r, u in enumerate(lvl.bag):
                if bool((lvl.extra.xmask >> r) & 1) != (u in X) or lvl.extra.weights[r] != g.weight(u):
                    out.append(f"opt: level data of {v} disagrees with the input on {u}")
                    break
    roots = [c for c in dec.values() if c.main.d == 1]
    truth = dp_evaluate(alg, td, g, X)
    if {c.main.ext.class_g for c in roots} != {truth}:
        out.append("opt: root class differs from the sequential DP")
    if not alg.accepting(truth):
        out.append("opt: P(G, X) is false by the sequential DP")
    tables = node_tables(alg, td, g)
    exact = _table_tuple(tables[td.root].full)
    root_bag = td.node_id(td.root)
    claimed = {c.aux[root_bag].ext.table_g for c in roots if root_bag in c.aux}
    if claimed != {exact}:
        out.append("opt: root MaxWeight table differs from the sequential DP")
    weight = sum(g.weight(v) for v in X)
    best = best_accepting(alg, tables[td.root].full)
    if weight != best:
        out.append(f"opt: weight(X) = {weight} but the optimum is {best}")
    if g.n <= brute_limit:
        try:
            if not brute_force_property(pid, g, X):
                out.append("opt: P(G, X) is false by brute force")
            bf, _ = brute_force_optimum(pid, g)
            if bf != weight:
                out.append(f"opt: brute-force optimum {bf} differs from weight(X) = {weight}")
        except OracleTooLarge:
            pass
    return out
