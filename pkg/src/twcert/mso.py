"""Certifying tw(G) <= k together with a regular graph property.

Main messages of v in F_i carry the classes of G_i and G_i[v]. The aux
message for node i carries the class of G_i and the classes of G_i[w] for
every w in F_i (ascending), so each member of F_i can redo the glue of all
G_i[w] although most of them are not its neighbours.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Mapping

from .bits import BitReader, BitWriter, DecodeError
from .decomposition import TreeDecomposition, prepare
from .graph import Graph
from .local import LocalView, Verdict, run_round
from .regular.algebras import Algebra, get_algebra
from .regular.dp import brute_force_property, dp_evaluate, OracleTooLarge
from .regular.terminal import (
    GlueError,
    decomposition_to_expression,
    evaluate_class,
    identity_matrix,
    plus_matrix,
)
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


class MsoCodec(TwCodec):
    def __init__(self, alg: Algebra):
        self.alg = alg
        self.name = f"mso:{alg.pid}"

    def write_main_ext(self, w: BitWriter, main: Main) -> None:
        cg, cv = main.ext
        self.alg.write(w, cg)
        self.alg.write(w, cv)

    def read_main_ext(self, r: BitReader, levels, d):
        t = len(levels[d - 1].bag)
        return (self.alg.read(r, t), self.alg.read(r, t))

    def write_aux_ext(self, w: BitWriter, aux: Aux) -> None:
        cg, per_w = aux.ext
        self.alg.write(w, cg)
        for c in per_w:
            self.alg.write(w, c)

    def read_aux_ext(self, r: BitReader, node, fresh):
        t = len(node)
        cg = self.alg.read(r, t)
        return (cg, tuple(self.alg.read(r, t) for _ in fresh))


@lru_cache(maxsize=None)
def mso_codec(pid: str) -> MsoCodec:
    return MsoCodec(get_algebra(pid))


def build_mso(g: Graph, k: int, pid: str, witness: TreeDecomposition | None = None, prepared=None) -> TwProof:
    codec = mso_codec(pid)
    alg = codec.alg
    if alg.takes_subset:
        raise ValueError(f"{pid} is a subset property; use the optimisation protocol")
    td, dm = prepared if prepared is not None else prepare(g, k, witness)
    _, exprs = decomposition_to_expression(td, g, dm)
    memo: dict = {}
    full = {i: evaluate_class(ne.full, alg, memo) for i, ne in exprs.items()}
    charge = {
        i: {w: evaluate_class(e, alg, memo) for w, e in ne.by_charge.items()} for i, ne in exprs.items()
    }

    def main_ext(v, i):
        return (full[i], charge[i][v])

    def aux_ext(i, w):
        return (full[i], tuple(charge[i][u] for u in sorted(td.fresh[i])))

    return build_tw(g, k, codec=codec, main_ext=main_ext, aux_ext=aux_ext, prepared=(td, dm))


def prove_mso(g: Graph, k: int, pid: str, witness: TreeDecomposition | None = None) -> dict[int, bytes]:
    """Honest certificates; emitted even when the property fails (the root then rejects)."""
    return build_mso(g, k, pid, witness).encoded()


def children_of(ctx, d: int) -> list:
    """Aux messages of neighbouring exit vertices that name this vertex as in charge."""
    out = []
    for u in sorted(ctx.nbrs):
        for a in ctx.nbrs[u].aux.values():
            if a.exit == u and a.in_charge == ctx.v and a.d_aux == d + 1:
                out.append(a)
    return out


def local_base_class(alg: Algebra, bag: tuple, edges, xmask: int = 0):
    pos = {v: i for i, v in enumerate(bag)}
    return alg.base(len(bag), sorted((pos[a], pos[b]) for a, b in edges), xmask)


def fold_classes(alg: Algebra, classes, t: int):
    if any(c is None for c in classes):
        return None
    m = identity_matrix(t)
    out = classes[0]
    for c in classes[1:]:
        out = alg.compose(m, out, c)
        if out is None:
            return None
    return out


def check_mso(view: LocalView, k: int, pid: str) -> list[str]:
    codec = mso_codec(pid)
    alg = codec.alg
    bad, ctx = check_tw(view, k, codec)
    if ctx is None:
        return bad
    main = ctx.me.main
    d = main.d
    own = main.at(d)
    bag = own.bag
    cg, cv = main.ext
    base = local_base_class(alg, bag, own.edges)
    try:
        parts = [alg.compose(plus_matrix(a.node, bag), a.ext[0], base) for a in children_of(ctx, d)]
        mine = fold_classes(alg, parts, len(bag)) if parts else base
    except GlueError:
        mine = None
    if mine != cv:
        bad.append("MSO-a")
    aux = ctx.me.aux.get(bag)
    if aux is not None:
        acg, per_w = aux.ext
        idx = own.fresh.index(ctx.v) if ctx.v in own.fresh else len(per_w)
        if acg != cg or idx >= len(per_w) or per_w[idx] != cv:
            bad.append("MSO-aux")
        if fold_classes(alg, list(per_w), len(bag)) != cg:
            bad.append("MSO-b")
    if d == 1 and not alg.accepting(cg):
        bad.append("MSO-c")
    return bad


def verify_mso_vertex(view: LocalView, k: int, pid: str) -> tuple:
    return tuple(check_mso(view, k, pid))


def mso_verifier(k: int, pid: str):
    def verifier(view: LocalView) -> tuple:
        return verify_mso_vertex(view, k, pid)

    return verifier


def run_mso(g: Graph, certs: Mapping[int, bytes], k: int, pid: str) -> Verdict:
    return run_round(g, certs, mso_verifier(k, pid))


def mso_extraction_oracle(g: Graph, certs: Mapping[int, bytes], k: int, pid: str) -> list[str]:
    """Failures of the soundness oracle for a globally accepted certificate map."""
    codec = mso_codec(pid)
    out = check_claims(g, certs, k, codec)
    if out:
        return out
    td = decode_claimed_decomposition(certs, codec)
    dec = decode_all(certs, codec)
    claimed = {c.main.ext[0] for c in dec.values() if c.main.d == 1}
    truth = dp_evaluate(codec.alg, td, g)
    if claimed != {truth}:
        out.append("mso: root class differs from the sequential DP")
    if not codec.alg.accepting(truth):
        out.append("mso: DP class at the root is rejecting")
    try:
        if not brute_force_property(pid, g):
            out.append("mso: property is false by brute force")
    except OracleTooLarge:
        pass
    return out
