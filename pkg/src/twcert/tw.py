"""Certificates for a 3-approximation of treewidth: prover, codec, verifier and oracles.

Each vertex v gets a main message (the root path of the node whose F_i holds
v: depth, bags, fresh sets, induced edge sets) and one auxiliary message per
node i whose aux tree S(i) contains v. Extensions (property classes, weight
tables) hook into the codec through :class:`TwCodec`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Callable, Mapping

from .bits import BitReader, BitWriter, DecodeError, id_width_for, index_width
from .decomposition import (
    DecompositionError,
    TreeDecomposition,
    prepare,
    verify_decomposition,
)
from .graph import Graph
from .local import LocalView, Verdict, run_round

MAX_DEPTH = 1 << 12


@dataclass(frozen=True)
class Level:
    bag: tuple  # ascending ids
    fresh: tuple  # ascending ids
    edges: frozenset  # (a, b) id pairs, a < b
    extra: object = None


@dataclass(frozen=True)
class Main:
    d: int
    levels: tuple  # levels[j - 1] describes depth j; levels[d - 1] is v's own node
    ext: object = None

    def at(self, j: int) -> Level:
        return self.levels[j - 1]


@dataclass(frozen=True)
class Aux:
    node: tuple
    d_aux: int
    exit: int
    in_charge: int | None
    fresh: tuple
    parent: int | None
    dist: int
    sub: tuple
    ext: object = None

    def shared_fields(self):
        return (self.d_aux, self.exit, self.in_charge, self.fresh, self.ext)


@dataclass(frozen=True, eq=False)
class TwCert:
    main: Main
    aux: dict  # node -> Aux
    bits: int = 0  # payload length when decoded

    def same(self, other: "TwCert") -> bool:
        return self.main == other.main and self.aux == other.aux


# -- codec ----------------------------------------------------------------------------


class TwCodec:
    """Bit layout of tw certificates; subclasses append extension fields."""

    name = "tw"

    def write_level_extra(self, w: BitWriter, lvl: Level) -> None:
        pass

    def read_level_extra(self, r: BitReader, bag: tuple):
        return None

    def write_main_ext(self, w: BitWriter, main: Main) -> None:
        pass

    def read_main_ext(self, r: BitReader, levels: tuple, d: int):
        return None

    def write_aux_ext(self, w: BitWriter, aux: Aux) -> None:
        pass

    def read_aux_ext(self, r: BitReader, node: tuple, fresh: tuple):
        return None

    # generic layout

    def encode(self, cert: TwCert, id_width: int) -> bytes:
        w = BitWriter(id_width)
        w.nat(id_width)
        m = cert.main
        w.nat(m.d)
        for j in range(m.d, 0, -1):
            self._write_level(w, m.at(j))
        self.write_main_ext(w, m)
        w.nat(len(cert.aux))
        for _, a in sorted(cert.aux.items()):
            w.idset(a.node)
            w.nat(a.d_aux)
            w.vid(a.exit)
            w.opt_vid(a.in_charge)
            w.idset(a.fresh)
            w.opt_vid(a.parent)
            w.nat(a.dist)
            w.idset(a.sub)
            self.write_aux_ext(w, a)
        return w.to_bytes()

    def _write_level(self, w: BitWriter, lvl: Level) -> None:
        w.idset(lvl.bag)
        w.idset(lvl.fresh)
        pos = {v: i for i, v in enumerate(lvl.bag)}
        pairs = sorted((pos[a], pos[b]) for a, b in lvl.edges)
        iw = index_width(len(lvl.bag))
        w.nat(len(pairs))
        for a, b in pairs:
            w.uint(a, iw)
            w.uint(b, iw)
        self.write_level_extra(w, lvl)

    def _read_level(self, r: BitReader) -> Level:
        bag = r.idset()
        fresh = r.idset()
        iw = index_width(len(bag))
        n = r.nat(len(bag) * len(bag))
        edges = []
        prev = (-1, -1)
        for _ in range(n):
            a, b = r.uint(iw), r.uint(iw)
            if not a < b < len(bag) or (a, b) <= prev:
                raise DecodeError("edge list not canonical")
            prev = (a, b)
            edges.append((bag[a], bag[b]))
        extra = self.read_level_extra(r, bag)
        return _intern(Level(bag, fresh, frozenset(edges), extra))

    def decode(self, data: bytes) -> TwCert:
        return _decode_cached(self, data)

    def _decode(self, data: bytes) -> TwCert:
        r = BitReader(data)
        r.id_width = r.nat(64)
        if r.id_width < 1:
            raise DecodeError("identifier width must be positive")
        d = r.nat(MAX_DEPTH)
        if d < 1:
            raise DecodeError("depth must be >= 1")
        rev = [self._read_level(r) for _ in range(d)]
        levels = tuple(reversed(rev))
        ext = self.read_main_ext(r, levels, d)
        main = Main(d, levels, ext)
        n = r.nat(MAX_DEPTH)
        aux: dict = {}
        last = None
        for _ in range(n):
            node = r.idset()
            d_aux = r.nat(MAX_DEPTH)
            if d_aux < 1:
                raise DecodeError("aux depth must be >= 1")
            ex = r.vid()
            ic = r.opt_vid()
            fresh = r.idset()
            parent = r.opt_vid()
            dist = r.nat(1 << 30)
            sub = r.idset()
            aext = self.read_aux_ext(r, node, fresh)
            if last is not None and last >= node:
                raise DecodeError("aux messages not strictly ascending")
            last = node
            aux[node] = Aux(node, d_aux, ex, ic, fresh, parent, dist, sub, aext)
        return TwCert(main, aux, r.finish())

    def payload_bits(self, data: bytes) -> int:
        """Payload length of a decodable certificate; 8 bits per byte otherwise."""
        try:
            cert = self.decode(data)
        except DecodeError:
            return 8 * len(data)
        return cert.bits


@lru_cache(maxsize=1 << 17)
def _decode_cached(codec: TwCodec, data: bytes) -> TwCert:
    return codec._decode(data)


_LEVELS: dict = {}


def _intern(lvl: Level) -> Level:
    got = _LEVELS.get(lvl)
    if got is None:
        if len(_LEVELS) > 500_000:
            _LEVELS.clear()
        _LEVELS[lvl] = lvl
        return lvl
    return got


TW = TwCodec()


# -- prover --------------------------------------------------------------------------


@dataclass
class TwProof:
    g: Graph
    k: int
    td: TreeDecomposition
    dm: object
    certs: dict  # vertex -> TwCert
    codec: TwCodec = TW
    id_width: int = 1

    def encoded(self) -> dict[int, bytes]:
        return {v: self.codec.encode(c, self.id_width) for v, c in self.certs.items()}


def induced_edges(g: Graph, bag) -> frozenset:
    s = set(bag)
    return frozenset((a, b) for a in bag for b in g.adj[a] if b in s and a < b)


def build_tw(
    g: Graph,
    k: int,
    witness: TreeDecomposition | None = None,
    codec: TwCodec = TW,
    level_extra: Callable | None = None,
    main_ext: Callable | None = None,
    aux_ext: Callable | None = None,
    prepared=None,
) -> TwProof:
    """Honest certificates over the prepared decomposition.

    ``level_extra(node)``, ``main_ext(v, node)`` and ``aux_ext(node, w)``
    supply extension payloads; nodes are keys of the prepared decomposition.
    """
    td, dm = prepared if prepared is not None else prepare(g, k, witness)
    depth = td.depth
    path: dict = {}
    for i in td.order:
        bag = td.node_id(i)
        lvl = Level(
            bag,
            tuple(sorted(td.fresh[i])),
            induced_edges(g, bag),
            None if level_extra is None else level_extra(i),
        )
        p = td.parent[i]
        path[i] = (path[p] if p is not None else ()) + (_intern(lvl),)
    owner = td.fresh_owner()
    aux: dict = {v: {} for v in g.adj}
    for i, tree in dm.aux_tree.items():
        node = td.node_id(i)
        fresh = tuple(sorted(td.fresh[i]))
        for w in tree.members:
            aux[w][node] = Aux(
                node,
                depth[i],
                dm.exit[i],
                dm.in_charge[i],
                fresh,
                tree.parent[w],
                tree.dist[w],
                tuple(sorted(tree.sub[w])),
                None if aux_ext is None else aux_ext(i, w),
            )
    certs = {}
    for v in g.adj:
        i = owner[v]
        ext = None if main_ext is None else main_ext(v, i)
        certs[v] = TwCert(Main(depth[i], path[i], ext), aux[v])
    width = id_width_for(max(g.adj))
    return TwProof(g, k, td, dm, certs, codec, width)


def prove_tw(g: Graph, k: int, witness: TreeDecomposition | None = None) -> dict[int, bytes]:
    """Encoded honest certificates; raises TwExceeded when no width-k decomposition is found."""
    return build_tw(g, k, witness).encoded()


# -- verifier ------------------------------------------------------------------------


@dataclass
class Context:
    """Decoded view shared by the tw checks and protocol extensions."""

    v: int
    me: TwCert
    nbrs: dict  # neighbour id -> TwCert
    view: LocalView


def check_tw(view: LocalView, k: int, codec: TwCodec = TW) -> tuple[list[str], Context | None]:
    """All treewidth conditions at one vertex; returns (violations, decoded context)."""
    try:
        me = codec.decode(view.me.cert)
    except DecodeError:
        return ["DECODE"], None
    nbrs = {}
    for p in view.neighbors:
        try:
            nbrs[p.id] = codec.decode(p.cert)
        except DecodeError:
            return ["DECODE-NEIGHBOR"], None
    v = view.me.id
    bad: list[str] = []
    main = me.main
    d = main.d
    L = main.levels
    own = L[d - 1]
    own_bag = set(own.bag)

    # 1: bag size
    if any(len(l.bag) > 3 * k + 3 for l in L):
        bad.append("C1")
    # 2: v is fresh in its own node
    if v not in own.fresh:
        bad.append("C2")
    # 3: fresh sets
    ok3 = L[0].fresh == L[0].bag
    for j in range(1, d):
        if ok3 and set(L[j].fresh) != set(L[j].bag) - set(L[j - 1].bag):
            ok3 = False
    if not ok3:
        bad.append("C3")
    # 4: occurrences of each vertex along the root path are contiguous
    first: dict = {}
    last: dict = {}
    count: dict = {}
    for j, l in enumerate(L):
        for w in l.bag:
            first.setdefault(w, j)
            last[w] = j
            count[w] = count.get(w, 0) + 1
    if any(last[w] - first[w] + 1 != count[w] for w in count):
        bad.append("C4")
    # 5: edge lists agree on shared pairs. Checking consecutive levels suffices
    # once occurrences are contiguous (4); otherwise 4 already rejects.
    for j in range(1, d):
        shared = set(L[j].bag) & set(L[j - 1].bag)
        e1 = {e for e in L[j].edges if e[0] in shared and e[1] in shared}
        e0 = {e for e in L[j - 1].edges if e[0] in shared and e[1] in shared}
        if e1 != e0:
            bad.append("C5")
            break
    # 6: local edges
    nids = set(nbrs)
    for u in own.bag:
        if u != v and (u in nids) != ((min(u, v), max(u, v)) in own.edges):
            bad.append("C6")
            break
    # 7 and 8: neighbours' depths
    prefix = L[:d]
    for u, cu in nbrs.items():
        du = cu.main.d
        if du >= d and cu.main.levels[:d] != prefix:
            bad.append("C7")
            break
    for u, cu in nbrs.items():
        if cu.main.d <= d and u not in own_bag:
            bad.append("C8")
            break
    # 9 and 10: v is an aux vertex of its own node
    node = own.bag
    mine = me.aux.get(node)
    if mine is None:
        bad.append("C9")
    else:
        trivial = mine.exit == v and mine.fresh == (v,)
        if not trivial and not any(node in cu.aux for cu in nbrs.values()):
            bad.append("C9")
    for cw in [me, *nbrs.values()]:
        aw = cw.aux.get(node)
        if aw is not None and (aw.d_aux != d or aw.fresh != own.fresh):
            bad.append("C10")
            break
    # 11-13 for every aux message
    for i, a in me.aux.items():
        peers = {u: cu.aux[i] for u, cu in nbrs.items() if i in cu.aux}
        if any(b.shared_fields() != a.shared_fields() for b in peers.values()):
            bad.append("C11")
        if a.d_aux > d or L[a.d_aux - 1].bag != i or L[a.d_aux - 1].fresh != a.fresh:
            bad.append("C12")
        if v != a.exit:
            if a.parent is None or a.parent not in peers:
                bad.append("C13a")
            elif peers[a.parent].dist != a.dist - 1:
                bad.append("C13b")
        else:
            if a.parent is not None:
                bad.append("C13a")
            ok = a.dist == 0 and a.sub == a.fresh
            if a.d_aux > 1:
                al = a.in_charge
                ok = ok and al is not None and al in nbrs and nbrs[al].main.d == a.d_aux - 1
            elif a.in_charge is not None:
                ok = False
            if not ok:
                bad.append("C13c")
        sub = {v} if v in a.fresh else set()
        for u, b in peers.items():
            if b.parent == v:
                sub.update(b.sub)
        if sub != set(a.sub):
            bad.append("C13d")
    return _dedupe(bad), Context(v, me, nbrs, view)


def _dedupe(xs: list[str]) -> list[str]:
    return list(dict.fromkeys(xs))


def verify_tw_vertex(view: LocalView, k: int, codec: TwCodec = TW) -> tuple:
    return tuple(check_tw(view, k, codec)[0])


def tw_verifier(k: int, codec: TwCodec = TW):
    def verifier(view: LocalView) -> tuple:
        return verify_tw_vertex(view, k, codec)

    return verifier


def run_tw(g: Graph, certs: Mapping[int, bytes], k: int) -> Verdict:
    return run_round(g, certs, tw_verifier(k))


# -- sizes -----------------------------------------------------------------------------


@dataclass
class SizeReport:
    per_vertex: dict
    max: int
    mean: float


def certificate_bits(certs: Mapping[int, bytes], codec: TwCodec = TW) -> SizeReport:
    per = {v: codec.payload_bits(c) for v, c in certs.items()}
    vals = list(per.values()) or [0]
    return SizeReport(per, max(vals), sum(vals) / len(vals))


# -- claimed decomposition and soundness oracles ------------------------------------


class ClaimError(ValueError):
    pass


def decode_all(certs: Mapping[int, bytes], codec: TwCodec = TW) -> dict:
    try:
        return {v: codec.decode(c) for v, c in certs.items()}
    except DecodeError as exc:
        raise ClaimError(f"undecodable certificate: {exc}") from None


def decode_claimed_decomposition(certs: Mapping[int, bytes], codec: TwCodec = TW) -> TreeDecomposition:
    """The decomposition the certificates claim: nodes B_d(v), parents B_{d-1}(v)."""
    dec = decode_all(certs, codec)
    bags: dict = {}
    parent: dict = {}
    depth: dict = {}
    for v, c in dec.items():
        m = c.main
        node = m.at(m.d).bag
        par = m.at(m.d - 1).bag if m.d > 1 else None
        if node in parent and (parent[node] != par or depth[node] != m.d):
            raise ClaimError(f"conflicting parent claims for node {node}")
        bags[node] = frozenset(node)
        parent[node] = par
        depth[node] = m.d
    roots = [i for i, p in parent.items() if p is None]
    if len(roots) != 1:
        raise ClaimError(f"{len(roots)} root nodes claimed")
    for i, p in parent.items():
        if p is not None and p not in bags:
            raise ClaimError(f"parent {p} of node {i} is claimed by no vertex")
    td = TreeDecomposition(bags, parent, roots[0])
    if len(td.order) != len(bags):
        raise ClaimError("claimed parents do not form a tree")
    return td


def check_claims(g: Graph, certs: Mapping[int, bytes], k: int, codec: TwCodec = TW) -> list[str]:
    """Claims 1-7 on a certificate map; returns failures (empty when all hold)."""
    try:
        dec = decode_all(certs, codec)
    except ClaimError as exc:
        return [f"decode: {exc}"]
    out: list[str] = []
    mains = {v: c.main for v, c in dec.items()}
    own_F = {v: set(m.at(m.d).fresh) for v, m in mains.items()}
    own_B = {v: m.at(m.d).bag for v, m in mains.items()}

    # Claim 1: aux trees
    members: dict = {}
    for v, c in dec.items():
        for i, a in c.aux.items():
            members.setdefault(i, {})[v] = a
    for i, ms in members.items():
        for v, a in ms.items():
            # follow parents within aux vertices of i
            seen, x = set(), v
            while x is not None and x not in seen:
                seen.add(x)
                ax = ms.get(x)
                if ax is None:
                    out.append(f"claim1: node {i}: {v} reaches non-aux vertex {x}")
                    break
                if ax.parent is None:
                    if x != a.exit:
                        out.append(f"claim1: node {i}: tree root {x} is not the exit {a.exit}")
                    break
                if not g.has_edge(x, ax.parent):
                    out.append(f"claim1: node {i}: parent edge {x}-{ax.parent} missing")
                    break
                x = ax.parent
            else:
                if x is not None:
                    out.append(f"claim1: node {i}: parent cycle at {v}")
            if not set(a.fresh) <= set(ms):
                out.append(f"claim1: node {i}: F_i not spanned at {v}")
            if mains[v].d < a.d_aux:
                out.append(f"claim1: node {i}: {v} shallower than d_aux")
            elif a.exit not in mains or mains[v].levels[: a.d_aux] != mains[a.exit].levels[: a.d_aux]:
                out.append(f"claim1: node {i}: suffix of {v} differs from the exit's")
    # Claim 2: F(v)-uniform main messages
    for v, F in own_F.items():
        for u in F:
            if u not in mains or (mains[u].d, mains[u].levels) != (mains[v].d, mains[v].levels):
                out.append(f"claim2: {u} in F({v}) has a different main message")
                break
    # Claim 3: F sets are equal or disjoint
    seen_F: dict = {}
    for v, F in own_F.items():
        for u in F:
            prev = seen_F.setdefault(u, frozenset(F))
            if prev != frozenset(F):
                out.append(f"claim3: vertex {u} in two different F sets")
    # Claim 4: parent suffix exists
    by_prefix: dict = {}
    for u, m in mains.items():
        by_prefix.setdefault(m.levels, []).append(u)
    for v, m in mains.items():
        if m.d > 1 and m.levels[: m.d - 1] not in by_prefix:
            out.append(f"claim4: no vertex holds the parent suffix of {v}")
    # Claim 5: F(u) != F(v) iff B(u) != B(v)
    fb: dict = {}
    for v in mains:
        key_b = own_B[v]
        f = frozenset(own_F[v])
        if fb.setdefault(key_b, f) != f:
            out.append(f"claim5: bag {key_b} claimed with different F sets")
    # Claim 6: valid decomposition of width <= 3k+2
    try:
        td = decode_claimed_decomposition(certs, codec)
        rep = verify_decomposition(td, g, width=3 * k + 2, coherent=True)
        if not rep.ok:
            out.extend(f"claim6: {x}" for x in rep.violations)
    except ClaimError as exc:
        out.append(f"claim6: {exc}")
    # Claim 7: edge sets are the induced edges
    for v, m in mains.items():
        for l in m.levels:
            if l.edges != induced_edges(g, l.bag):
                out.append(f"claim7: E_j of {v} differs from G[B_j]")
                break
    return _dedupe(out)


def decoded_debug(cert: TwCert) -> dict:
    """JSON-friendly view of a decoded certificate."""
    m = cert.main
    return {
        "d": m.d,
        "levels": [
            {"depth": j, "bag": list(l.bag), "fresh": list(l.fresh), "edges": sorted(map(list, l.edges))}
            for j, l in enumerate(m.levels, 1)
        ],
        "aux": [
            {
                "node": list(a.node),
                "d_aux": a.d_aux,
                "exit": a.exit,
                "in_charge": a.in_charge,
                "fresh": list(a.fresh),
                "parent": a.parent,
                "dist": a.dist,
                "sub": list(a.sub),
            }
            for _, a in sorted(cert.aux.items())
        ],
    }


def depth_bound(n: int) -> int:
    return 4 * math.ceil(math.log2(n + 1))
