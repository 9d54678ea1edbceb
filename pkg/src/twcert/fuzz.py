"""Certificate mutation fuzzing with extraction-oracle re-validation of every escape.

The mutation catalogue is versioned: a (catalogue version, seed, trials)
triple reproduces a run exactly.
"""

from __future__ import annotations

import dataclasses
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .bits import BitReader, BitWriter, DecodeError, id_width_for
from .graph import Graph
from .local import Verdict, run_round, update_round
from .protocols import Protocol
from .tw import Aux, Level, Main, TwCert

CATALOGUE_VERSION = 1
KINDS = (
    "bitflip",
    "field",
    "neighbor-swap",
    "depth-shift",
    "class",
    "table",
    "aux-drop",
    "aux-dup",
    "bag-shrink",
    "transplant",
)


class Skip(Exception):
    """The mutation does not apply to this target or cannot be encoded."""


@dataclass
class Mutation:
    vertices: tuple
    path: str
    kind: str
    verdict: str


@dataclass
class Escape:
    trial: int
    kind: str
    path: str
    vertices: tuple
    oracle_failures: list

    @property
    def ok(self) -> bool:
        return not self.oracle_failures


@dataclass
class FuzzReport:
    protocol: str
    trials: int
    seed: int
    catalogue_version: int = CATALOGUE_VERSION
    mutations: list = field(default_factory=list)
    escapes: list = field(default_factory=list)
    skipped: int = 0
    noops: int = 0

    @property
    def failed_escapes(self) -> list:
        return [e for e in self.escapes if not e.ok]

    @property
    def ok(self) -> bool:
        return not self.failed_escapes

    def kind_counts(self) -> dict:
        return dict(Counter(m.kind for m in self.mutations))

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "catalogue_version": self.catalogue_version,
            "seed": self.seed,
            "trials": self.trials,
            "skipped": self.skipped,
            "noops": self.noops,
            "kinds": self.kind_counts(),
            "mutations": [dataclasses.asdict(m) for m in self.mutations],
            "escapes": [dict(dataclasses.asdict(e), ok=e.ok) for e in self.escapes],
            "failed_escapes": len(self.failed_escapes),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, default=str)


# -- helpers on decoded certificates -------------------------------------------------------


def _encode(proto: Protocol, cert: TwCert, id_width: int) -> bytes:
    try:
        data = proto.codec.encode(cert, id_width)
    except (ValueError, KeyError, TypeError, IndexError, AttributeError) as exc:
        raise Skip(f"unencodable: {exc}") from None
    return data


def _decode(proto: Protocol, data: bytes) -> TwCert:
    try:
        return proto.codec.decode(data)
    except DecodeError:
        raise Skip("target undecodable") from None


def _perturb_int(x: int, rng: random.Random) -> int:
    return rng.choice([x + 1, x - 1, x + rng.randint(2, 9), 0, -x, x ^ (1 << rng.randrange(8))])


def _perturb(x, rng: random.Random, ids: Sequence[int], depth: int = 0):
    """Random perturbation of one leaf of a nested value; returns (new value, path)."""
    if isinstance(x, bool):
        return (not x), "flag"
    if isinstance(x, int):
        if rng.random() < 0.3 and ids:
            return rng.choice(ids), "id"
        return _perturb_int(x, rng), "int"
    if x is None:
        return rng.choice(ids), "none->id"
    if isinstance(x, bytes):
        if not x:
            return b"\x01", "bytes"
        b = bytearray(x)
        i = rng.randrange(len(b) * 8)
        b[i // 8] ^= 1 << (i % 8)
        return bytes(b), "bytes"
    if isinstance(x, frozenset):
        items = sorted(x)
        if items and rng.random() < 0.5:
            return frozenset(items[:-1]) if rng.random() < 0.5 else frozenset(items[1:]), "set-drop"
        a, b = sorted(rng.sample(list(ids), 2)) if len(ids) > 1 else (0, 1)
        return x ^ {(a, b)}, "set-toggle"
    if dataclasses.is_dataclass(x):
        fs = [f.name for f in dataclasses.fields(x)]
        name = rng.choice(fs)
        val, p = _perturb(getattr(x, name), rng, ids, depth + 1)
        return dataclasses.replace(x, **{name: val}), f"{name}.{p}"
    if isinstance(x, tuple):
        if not x or (depth > 0 and rng.random() < 0.15):
            op = rng.choice(["drop", "add"]) if x else "add"
            if op == "drop":
                i = rng.randrange(len(x))
                return x[:i] + x[i + 1 :], "tuple-drop"
            extra = rng.choice(ids) if (not x or isinstance(x[0], int)) else x[rng.randrange(len(x))]
            return tuple(sorted(x + (extra,))) if all(isinstance(e, int) for e in x) else x + (extra,), "tuple-add"
        i = rng.randrange(len(x))
        val, p = _perturb(x[i], rng, ids, depth + 1)
        return x[:i] + (val,) + x[i + 1 :], f"[{i}].{p}"
    raise Skip(f"cannot perturb {type(x).__name__}")


def _mutate_class(alg, c, rng: random.Random):
    w = BitWriter(1)
    alg.write(w, c)
    bits = list(w.bitstring())
    if not bits:
        raise Skip("empty class")
    i = rng.randrange(len(bits))
    bits[i] = "1" if bits[i] == "0" else "0"
    s = "".join(bits)
    r = BitReader.from_bits(s)
    try:
        return alg.read(r, c[0])
    except DecodeError:
        raise Skip("class mutation not decodable") from None


def _class_slots(proto: Protocol, cert: TwCert) -> list:
    """(path, getter, setter) for every property class in a decoded certificate."""
    slots = []
    ext = cert.main.ext
    if proto.name == "mso":
        for idx in (0, 1):
            slots.append((f"main.ext[{idx}]", ("main", idx)))
        for node, a in cert.aux.items():
            slots.append((f"aux{list(node)}.class_g", ("aux", node, 0)))
            for j in range(len(a.ext[1])):
                slots.append((f"aux{list(node)}.per_w[{j}]", ("aux", node, 1, j)))
    elif proto.name == "opt" and ext is not None:
        slots.append(("main.class_g", ("main", "class_g")))
        slots.append(("main.class_v", ("main", "class_v")))
        for node, a in cert.aux.items():
            slots.append((f"aux{list(node)}.class_g", ("aux", node, "class_g")))
            for j in range(len(a.ext.per_w)):
                slots.append((f"aux{list(node)}.per_w[{j}].class", ("aux", node, "per_w", j, 0)))
    return slots


def _get(obj, key):
    if isinstance(key, str):
        return getattr(obj, key)
    return obj[key]


def _set(obj, key, val):
    if isinstance(key, str):
        return dataclasses.replace(obj, **{key: val})
    return obj[:key] + (val,) + obj[key + 1 :]


def _update_path(obj, keys, fn):
    if not keys:
        return fn(obj)
    return _set(obj, keys[0], _update_path(_get(obj, keys[0]), keys[1:], fn))


def _apply_slot(cert: TwCert, slot, fn) -> TwCert:
    if slot[0] == "main":
        ext = _update_path(cert.main.ext, list(slot[1:]), fn)
        return TwCert(dataclasses.replace(cert.main, ext=ext), cert.aux)
    node = slot[1]
    a = cert.aux[node]
    ext = _update_path(a.ext, list(slot[2:]), fn)
    aux = dict(cert.aux)
    aux[node] = dataclasses.replace(a, ext=ext)
    return TwCert(cert.main, aux)


def _table_slots(cert: TwCert) -> list:
    slots = [("main.table_v", ("main", "table_v"))]
    for node, a in cert.aux.items():
        slots.append((f"aux{list(node)}.table_g", ("aux", node, "table_g")))
        for j in range(len(a.ext.per_w)):
            slots.append((f"aux{list(node)}.per_w[{j}].table", ("aux", node, "per_w", j, 2)))
    return slots


def _perturb_table(alg, table: tuple, rng: random.Random) -> tuple:
    entries = list(table)
    op = rng.choice(["inc", "dec", "drop", "add", "reclass"]) if entries else "add"
    if op in ("inc", "dec"):
        i = rng.randrange(len(entries))
        c, v = entries[i]
        entries[i] = (c, v + (1 if op == "inc" else -1) * rng.choice([1, 1, 2, 5]))
    elif op == "drop":
        entries.pop(rng.randrange(len(entries)))
    else:
        if not entries:
            raise Skip("no class to derive from")
        i = rng.randrange(len(entries))
        c, v = entries[i]
        c2 = _mutate_class(alg, c, rng)
        if op == "reclass":
            entries.pop(i)
        if any(c2 == e[0] for e in entries):
            raise Skip("class already listed")
        entries.append((c2, v + rng.choice([0, 1, -1])))
    return tuple(sorted(entries))


def _drop_from_level(lvl: Level, u: int) -> Level:
    if u not in lvl.bag:
        return lvl
    idx = lvl.bag.index(u)
    bag = tuple(x for x in lvl.bag if x != u)
    fresh = tuple(x for x in lvl.fresh if x != u)
    edges = frozenset(e for e in lvl.edges if u not in e)
    extra = lvl.extra
    if extra is not None and hasattr(extra, "xmask"):
        low = extra.xmask & ((1 << idx) - 1)
        high = extra.xmask >> (idx + 1)
        extra = dataclasses.replace(
            extra, xmask=low | (high << idx), weights=extra.weights[:idx] + extra.weights[idx + 1 :]
        )
    return Level(bag, fresh, edges, extra)


# -- the fuzzer ----------------------------------------------------------------------------


class Fuzzer:
    def __init__(
        self,
        g: Graph,
        certs: Mapping[int, bytes],
        proto: Protocol,
        seed: int = 0,
        alternatives: Sequence[Mapping[int, bytes]] = (),
        kinds: Sequence[str] = KINDS,
    ):
        self.g = g
        self.certs = dict(certs)
        self.proto = proto
        self.rng = random.Random(seed)
        self.seed = seed
        self.alternatives = [dict(a) for a in alternatives]
        self.kinds = [k for k in kinds if self._applies(k)]
        self.ids = g.vertices
        self.id_width = id_width_for(max(g.adj))
        self.base = run_round(g, self.certs, proto.verifier)

    def _applies(self, kind: str) -> bool:
        if kind == "class":
            return self.proto.name in ("mso", "opt")
        if kind == "table":
            return self.proto.name == "opt"
        if kind == "transplant":
            return bool(self.alternatives)
        return True

    # each mutator returns (changed certs, path)
    def _bitflip(self, v):
        data = bytearray(self.certs[v])
        if not data:
            raise Skip("empty certificate")
        n = self.rng.choice([1, 1, 1, 2, 3])
        for _ in range(n):
            i = self.rng.randrange(len(data) * 8)
            data[i // 8] ^= 1 << (i % 8)
        return {v: bytes(data)}, f"bits x{n}"

    def _field(self, v):
        cert = _decode(self.proto, self.certs[v])
        if cert.aux and self.rng.random() < 0.5:
            node = self.rng.choice(sorted(cert.aux))
            a, p = _perturb(cert.aux[node], self.rng, self.ids)
            aux = dict(cert.aux)
            aux[node] = a
            new = TwCert(cert.main, aux)
            path = f"aux{list(node)}.{p}"
        else:
            m, p = _perturb(cert.main, self.rng, self.ids)
            new = TwCert(m, cert.aux)
            path = f"main.{p}"
        return {v: _encode(self.proto, new, self.id_width)}, path

    def _neighbor_swap(self, v):
        nbrs = sorted(self.g.adj[v])
        if not nbrs:
            raise Skip("isolated vertex")
        u = self.rng.choice(nbrs)
        return {v: self.certs[u], u: self.certs[v]}, f"swap {v}<->{u}"

    def _depth_shift(self, v):
        cert = _decode(self.proto, self.certs[v])
        m = cert.main
        if self.rng.random() < 0.5 and m.d > 1:
            new = Main(m.d - 1, m.levels[:-1], m.ext)
            path = "main.d-1"
        else:
            new = Main(m.d + 1, m.levels + (m.levels[-1],), m.ext)
            path = "main.d+1"
        return {v: _encode(self.proto, TwCert(new, cert.aux), self.id_width)}, path

    def _class(self, v):
        cert = _decode(self.proto, self.certs[v])
        slots = _class_slots(self.proto, cert)
        path, slot = self.rng.choice(slots)
        alg = self.proto.alg
        new = _apply_slot(cert, slot, lambda c: _mutate_class(alg, c, self.rng))
        return {v: _encode(self.proto, new, self.id_width)}, path

    def _table(self, v):
        cert = _decode(self.proto, self.certs[v])
        path, slot = self.rng.choice(_table_slots(cert))
        alg = self.proto.alg
        new = _apply_slot(cert, slot, lambda t: _perturb_table(alg, t, self.rng))
        return {v: _encode(self.proto, new, self.id_width)}, path

    def _aux_drop(self, v):
        cert = _decode(self.proto, self.certs[v])
        if not cert.aux:
            raise Skip("no aux message")
        node = self.rng.choice(sorted(cert.aux))
        aux = {i: a for i, a in cert.aux.items() if i != node}
        return {v: _encode(self.proto, TwCert(cert.main, aux), self.id_width)}, f"aux{list(node)} dropped"

    def _aux_dup(self, v):
        cert = _decode(self.proto, self.certs[v])
        pool = []
        for u in sorted(self.g.adj[v]):
            cu = _decode(self.proto, self.certs[u])
            pool.extend(a for i, a in cu.aux.items() if i not in cert.aux)
        if not pool:
            raise Skip("no foreign aux message nearby")
        a = self.rng.choice(pool)
        if self.rng.random() < 0.5:
            a = dataclasses.replace(a, parent=self.rng.choice(sorted(self.g.adj[v])))
        aux = dict(cert.aux)
        aux[a.node] = a
        return {v: _encode(self.proto, TwCert(cert.main, aux), self.id_width)}, f"aux{list(a.node)} copied"

    def _bag_shrink(self, v):
        cert = _decode(self.proto, self.certs[v])
        m = cert.main
        own = m.at(m.d)
        others = [u for u in own.bag if u != v]
        if not others:
            raise Skip("singleton bag")
        u = self.rng.choice(others)
        levels = tuple(_drop_from_level(l, u) for l in m.levels)
        new = TwCert(Main(m.d, levels, m.ext), cert.aux)
        return {v: _encode(self.proto, new, self.id_width)}, f"bag-{u}"

    def _transplant(self, v):
        alt = self.rng.choice(self.alternatives)
        radius = self.rng.choice([0, 1, 1, 2])
        ball = {v}
        for _ in range(radius):
            ball |= {u for x in ball for u in self.g.adj[x]}
        if self.rng.random() < 0.2:
            ball = set(self.g.adj)
        return {u: alt[u] for u in ball}, f"transplant r={radius if len(ball) < self.g.n else 'all'}"

    def mutate(self, kind: str, v: int):
        fn = getattr(self, "_" + kind.replace("-", "_"))
        return fn(v)

    def run(self, trials: int, record_mutations: bool = True) -> FuzzReport:
        rep = FuzzReport(self.proto.name, trials, self.seed)
        if not self.kinds:
            return rep
        for t in range(trials):
            kind = self.rng.choice(self.kinds)
            targets = [self.rng.choice(self.ids)]
            if self.rng.random() < 0.15:
                targets.append(self.rng.choice(sorted(self.g.adj[targets[0]]) or self.ids))
            changed: dict = {}
            paths = []
            try:
                for v in targets:
                    before = dict(self.certs)
                    self.certs.update(changed)
                    try:
                        delta, path = self.mutate(kind, v)
                    finally:
                        self.certs = before
                    changed.update(delta)
                    paths.append(path)
            except Skip:
                rep.skipped += 1
                continue
            changed = {u: c for u, c in changed.items() if c != self.certs[u]}
            if not changed:
                rep.noops += 1
                continue
            mutated = dict(self.certs)
            mutated.update(changed)
            verdict = update_round(self.g, mutated, self.proto.verifier, self.base, changed)
            path = " | ".join(paths)
            if verdict.global_accept:
                fails = self.proto.oracle(self.g, mutated)
                rep.escapes.append(Escape(t, kind, path, tuple(sorted(changed)), fails))
                summary = "accept"
            else:
                causes = sorted(verdict.causes())
                summary = "reject:" + ",".join(causes)
            if record_mutations:
                rep.mutations.append(Mutation(tuple(sorted(changed)), path, kind, summary))
        return rep


def fuzz(
    g: Graph,
    certs: Mapping[int, bytes],
    proto: Protocol,
    trials: int,
    seed: int = 0,
    alternatives: Sequence[Mapping[int, bytes]] = (),
    kinds: Sequence[str] = KINDS,
) -> FuzzReport:
    return Fuzzer(g, certs, proto, seed, alternatives, kinds).run(trials)


# -- locality ---------------------------------------------------------------------------------


def distances_from(g: Graph, src: int) -> dict:
    dist = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for x in frontier:
            for u in g.adj[x]:
                if u not in dist:
                    dist[u] = dist[x] + 1
                    nxt.append(u)
        frontier = nxt
    return dist


def locality_trials(g: Graph, certs: Mapping[int, bytes], verifier, trials: int, seed: int = 0) -> list:
    """Swap the certificates of two vertices far from a probe vertex and re-run the probe.

    Returns the list of (probe, swapped pair) whose verdict changed; the probe's
    verdict is recomputed from scratch, not through the incremental update.
    """
    rng = random.Random(seed)
    vs = g.vertices
    base = run_round(g, certs, verifier)
    dist = {v: distances_from(g, v) for v in vs}
    changed = []
    done = 0
    attempts = 0
    while done < trials and attempts < 20 * trials + 100:
        attempts += 1
        v = rng.choice(vs)
        far = [u for u in vs if dist[v].get(u, 99) >= 2]
        if len(far) < 2:
            continue
        a, b = rng.sample(far, 2)
        swapped = dict(certs)
        swapped[a], swapped[b] = certs[b], certs[a]
        after = run_round(g, swapped, verifier, only=[v])
        if after.per_vertex[v] != base.per_vertex[v]:
            changed.append((v, (a, b)))
        done += 1
    return changed
