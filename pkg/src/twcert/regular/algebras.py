"""Hand-written homomorphism-class algebras.

Classes are plain hashable tuples whose first entry is the number of
terminals. ``compose`` is a function of the glue matrix and the operand
classes only. For subset properties it returns ``None`` when the operands
disagree on whether an identified terminal belongs to X.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from ..bits import BitReader, BitWriter, DecodeError
from .terminal import GlueMatrix, TerminalGraph


class Algebra:
    pid: str = ""
    takes_subset: bool = False
    max_terminals: int = 24

    def base(self, t: int, edges, xmask: int = 0):
        raise NotImplementedError

    def compose(self, f: GlueMatrix, c1, c2=None):
        raise NotImplementedError

    def accepting(self, c) -> bool:
        raise NotImplementedError

    def term(self, c) -> int:
        """Bitmask of terminal positions in X (always 0 for graph properties)."""
        return 0

    def viable(self, c) -> bool:
        """False when no glue sequence can turn ``c`` into an accepting class."""
        return True

    def write(self, w: BitWriter, c) -> None:
        raise NotImplementedError

    def read(self, r: BitReader, t: int):
        raise NotImplementedError

    def direct(self, tg: TerminalGraph, X=frozenset()):
        """Class computed from the whole terminal graph, independent of any expression."""
        raise NotImplementedError

    def universe(self, t: int):
        """Every class over t terminals (small t only)."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<algebra {self.pid}>"


def _forgotten(col, t: int) -> list[int]:
    keep = {m - 1 for m in col if m}
    return [a for a in range(t) if a not in keep]


def _xmerge(f: GlueMatrix, masks):
    """Result X-mask for the rows, or None if identified terminals disagree."""
    out = 0
    for r, row in enumerate(f.rows):
        bits = {(masks[c] >> (m - 1)) & 1 for c, m in enumerate(row) if m}
        if len(bits) != 1:
            return None
        out |= bits.pop() << r
    return out


# -- non-q-colorability ------------------------------------------------------


class NonColorability(Algebra):
    """Class = set of proper q-colourings of the terminals that extend to the whole graph,
    stored as a packed boolean tensor of shape (q,)*t. Accepting iff empty."""

    takes_subset = False
    max_terminals = 12

    def __init__(self, q: int):
        self.q = q
        self.pid = f"non-{q}-colorability"

    def _pack(self, arr: np.ndarray, t: int):
        return (t, np.packbits(np.asarray(arr, dtype=bool).reshape(-1)).tobytes())

    def tensor(self, c) -> np.ndarray:
        return _unpack(c[1], self.q, c[0])

    def base(self, t, edges, xmask=0):
        if t == 0:
            return self._pack(np.array(True), 0)
        idx = np.indices((self.q,) * t)
        ok = np.ones((self.q,) * t, dtype=bool)
        for a, b in edges:
            ok &= idx[a] != idx[b]
        return self._pack(ok, t)

    def _project(self, c, col):
        t = c[0]
        arr = self.tensor(c)
        forget = tuple(_forgotten(col, t))
        if forget:
            arr = arr.any(axis=forget)
        keep = [m - 1 for m in col if m]
        remaining = sorted(keep)
        arr = arr.transpose([remaining.index(x) for x in keep]) if keep else arr
        return arr.reshape([self.q if m else 1 for m in col])

    def compose(self, f, c1, c2=None):
        t = len(f.rows)
        res = self._project(c1, f.column(0))
        if f.arity == 2:
            res = res & self._project(c2, f.column(1))
        return self._pack(np.broadcast_to(res, (self.q,) * t), t)

    def accepting(self, c) -> bool:
        return not self.tensor(c).any()

    def write(self, w, c):
        t, raw = c
        size = self.q**t
        w.parts.append("".join(format(b, "08b") for b in raw)[:size])

    def read(self, r, t):
        if t > self.max_terminals:
            raise DecodeError(f"{t} terminals exceeds class limit")
        size = self.q**t
        bits = r._take(size)
        arr = np.frombuffer(bits.encode(), dtype=np.uint8) == ord("1")
        return self._pack(arr, t)

    def direct(self, tg, X=frozenset()):
        verts = sorted(tg.vertices, key=repr)
        pos = {v: i for i, v in enumerate(verts)}
        adj = {v: [] for v in verts}
        for a, b in tg.edges:
            adj[a].append(b)
            adj[b].append(a)
        t = tg.tau
        found = np.zeros((self.q,) * t if t else (), dtype=bool)
        col = [0] * len(verts)

        def rec(i):
            if i == len(verts):
                key = tuple(col[pos[x]] for x in tg.terminals)
                found[key] = True
                return
            v = verts[i]
            for c in range(self.q):
                if all(col[pos[u]] != c for u in adj[v] if pos[u] < i):
                    col[i] = c
                    rec(i + 1)

        rec(0)
        return self._pack(found, t)

    def universe(self, t):
        size = self.q**t
        for bits in range(1 << size):
            arr = np.array([(bits >> i) & 1 for i in range(size)], dtype=bool)
            yield self._pack(arr, t)


@lru_cache(maxsize=65536)
def _unpack(raw: bytes, q: int, t: int) -> np.ndarray:
    size = q**t
    flat = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=size).astype(bool)
    return flat.reshape((q,) * t) if t else flat.reshape(())


# -- independent set -----------------------------------------------------------


class IndependentSet(Algebra):
    """Class = (t, X is independent, X restricted to terminals)."""

    pid = "independent-set"
    takes_subset = True

    def base(self, t, edges, xmask=0):
        ok = not any((xmask >> a) & 1 and (xmask >> b) & 1 for a, b in edges)
        return (t, ok, xmask)

    def compose(self, f, c1, c2=None):
        ops = (c1,) if f.arity == 1 else (c1, c2)
        x = _xmerge(f, [c[2] for c in ops])
        if x is None:
            return None
        return (len(f.rows), all(c[1] for c in ops), x)

    def accepting(self, c):
        return c[1]

    def term(self, c):
        return c[2]

    def viable(self, c):
        return c[1]

    def write(self, w, c):
        w.flag(c[1])
        w.mask(c[2], c[0])

    def read(self, r, t):
        if t > self.max_terminals:
            raise DecodeError(f"{t} terminals exceeds class limit")
        ok = r.flag()
        return (t, ok, r.mask(t))

    def direct(self, tg, X=frozenset()):
        ok = not any(a in X and b in X for a, b in tg.edges)
        mask = sum(1 << r for r, v in enumerate(tg.terminals) if v in X)
        return (tg.tau, ok, mask)

    def universe(self, t):
        for ok, x in product((False, True), range(1 << t)):
            yield (t, ok, x)


# -- dominating set ---------------------------------------------------------------


class DominatingSet(Algebra):
    """Class = (t, every non-terminal is dominated, X on terminals, dominated terminals).

    A terminal dropped by a glue can gain no further neighbours, so it must
    already be dominated; otherwise the class becomes invalid.
    """

    pid = "dominating-set"
    takes_subset = True

    def base(self, t, edges, xmask=0):
        dom = xmask
        for a, b in edges:
            if (xmask >> a) & 1:
                dom |= 1 << b
            if (xmask >> b) & 1:
                dom |= 1 << a
        return (t, True, xmask, dom)

    def compose(self, f, c1, c2=None):
        ops = (c1,) if f.arity == 1 else (c1, c2)
        x = _xmerge(f, [c[2] for c in ops])
        if x is None:
            return None
        ok = all(c[1] for c in ops)
        for k, c in enumerate(ops):
            for a in _forgotten(f.column(k), c[0]):
                if not (c[3] >> a) & 1:
                    ok = False
        dom = 0
        for r, row in enumerate(f.rows):
            if any(m and (ops[k][3] >> (m - 1)) & 1 for k, m in enumerate(row)):
                dom |= 1 << r
        return (len(f.rows), ok, x, dom)

    def accepting(self, c):
        return c[1] and c[3] == (1 << c[0]) - 1

    def term(self, c):
        return c[2]

    def viable(self, c):
        return c[1]

    def write(self, w, c):
        w.flag(c[1])
        w.mask(c[2], c[0])
        w.mask(c[3], c[0])

    def read(self, r, t):
        if t > self.max_terminals:
            raise DecodeError(f"{t} terminals exceeds class limit")
        ok = r.flag()
        x = r.mask(t)
        dom = r.mask(t)
        if x & ~dom:
            raise DecodeError("X vertex not marked dominated")
        return (t, ok, x, dom)

    def direct(self, tg, X=frozenset()):
        dominated = set(X)
        for a, b in tg.edges:
            if a in X:
                dominated.add(b)
            if b in X:
                dominated.add(a)
        terms = set(tg.terminals)
        ok = all(v in dominated for v in tg.vertices if v not in terms)
        mask = sum(1 << r for r, v in enumerate(tg.terminals) if v in X)
        dom = sum(1 << r for r, v in enumerate(tg.terminals) if v in dominated)
        return (tg.tau, ok, mask, dom)

    def universe(self, t):
        for ok, x, d in product((False, True), range(1 << t), range(1 << t)):
            if not x & ~d:
                yield (t, ok, x, d)


ALGEBRAS = {
    "non-3-colorability": lambda: NonColorability(3),
    "non-2-colorability": lambda: NonColorability(2),
    "independent-set": IndependentSet,
    "dominating-set": DominatingSet,
}


def get_algebra(pid: str) -> Algebra:
    try:
        return ALGEBRAS[pid]()
    except KeyError:
        raise ValueError(f"unknown property {pid!r}; choose from {sorted(ALGEBRAS)}") from None
