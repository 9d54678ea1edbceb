"""One-round LOCAL verification: views, verdicts and the synchronous round."""

from __future__ import annotations

import base64
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .graph import Graph

ACCEPT: tuple[str, ...] = ()


class MissingCertificate(KeyError):
    pass


@dataclass(frozen=True)
class Peer:
    id: int
    label: bytes
    cert: bytes
    weight: int = 1


@dataclass(frozen=True)
class LocalView:
    """Everything vertex ``me.id`` sees: itself plus its neighbours, ascending by ID."""

    me: Peer
    neighbors: tuple[Peer, ...]

    def neighbor_ids(self) -> frozenset:
        return frozenset(p.id for p in self.neighbors)


# A verifier maps a view to the tuple of violated condition ids; empty means accept.
Verifier = Callable[[LocalView], tuple]


@dataclass
class Verdict:
    per_vertex: dict

    @property
    def global_accept(self) -> bool:
        return all(not c for c in self.per_vertex.values())

    def rejecting(self) -> list[int]:
        return sorted(v for v, c in self.per_vertex.items() if c)

    def accepts(self, v: int) -> bool:
        return not self.per_vertex[v]

    def causes(self) -> dict:
        out: dict = {}
        for c in self.per_vertex.values():
            for x in c:
                out[x] = out.get(x, 0) + 1
        return out


def view_of(g: Graph, certs: Mapping[int, bytes], v: int) -> LocalView:
    def peer(u: int) -> Peer:
        try:
            c = certs[u]
        except KeyError:
            raise MissingCertificate(u) from None
        return Peer(u, g.label(u), c, g.weight(u))

    return LocalView(peer(v), tuple(peer(u) for u in sorted(g.adj[v])))


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("TWCERT_THREADS", "1")))
    except ValueError:
        return 1


def run_round(
    g: Graph,
    certs: Mapping[int, bytes],
    verifier: Verifier,
    only: Iterable[int] | None = None,
) -> Verdict:
    """Evaluate ``verifier`` on the view of every vertex (or of ``only``)."""
    targets = g.vertices if only is None else sorted(set(only))
    missing = [v for v in g.adj if v not in certs]
    if missing:
        raise MissingCertificate(missing[0])
    threads = thread_cap()
    if threads > 1 and len(targets) > 64:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda v: tuple(verifier(view_of(g, certs, v))), targets))
    else:
        results = [tuple(verifier(view_of(g, certs, v))) for v in targets]
    return Verdict(dict(zip(targets, results)))


def update_round(
    g: Graph,
    certs: Mapping[int, bytes],
    verifier: Verifier,
    base: Verdict,
    changed: Iterable[int],
) -> Verdict:
    """Verdict after changing the certificates of ``changed``.

    Only closed neighbourhoods of changed vertices are re-evaluated; every
    other view is identical to the one behind ``base``.
    """
    touched = set()
    for v in changed:
        touched.add(v)
        touched |= g.adj[v]
    fresh = run_round(g, certs, verifier, only=touched)
    out = dict(base.per_vertex)
    out.update(fresh.per_vertex)
    return Verdict(out)


def certs_to_json(certs: Mapping[int, bytes], debug: Mapping[int, object] | None = None) -> dict:
    doc = {"certificates": {str(v): base64.b64encode(c).decode() for v, c in sorted(certs.items())}}
    if debug is not None:
        doc["decoded"] = {str(v): debug[v] for v in sorted(debug)}
    return doc


def certs_from_json(doc: Mapping) -> dict[int, bytes]:
    src = doc.get("certificates", doc)
    return {int(v): base64.b64decode(c) for v, c in src.items()}
