"""Vertex-labelled, vertex-weighted simple graphs plus generators and file I/O."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph over integer vertex identifiers.

    ``adj`` maps each vertex to the frozenset of its neighbours. Labels are
    byte strings (empty by default); weights default to 1.
    """

    adj: Mapping[int, frozenset]
    labels: Mapping[int, bytes] = field(default_factory=dict)
    weights: Mapping[int, int] = field(default_factory=dict)

    @classmethod
    def from_edges(
        cls,
        vertices: Iterable[int],
        edges: Iterable[tuple[int, int]],
        labels: Mapping[int, bytes] | None = None,
        weights: Mapping[int, int] | None = None,
    ) -> "Graph":
        adj: dict[int, set] = {v: set() for v in vertices}
        for u, v in edges:
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        return cls(
            {v: frozenset(ns) for v, ns in adj.items()},
            dict(labels or {}),
            dict(weights or {}),
        )

    @property
    def vertices(self) -> list[int]:
        return sorted(self.adj)

    @property
    def n(self) -> int:
        return len(self.adj)

    def __len__(self) -> int:
        return len(self.adj)

    def __contains__(self, v: object) -> bool:
        return v in self.adj

    def edges(self) -> list[tuple[int, int]]:
        return sorted((u, v) for u, ns in self.adj.items() for v in ns if u < v)

    @property
    def m(self) -> int:
        return sum(len(ns) for ns in self.adj.values()) // 2

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj.get(u, ())

    def label(self, v: int) -> bytes:
        return self.labels.get(v, b"")

    def weight(self, v: int) -> int:
        return self.weights.get(v, 1)

    def with_labels(self, labels: Mapping[int, bytes]) -> "Graph":
        return Graph(self.adj, dict(labels), self.weights)

    def with_weights(self, weights: Mapping[int, int]) -> "Graph":
        return Graph(self.adj, self.labels, dict(weights))

    def induced(self, vs: Iterable[int]) -> "Graph":
        keep = set(vs)
        return Graph(
            {v: self.adj[v] & keep for v in keep},
            {v: b for v, b in self.labels.items() if v in keep},
            {v: w for v, w in self.weights.items() if v in keep},
        )

    def relabel(self, mapping: Mapping[int, int]) -> "Graph":
        """Rename vertices; ``mapping`` must be injective on the vertex set."""
        return Graph(
            {mapping[v]: frozenset(mapping[u] for u in ns) for v, ns in self.adj.items()},
            {mapping[v]: b for v, b in self.labels.items()},
            {mapping[v]: w for v, w in self.weights.items()},
        )


def neighbors(g: Graph, v: int) -> frozenset:
    try:
        return g.adj[v]
    except KeyError:
        raise GraphError(f"unknown vertex {v}") from None


def components(g: Graph, within: Iterable[int] | None = None) -> list[set]:
    """Connected components of ``g`` (or of the subgraph induced by ``within``)."""
    todo = set(g.adj) if within is None else set(within)
    out = []
    while todo:
        start = todo.pop()
        comp = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in g.adj[x]:
                if y in todo:
                    todo.discard(y)
                    comp.add(y)
                    stack.append(y)
        out.append(comp)
    return out


def is_connected(g: Graph) -> bool:
    return len(components(g)) == 1


@dataclass
class ValidationReport:
    ok: bool
    simple: bool
    connected: bool
    distinct_ids: bool
    problems: list[str]


def validate_graph(g: Graph) -> ValidationReport:
    problems = []
    simple = True
    for v, ns in g.adj.items():
        if v in ns:
            simple = False
            problems.append(f"self-loop at {v}")
        for u in ns:
            if u not in g.adj:
                simple = False
                problems.append(f"edge ({v},{u}) has unknown endpoint {u}")
            elif v not in g.adj[u]:
                simple = False
                problems.append(f"asymmetric adjacency between {v} and {u}")
    ids = list(g.adj)
    distinct = len(ids) == len(set(ids)) and all(isinstance(v, int) and v >= 0 for v in ids)
    if not distinct:
        problems.append("vertex identifiers are not distinct non-negative integers")
    connected = bool(g.adj) and simple and is_connected(g)
    if not connected:
        problems.append("graph is not connected")
    return ValidationReport(simple and connected and distinct, simple, connected, distinct, problems)


# -- generators ------------------------------------------------------------

GENERATOR_KINDS = ("partial-k-tree", "grid", "clique", "cycle", "path", "random-connected")


def random_ids(n: int, rng: random.Random) -> list[int]:
    """n distinct identifiers drawn from [0, n^3)."""
    return rng.sample(range(max(n**3, 1)), n)


def generate(kind: str, params: Mapping, seed: int = 0):
    """Build a test graph.

    Returns ``(graph, witness)`` where ``witness`` is a width-k
    :class:`~twcert.decomposition.TreeDecomposition` for ``partial-k-tree``
    and ``None`` for other kinds. Vertex identifiers are random distinct
    integers in ``[0, n^3)``.
    """
    rng = random.Random(f"{kind}:{seed}")
    p = dict(params)
    if kind == "partial-k-tree":
        return _partial_k_tree(int(p["n"]), int(p["k"]), float(p.get("keep", 0.6)), rng)
    if kind == "grid":
        rows, cols = int(p["rows"]), int(p.get("cols", p["rows"]))
        if rows < 1 or cols < 1:
            raise GraphError("grid needs rows, cols >= 1")
        idx = [(r, c) for r in range(rows) for c in range(cols)]
        edges = [((r, c), (r, c + 1)) for r in range(rows) for c in range(cols - 1)]
        edges += [((r, c), (r + 1, c)) for r in range(rows - 1) for c in range(cols)]
        return _assemble(idx, edges, rng), None
    if kind in ("clique", "cycle", "path"):
        m = int(p.get("m", p.get("n", 0)))
        if m < 1 or (kind == "cycle" and m < 3):
            raise GraphError(f"invalid size {m} for {kind}")
        idx = list(range(m))
        if kind == "clique":
            edges = [(a, b) for a in idx for b in idx if a < b]
        else:
            edges = [(a, a + 1) for a in range(m - 1)]
            if kind == "cycle":
                edges.append((m - 1, 0))
        return _assemble(idx, edges, rng), None
    if kind == "random-connected":
        n = int(p["n"])
        if n < 1:
            raise GraphError("n must be >= 1")
        prob = float(p.get("p", 0.2))
        idx = list(range(n))
        edges = {(rng.randrange(i), i) for i in range(1, n)}
        for a in range(n):
            for b in range(a + 1, n):
                if rng.random() < prob:
                    edges.add((a, b))
        return _assemble(idx, sorted(edges), rng), None
    raise GraphError(f"unknown generator kind {kind!r}")


def _assemble(idx, edges, rng):
    ids = random_ids(len(idx), rng)
    name = dict(zip(idx, ids))
    return Graph.from_edges(ids, [(name[a], name[b]) for a, b in edges])


def _partial_k_tree(n: int, k: int, keep: float, rng: random.Random):
    from .decomposition import TreeDecomposition

    if n < 1 or k < 1:
        raise GraphError("partial-k-tree needs n >= 1 and k >= 1")
    ids = random_ids(n, rng)
    base = min(n, k + 1)
    edges = {(a, b) for a in range(base) for b in range(a + 1, base)}
    bags = {0: frozenset(range(base))}
    parent: dict[int, int | None] = {0: None}
    # each k-clique available for attachment, with the node whose bag holds it
    cliques: list[tuple[tuple[int, ...], int]] = []
    if n > k:
        cliques = [(tuple(x for x in range(base) if x != drop), 0) for drop in range(base)]
    for v in range(base, n):
        clique, host = rng.choice(cliques)
        node = v - base + 1
        bags[node] = frozenset(clique) | {v}
        parent[node] = host
        anchor = rng.choice(clique)
        for u in clique:
            if u == anchor or rng.random() < keep:
                edges.add((min(u, v), max(u, v)))
        for drop in clique:
            cliques.append((tuple(sorted((set(clique) - {drop}) | {v})), node))
    # sparsify the initial clique while keeping it connected
    if base > 2:
        first = [(a, b) for a, b in sorted(edges) if b < base]
        spanning = {(rng.randrange(b), b) for b in range(1, base)}
        for e in first:
            if e not in spanning and rng.random() >= keep:
                edges.discard(e)
    name = dict(enumerate(ids))
    g = Graph.from_edges(ids, [(name[a], name[b]) for a, b in edges])
    td = TreeDecomposition(
        {i: frozenset(name[x] for x in b) for i, b in bags.items()}, parent, 0
    )
    return g, td


# -- serialization ----------------------------------------------------------


def graph_to_json(g: Graph) -> dict:
    return {
        "vertices": [
            {"id": v, "label": g.label(v).hex(), "weight": g.weight(v)} for v in g.vertices
        ],
        "edges": [list(e) for e in g.edges()],
    }


def graph_from_json(doc: Mapping) -> Graph:
    vs, labels, weights = [], {}, {}
    for entry in doc["vertices"]:
        if isinstance(entry, int):
            vs.append(entry)
            continue
        v = int(entry["id"])
        vs.append(v)
        if entry.get("label"):
            labels[v] = bytes.fromhex(entry["label"])
        if "weight" in entry:
            weights[v] = int(entry["weight"])
    if len(vs) != len(set(vs)):
        raise GraphError("duplicate vertex identifiers")
    edges = []
    for a, b in doc.get("edges", []):
        if a == b:
            raise GraphError(f"self-loop at {a}")
        edges.append((int(a), int(b)))
    known = set(vs)
    for a, b in edges:
        if a not in known or b not in known:
            raise GraphError(f"edge ({a},{b}) references unknown vertex")
    return Graph.from_edges(vs, edges, labels, weights)


def parse_edge_list(text: str) -> Graph:
    """Whitespace-separated ``u v`` lines; a lone integer declares an isolated vertex."""
    vs: set[int] = set()
    edges = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [int(x) for x in line.split()]
        if len(parts) == 1:
            vs.add(parts[0])
        elif len(parts) == 2:
            if parts[0] == parts[1]:
                raise GraphError(f"self-loop at {parts[0]}")
            vs.update(parts)
            edges.append((parts[0], parts[1]))
        else:
            raise GraphError(f"bad edge-list line: {line!r}")
    return Graph.from_edges(vs, edges)


def load_graph(path: str | Path) -> Graph:
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return graph_from_json(json.loads(text))
    return parse_edge_list(text)


def save_graph(g: Graph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_json(g), indent=1))
