"""Rooted tree decompositions: construction, depth balancing, coherence, decoration.

Nodes are arbitrary hashable keys during construction. Once a decomposition is
coherent its bags are pairwise distinct, and :meth:`TreeDecomposition.node_id`
(the ascending tuple of bag vertices) is used as the public node identifier.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Mapping

from .graph import Graph, components

EXACT_LIMIT = 18


class DecompositionError(ValueError):
    pass


class TwExceeded(DecompositionError):
    """No decomposition of the requested width could be produced."""

    code = "TW_EXCEEDED"


@dataclass(frozen=True, eq=False)
class TreeDecomposition:
    bags: Mapping[Hashable, frozenset]
    parent: Mapping[Hashable, Hashable | None]
    root: Hashable

    @cached_property
    def children(self) -> dict:
        ch: dict = {i: [] for i in self.bags}
        for i, p in self.parent.items():
            if p is not None:
                ch[p].append(i)
        for i in ch:
            ch[i].sort(key=lambda j: self.node_id(j))
        return ch

    def node_id(self, i) -> tuple:
        return tuple(sorted(self.bags[i]))

    @property
    def nodes(self) -> list:
        return list(self.bags)

    @cached_property
    def order(self) -> list:
        """Nodes in BFS order from the root (parents before children)."""
        out = [self.root]
        for i in out:
            out.extend(self.children[i])
        return out

    @cached_property
    def depth(self) -> dict:
        d = {self.root: 1}
        for i in self.order[1:]:
            d[i] = d[self.parent[i]] + 1
        return d

    @property
    def height(self) -> int:
        return max(self.depth.values())

    @property
    def width(self) -> int:
        return max(len(b) for b in self.bags.values()) - 1

    @cached_property
    def fresh(self) -> dict:
        out = {}
        for i, b in self.bags.items():
            p = self.parent.get(i)
            out[i] = b if p is None else b - self.bags[p]
        return out

    def fresh_owner(self) -> dict:
        """vertex -> node whose F_i holds it (meaningful for coherent decompositions)."""
        own = {}
        for i in self.order:
            for v in self.fresh[i]:
                own.setdefault(v, i)
        return own

    def subtree_fresh(self) -> dict:
        """node -> union of F_j over the subtree rooted at the node (= V_i minus B_p(i))."""
        acc = {i: set(self.fresh[i]) for i in self.bags}
        for i in reversed(self.order):
            p = self.parent.get(i)
            if p is not None:
                acc[p] |= acc[i]
        return acc

    def path_to_root(self, i) -> list:
        out = [i]
        while self.parent.get(out[-1]) is not None:
            out.append(self.parent[out[-1]])
        return out

    def relabelled(self) -> "TreeDecomposition":
        """Copy keyed by node_id; requires pairwise distinct bags."""
        ids = {i: self.node_id(i) for i in self.bags}
        if len(set(ids.values())) != len(ids):
            raise DecompositionError("bags are not pairwise distinct")
        return TreeDecomposition(
            {ids[i]: b for i, b in self.bags.items()},
            {ids[i]: (None if p is None else ids[p]) for i, p in self.parent.items()},
            ids[self.root],
        )


# -- validation ---------------------------------------------------------------


@dataclass
class DecompositionReport:
    ok: bool
    width: int | None = None
    depth: int | None = None
    coherent: bool | None = None
    violations: list[str] = field(default_factory=list)


def verify_decomposition(
    td: TreeDecomposition,
    g: Graph,
    width: int | None = None,
    depth: int | None = None,
    coherent: bool | None = None,
) -> DecompositionReport:
    """Check the three tree-decomposition axioms plus optional expectations."""
    v = []
    if td.root not in td.bags or td.parent.get(td.root, None) is not None:
        return DecompositionReport(False, violations=["root missing or has a parent"])
    if set(td.parent) != set(td.bags):
        return DecompositionReport(False, violations=["parent map does not match node set"])
    for i, p in td.parent.items():
        if p is not None and p not in td.bags:
            return DecompositionReport(False, violations=[f"node {i} has unknown parent"])
    # rooted tree: every node reaches the root without cycles
    seen = set(td.order)
    if len(seen) != len(td.bags) or len(td.order) != len(td.bags):
        return DecompositionReport(False, violations=["parent pointers do not form a tree"])
    occ: dict = {}
    for i, b in td.bags.items():
        for x in b:
            if x not in g.adj:
                v.append(f"bag of node {td.node_id(i)} holds unknown vertex {x}")
            occ.setdefault(x, []).append(i)
    for x in g.adj:
        if x not in occ:
            v.append(f"vertex {x} is in no bag")
    for a, b in g.edges():
        if not any(b in td.bags[i] for i in occ.get(a, ())):
            v.append(f"edge ({a},{b}) is in no bag")
    for x, nodes in occ.items():
        # occurrence set is connected iff exactly one occurrence lacks its parent in the set
        s = set(nodes)
        tops = [i for i in nodes if td.parent[i] not in s]
        if len(tops) != 1:
            v.append(f"occurrences of vertex {x} are disconnected")
    w = td.width
    h = td.height
    if width is not None and w > width:
        v.append(f"width {w} exceeds {width}")
    if depth is not None and h > depth:
        v.append(f"depth {h} exceeds {depth}")
    coh = None
    if coherent is not None or not v:
        coh = not v and not coherence_violations(td, g)
        if coherent and not coh:
            v.extend(coherence_violations(td, g) or ["decomposition invalid"])
    return DecompositionReport(not v, w, h, coh, v)


def coherence_violations(td: TreeDecomposition, g: Graph) -> list[str]:
    out = []
    below = td.subtree_fresh()
    for i in td.order:
        if not td.fresh[i]:
            out.append(f"node {td.node_id(i)} has empty F")
            continue
        if len(components(g, below[i])) != 1:
            out.append(f"node {td.node_id(i)}: G[V_i minus parent bag] is disconnected")
    return out


def is_coherent(td: TreeDecomposition, g: Graph) -> bool:
    return not coherence_violations(td, g)


# -- exact treewidth ------------------------------------------------------------


def _bitmask_graph(g: Graph):
    order = g.vertices
    pos = {v: i for i, v in enumerate(order)}
    nb = [0] * len(order)
    for v, ns in g.adj.items():
        for u in ns:
            nb[pos[v]] |= 1 << pos[u]
    return order, nb


def _q_size(nb, s: int, v: int) -> int:
    """|Q(S, v)|: vertices outside S+v reachable from v through S."""
    seen = 1 << v
    frontier = 1 << v
    out = 0
    inside = s
    while frontier:
        reach = 0
        f = frontier
        while f:
            low = f & -f
            reach |= nb[low.bit_length() - 1]
            f ^= low
        reach &= ~seen
        seen |= reach
        out |= reach & ~inside
        frontier = reach & inside
    return bin(out).count("1")


def exact_treewidth(g: Graph, return_order: bool = False):
    """Treewidth by dynamic programming over eliminated vertex subsets.

    Layered DP: TW(S) = min over v in S of max(TW(S - v), |Q(S - v, v)|), where
    subsets whose value reaches the min-fill upper bound are dropped.
    """
    n = g.n
    if n > EXACT_LIMIT:
        raise DecompositionError(f"exact treewidth limited to {EXACT_LIMIT} vertices")
    if n <= 1:
        return (0, g.vertices) if return_order else 0
    order, nb = _bitmask_graph(g)
    ub_order = min_fill_order(g)
    ub = _order_width(g, ub_order)
    full = (1 << n) - 1
    layer = {0: (-1, None)}
    for _ in range(n):
        nxt: dict = {}
        for s, (val, _) in layer.items():
            rest = full & ~s
            while rest:
                low = rest & -rest
                v = low.bit_length() - 1
                rest ^= low
                t = s | low
                cost = max(val, _q_size(nb, s, v))
                if cost >= ub:
                    continue
                cur = nxt.get(t)
                if cur is None or cost < cur[0]:
                    nxt[t] = (cost, (s, v))
        if not nxt:
            break
        _keep_parents(layer, nxt)
        layer = nxt
    else:
        val, _ = layer[full]
        if return_order:
            return val, _recover_order(full, layer, order)
        return val
    return (ub, ub_order) if return_order else ub


def _keep_parents(prev, nxt):
    for t, (cost, link) in nxt.items():
        s, v = link
        nxt[t] = (cost, (s, v, prev[s][1]))


def _recover_order(full, layer, order):
    out = []
    link = layer[full][1]
    while link is not None:
        s, v, link = link
        out.append(order[v])
    out.reverse()
    return out


# -- heuristic decomposition ---------------------------------------------------


def min_fill_order(g: Graph) -> list[int]:
    adj = {v: set(ns) for v, ns in g.adj.items()}
    out = []
    while adj:
        best = None
        for v in sorted(adj):
            ns = adj[v]
            fill = 0
            lst = list(ns)
            for a in range(len(lst)):
                na = adj[lst[a]]
                for b in range(a + 1, len(lst)):
                    if lst[b] not in na:
                        fill += 1
            key = (fill, len(ns), v)
            if best is None or key < best[0]:
                best = (key, v)
                if fill == 0:
                    break
        v = best[1]
        ns = adj.pop(v)
        for a in ns:
            adj[a].discard(v)
            adj[a] |= ns - {a}
        out.append(v)
    return out


def _order_width(g: Graph, order: list[int]) -> int:
    return max((len(b) for b in _elimination_bags(g, order).values()), default=1) - 1


def _elimination_bags(g: Graph, order: list[int]) -> dict:
    pos = {v: i for i, v in enumerate(order)}
    adj = {v: set(ns) for v, ns in g.adj.items()}
    bags = {}
    for v in order:
        later = {u for u in adj[v] if pos[u] > pos[v]}
        bags[v] = frozenset(later | {v})
        for a in later:
            adj[a] |= later - {a}
    return bags


def decomposition_from_order(g: Graph, order: list[int]) -> TreeDecomposition:
    """Elimination-order decomposition: node v has bag {v} + later neighbours in the fill graph."""
    pos = {v: i for i, v in enumerate(order)}
    bags = _elimination_bags(g, order)
    parent: dict = {}
    roots = []
    for v in order:
        later = bags[v] - {v}
        if later:
            parent[v] = min(later, key=pos.__getitem__)
        else:
            parent[v] = None
            roots.append(v)
    root = roots[-1]
    for r in roots[:-1]:  # only for disconnected inputs
        parent[r] = root
    return TreeDecomposition(bags, parent, root)


def fast_min_degree_order(g: Graph) -> list[int]:
    """Greedy min-degree elimination with a heap; used for large graphs."""
    import heapq

    adj = {v: set(ns) for v, ns in g.adj.items()}
    heap = [(len(ns), v) for v, ns in adj.items()]
    heapq.heapify(heap)
    done = set()
    out = []
    while heap:
        d, v = heapq.heappop(heap)
        if v in done or d != len(adj[v]):
            continue
        done.add(v)
        out.append(v)
        ns = adj.pop(v)
        for a in ns:
            adj[a].discard(v)
            adj[a] |= ns - {a}
            heapq.heappush(heap, (len(adj[a]), a))
    return out


def heuristic_decomposition(
    g: Graph, k: int, witness: TreeDecomposition | None = None
) -> TreeDecomposition:
    """A decomposition of width <= k, or TwExceeded.

    A supplied witness of width <= k is accepted directly. Otherwise min-fill
    (min-degree above 300 vertices) is tried, then exact DP for small graphs.
    """
    if k < 1:
        raise DecompositionError("k must be >= 1")
    if witness is not None and witness.width <= k:
        return witness
    if g.n == 0:
        raise DecompositionError("empty graph")
    order = min_fill_order(g) if g.n <= 300 else fast_min_degree_order(g)
    td = decomposition_from_order(g, order)
    if td.width <= k:
        return td
    if g.n <= EXACT_LIMIT:
        tw, order = exact_treewidth(g, return_order=True)
        if tw <= k:
            return decomposition_from_order(g, order)
    raise TwExceeded(f"could not find a decomposition of width <= {k} (heuristic width {td.width})")


# -- depth balancing ------------------------------------------------------------


def depth_target(n: int) -> int:
    return 2 * math.ceil(math.log2(n + 1))


def balance_depth(td: TreeDecomposition, g: Graph, k: int) -> TreeDecomposition:
    """Rebuild ``td`` with depth O(log n) and bags of size <= 3(k+1).

    Decompositions already within 2*ceil(log2(n+1)) levels are returned as is.
    Otherwise the decomposition tree is split recursively: a piece S of the
    tree with at most two outside neighbours b1, b2 becomes a node whose bag is
    B_x plus the vertices S shares with b1, b2; x is a centroid of S when S has
    at most one outside neighbour, and otherwise the point of the b1-b2 path
    nearest the centroid, so no child piece has three outside neighbours.
    """
    if td.width > k:
        raise DecompositionError(f"input width {td.width} exceeds k={k}")
    if td.height <= depth_target(g.n):
        return td
    nodes = list(td.bags)
    adj: dict = {i: [] for i in nodes}
    for i, p in td.parent.items():
        if p is not None:
            adj[i].append(p)
            adj[p].append(i)
    bags = td.bags
    new_bags: dict = {}
    new_parent: dict = {}
    # stack entries: (piece as set, boundary nodes outside the piece, parent in output)
    stack = [(set(nodes), (), None)]
    while stack:
        piece, boundary, out_parent = stack.pop()
        x = _split_point(piece, boundary, adj)
        shared = set()
        for b in boundary:
            for s in adj[b]:
                if s in piece:
                    shared |= bags[b] & bags[s]
        new_bags[x] = frozenset(shared | bags[x])
        new_parent[x] = out_parent
        for comp in _pieces_without(piece, x, adj):
            cb = tuple(b for b in boundary + (x,) if any(s in comp for s in adj[b]))
            stack.append((comp, cb, x))
    return TreeDecomposition(new_bags, new_parent, _root_of(new_parent))


def _root_of(parent):
    return next(i for i, p in parent.items() if p is None)


def _pieces_without(piece: set, x, adj) -> list[set]:
    rest = piece - {x}
    out = []
    for s in adj[x]:
        if s in rest:
            comp = {s}
            stack = [s]
            rest.discard(s)
            while stack:
                a = stack.pop()
                for b in adj[a]:
                    if b in rest:
                        rest.discard(b)
                        comp.add(b)
                        stack.append(b)
            out.append(comp)
    return out


def _split_point(piece: set, boundary: tuple, adj):
    start = next(iter(piece))
    if len(piece) == 1:
        return start
    # DFS tree of the piece for subtree sizes
    par = {start: None}
    order = [start]
    for a in order:
        for b in adj[a]:
            if b in piece and b not in par:
                par[b] = a
                order.append(b)
    size = {a: 1 for a in order}
    for a in reversed(order[1:]):
        size[par[a]] += size[a]
    total = len(piece)
    centroid = start
    while True:
        heavy = None
        for b in adj[centroid]:
            if b in piece and par.get(b) == centroid and size[b] > total // 2:
                heavy = b
                break
        if heavy is None:
            break
        centroid = heavy
    if len(boundary) < 2:
        return centroid
    s1, s2 = (next(s for s in adj[b] if s in piece) for b in boundary[:2])
    path = _tree_path(s1, s2, par)
    on_path = set(path)
    # walk from the centroid towards s1 until the path is hit
    a = centroid
    towards = _tree_path(centroid, s1, par)
    for a in towards:
        if a in on_path:
            return a
    return a


def _tree_path(a, b, par) -> list:
    anc_a = []
    x = a
    while x is not None:
        anc_a.append(x)
        x = par[x]
    pos = {x: i for i, x in enumerate(anc_a)}
    tail = []
    x = b
    while x not in pos:
        tail.append(x)
        x = par[x]
    return anc_a[: pos[x] + 1] + list(reversed(tail))


# -- coherence ---------------------------------------------------------------------


def make_coherent(td: TreeDecomposition, g: Graph) -> TreeDecomposition:
    """Split disconnected subtrees per component, then drop nodes with empty F.

    Top-down: for the node closest to the root whose G[V_i - B_p(i)] is
    disconnected, T_i is replaced by one restricted copy per component W^j,
    bags cut down to W^j plus its neighbourhood.
    """
    bags = {("n", i): b for i, b in td.bags.items()}
    parent = {("n", i): (None if p is None else ("n", p)) for i, p in td.parent.items()}
    children: dict = {i: [] for i in bags}
    for i, p in parent.items():
        if p is not None:
            children[p].append(i)
    root = ("n", td.root)
    counter = [0]

    def subtree(i):
        out = [i]
        for a in out:
            out.extend(children[a])
        return out

    def drop(i):
        for a in subtree(i):
            del bags[a]
            del parent[a]
            del children[a]

    queue = deque(children[root])
    while queue:
        i = queue.popleft()
        if i not in bags:
            continue
        p = parent[i]
        sub = subtree(i)
        vi = set().union(*(bags[a] for a in sub))
        w = vi - bags[p]
        comps = components(g, w) if w else []
        if len(comps) <= 1:
            if not comps:
                children[p].remove(i)
                drop(i)
            else:
                queue.extend(children[i])
            continue
        children[p].remove(i)
        for comp in comps:
            nbh = set()
            for x in comp:
                nbh |= g.adj[x]
            keep = comp | (nbh - comp)
            copy_root = _restricted_copy(i, p, keep, comp, bags, parent, children, counter)
            if copy_root is not None:
                queue.extend(children[copy_root])
        drop(i)

    # drop nodes with empty F, reattaching their children to the parent
    queue = deque(children[root])
    while queue:
        i = queue.popleft()
        p = parent[i]
        if bags[i] - bags[p]:
            queue.extend(children[i])
            continue
        children[p].remove(i)
        for c in children[i]:
            parent[c] = p
            children[p].append(c)
            queue.append(c)
        del bags[i], parent[i], children[i]
    out = TreeDecomposition(bags, parent, root)
    return out.relabelled()


def _restricted_copy(i, p, keep: set, comp: set, bags, parent, children, counter):
    """Copy T_i with bags restricted to ``keep``, pruning subtrees that miss ``comp``."""
    order = [i]
    for a in order:
        order.extend(children[a])
    touches = {}
    for a in reversed(order):
        t = bool(bags[a] & comp) or any(touches[c] for c in children[a])
        touches[a] = t
    if not touches[i]:
        return None
    mapping = {}
    for a in order:
        if not touches[a]:
            continue
        counter[0] += 1
        new = ("c", counter[0])
        mapping[a] = new
        bags[new] = bags[a] & keep
        np_ = p if a == i else mapping[parent[a]]
        parent[new] = np_
        children[new] = []
        children[np_].append(new)
    return mapping[i]


# -- decoration ---------------------------------------------------------------------


@dataclass(frozen=True)
class AuxTree:
    """Subtree S(i) of G[V_i - B_p(i)] rooted at the exit vertex."""

    root: int
    parent: Mapping[int, int | None]
    dist: Mapping[int, int]
    sub: Mapping[int, frozenset]

    @property
    def members(self):
        return self.parent.keys()


@dataclass(frozen=True)
class DecorationMap:
    exit: Mapping  # node -> exit vertex (root included, see decorate)
    in_charge: Mapping  # node -> vertex of F_p(i), None at the root
    aux_tree: Mapping  # node -> AuxTree

    def aux_nodes(self) -> dict:
        """vertex -> list of nodes i whose aux tree contains it."""
        out: dict = {}
        for i, t in self.aux_tree.items():
            for w in t.members:
                out.setdefault(w, []).append(i)
        return out


def decorate(td: TreeDecomposition, g: Graph) -> DecorationMap:
    """Exit vertices, in-charge vertices and auxiliary trees of a coherent decomposition.

    The root also gets an aux tree spanning F_r, rooted at the smallest vertex
    of F_r, with no in-charge vertex.
    """
    below = td.subtree_fresh()
    exit_, charge, trees = {}, {}, {}
    for i in td.order:
        p = td.parent[i]
        w = below[i]
        if p is None:
            ell, alpha = min(td.fresh[i]), None
        else:
            fp = td.fresh[p]
            cands = sorted(x for x in w if g.adj[x] & fp)
            if not cands:
                raise DecompositionError(f"node {td.node_id(i)} has no exit vertex; not coherent")
            ell = cands[0]
            alpha = min(g.adj[ell] & fp)
        exit_[i], charge[i] = ell, alpha
        trees[i] = _steiner_bfs_tree(g, w, ell, td.fresh[i])
    return DecorationMap(exit_, charge, trees)


def _steiner_bfs_tree(g: Graph, within: set, root: int, targets: frozenset) -> AuxTree:
    par = {root: None}
    dist = {root: 0}
    missing = set(targets) - {root}
    queue = deque([root])
    while queue and missing:
        a = queue.popleft()
        for b in sorted(g.adj[a]):
            if b in within and b not in par:
                par[b] = a
                dist[b] = dist[a] + 1
                missing.discard(b)
                queue.append(b)
    if missing:
        raise DecompositionError("aux tree cannot reach every fresh vertex; not coherent")
    keep = {root}
    for t in targets:
        x = t
        while x not in keep:
            keep.add(x)
            x = par[x]
    sub = {x: set() for x in keep}
    for t in targets:
        x = t
        while x is not None:
            sub[x].add(t)
            x = par[x]
    return AuxTree(
        root,
        {x: par[x] for x in keep},
        {x: dist[x] for x in keep},
        {x: frozenset(s) for x, s in sub.items()},
    )


def congestion_profile(dm: DecorationMap) -> dict:
    """vertex -> number of aux trees containing it."""
    return {w: len(ns) for w, ns in dm.aux_nodes().items()}


def aux_chain_violations(td: TreeDecomposition, dm: DecorationMap) -> list:
    """Vertices whose aux-tree nodes are not pairwise ancestor-comparable."""
    bad = []
    for w, nodes in dm.aux_nodes().items():
        deepest = max(nodes, key=td.depth.__getitem__)
        path = set(td.path_to_root(deepest))
        if not set(nodes) <= path:
            bad.append(w)
    return bad


def prepare(g: Graph, k: int, witness: TreeDecomposition | None = None):
    """Full prover-side pipeline: heuristic -> balance -> coherent -> decorate."""
    td = heuristic_decomposition(g, k, witness)
    td = balance_depth(td, g, k)
    td = make_coherent(td, g)
    return td, decorate(td, g)


# -- file format ----------------------------------------------------------------------


def decomposition_to_json(td: TreeDecomposition) -> dict:
    rel = td.relabelled()
    return {
        "root": list(rel.root),
        "nodes": [
            {
                "id": list(i),
                "parent": None if rel.parent[i] is None else list(rel.parent[i]),
                "bag": list(i),
            }
            for i in rel.order
        ],
    }


def decomposition_from_json(doc: Mapping) -> TreeDecomposition:
    bags, parent = {}, {}
    for node in doc["nodes"]:
        key = tuple(node["id"])
        bags[key] = frozenset(node["bag"])
        parent[key] = None if node["parent"] is None else tuple(node["parent"])
    return TreeDecomposition(bags, parent, tuple(doc["root"]))


def from_bags(bags: Iterable[Iterable[int]], edges: Iterable[tuple[int, int]]) -> TreeDecomposition:
    """Decomposition from a list of bags and tree edges given as bag indices; bag 0 is the root."""
    bl = [frozenset(b) for b in bags]
    adj: dict = {i: [] for i in range(len(bl))}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    parent = {0: None}
    order = [0]
    for a in order:
        for b in adj[a]:
            if b not in parent:
                parent[b] = a
                order.append(b)
    return TreeDecomposition(dict(enumerate(bl)), parent, 0)
