"""Small-graph corpora and oracle cross-checks shared by the CLI and the acceptance suite."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import networkx as nx

from .decomposition import (
    decomposition_from_order,
    exact_treewidth,
    min_fill_order,
    prepare,
)
from .graph import Graph, random_ids
from .opt import opt_extraction_oracle, prove_opt, run_opt, with_solution
from .regular.algebras import ALGEBRAS, get_algebra
from .regular.dp import (
    UNREALIZABLE,
    best_accepting,
    brute_force_optimum,
    brute_force_property,
    dp_evaluate,
    node_tables,
)
from .protocols import get_protocol

DECISION_PROPERTIES = ("non-3-colorability", "non-2-colorability")
SUBSET_PROPERTIES = ("independent-set", "dominating-set")


def _from_nx(h: nx.Graph, rng: random.Random) -> Graph:
    nodes = sorted(h.nodes)
    ids = dict(zip(nodes, random_ids(len(nodes), rng)))
    return Graph.from_edges(ids.values(), [(ids[a], ids[b]) for a, b in h.edges])


def connected_graphs(max_n: int, seed: int = 0) -> list[Graph]:
    """Every connected graph with 1..max_n vertices up to isomorphism (max_n <= 7)."""
    if max_n > 7:
        raise ValueError("the exhaustive corpus stops at 7 vertices")
    rng = random.Random(seed)
    out = []
    for h in nx.graph_atlas_g():
        if 1 <= h.number_of_nodes() <= max_n and nx.is_connected(h):
            out.append(_from_nx(h, rng))
    return out


def sampled_graphs(max_n: int, count: int, seed: int = 0, min_n: int = 1) -> list[Graph]:
    """Random connected graphs with min_n..max_n vertices and varied density."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n = rng.randint(min_n, max_n)
        p = rng.choice([0.15, 0.3, 0.5, 0.7])
        h = nx.gnp_random_graph(n, p, seed=rng.randrange(1 << 30))
        if n and nx.is_connected(h):
            out.append(_from_nx(h, rng))
    return out


def high_treewidth_graphs(max_n: int, min_tw: int, seed: int = 0) -> list[Graph]:
    """Every connected graph with at most max_n vertices and treewidth >= min_tw, up to isomorphism.

    Graphs are grown from complete graphs by deleting edges one at a time;
    deleting edges never raises treewidth, so a branch stops once it drops below min_tw.
    """
    rng = random.Random(seed)
    found: list[nx.Graph] = []
    for n in range(min_tw + 1, max_n + 1):
        layer = [nx.complete_graph(n)]
        while layer:
            keep = []
            for h in layer:
                if nx.is_connected(h) and exact_treewidth(_from_nx(h, random.Random(0))) >= min_tw:
                    keep.append(h)
            found.extend(keep)
            nxt: dict = {}
            for h in keep:
                for e in list(h.edges):
                    h2 = h.copy()
                    h2.remove_edge(*e)
                    key = nx.weisfeiler_lehman_graph_hash(h2)
                    bucket = nxt.setdefault(key, [])
                    if not any(nx.is_isomorphic(h2, o) for o in bucket):
                        bucket.append(h2)
            layer = [h for b in nxt.values() for h in b]
    return [_from_nx(h, rng) for h in found]


def some_decomposition(g: Graph, coherent: bool = False):
    """A decomposition for oracle use: min-fill, or the full coherent pipeline with its decoration."""
    if coherent:
        return prepare(g, g.n)
    return decomposition_from_order(g, min_fill_order(g)), None


@dataclass
class OracleReport:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"name": self.name, "checked": self.checked, "ok": self.ok, "failures": self.failures[:50]}


def _subsets(g: Graph, rng: random.Random, limit: int):
    vs = g.vertices
    if len(vs) <= 6 or limit <= 0:
        for m in range(1 << len(vs)):
            yield frozenset(v for i, v in enumerate(vs) if (m >> i) & 1)
        return
    for _ in range(limit):
        yield frozenset(v for v in vs if rng.random() < 0.4)


def check_dp_equivalence(graphs, pids=tuple(ALGEBRAS), seed: int = 0, subsets: int = 8) -> OracleReport:
    """accepting(dp_evaluate(G, X)) == brute_force_property(G, X) for every graph and property."""
    rep = OracleReport("dp-vs-brute-force")
    rng = random.Random(seed)
    for gi, g in enumerate(graphs):
        td, dm = some_decomposition(g, coherent=gi % 2 == 1)
        for pid in pids:
            alg = get_algebra(pid)
            Xs = _subsets(g, rng, subsets) if alg.takes_subset else [frozenset()]
            for X in Xs:
                rep.checked += 1
                got = alg.accepting(dp_evaluate(alg, td, g, X, dm))
                want = brute_force_property(pid, g, X)
                if got != want:
                    rep.failures.append({"graph": g.n, "edges": sorted(g.edges()), "pid": pid, "X": sorted(X)})
    return rep


def random_weights(g: Graph, rng: random.Random, maxw: int = 5) -> Graph:
    return g.with_weights({v: rng.randint(-maxw, maxw) for v in g.adj})


def check_max_weight(graphs, pids=SUBSET_PROPERTIES, seed: int = 0, weighted: bool = True) -> OracleReport:
    """Best accepting MaxWeight at the root equals the brute-force optimum."""
    rep = OracleReport("maxweight-vs-brute-force")
    rng = random.Random(seed)
    for gi, g in enumerate(graphs):
        if weighted and gi % 2:
            g = random_weights(g, rng)
        td, dm = some_decomposition(g, coherent=gi % 3 == 0)
        for pid in pids:
            alg = get_algebra(pid)
            rep.checked += 1
            tabs = node_tables(alg, td, g, dm)
            got = best_accepting(alg, tabs[td.root].full)
            want, _ = brute_force_optimum(pid, g)
            if got == want or (want is None and got is UNREALIZABLE):
                continue
            rep.failures.append({"edges": sorted(g.edges()), "pid": pid, "table": str(got), "brute": want})
    return rep


def check_opt_runs(graphs, pid: str, seed: int = 0) -> OracleReport:
    """Honest optimal X accepts (and passes the oracle); honest suboptimal X is rejected at v_r."""
    rep = OracleReport(f"opt-runs:{pid}")
    rng = random.Random(seed)
    for g in graphs:
        g = random_weights(g, rng) if rng.random() < 0.5 else g
        best, X = brute_force_optimum(pid, g)
        k = max(1, exact_treewidth(g))
        td_dm = prepare(g, k)
        g1 = with_solution(g, X)
        certs = prove_opt(g1, k, pid)
        v = run_opt(g1, certs, k, pid)
        rep.checked += 1
        if not v.global_accept:
            rep.failures.append({"edges": sorted(g.edges()), "case": "optimal rejected", "causes": v.causes()})
            continue
        fails = opt_extraction_oracle(g1, certs, k, pid)
        if fails:
            rep.failures.append({"edges": sorted(g.edges()), "case": "oracle", "failures": fails})
        # a valid but lighter solution
        lighter = _lighter_solution(pid, g, best, rng)
        if lighter is None:
            continue
        g2 = with_solution(g, lighter)
        certs = prove_opt(g2, k, pid)
        v = run_opt(g2, certs, k, pid)
        rep.checked += 1
        root_v = min(td_dm[0].fresh[td_dm[0].root])
        if "OPT-max" not in v.per_vertex[root_v]:
            rep.failures.append({"edges": sorted(g.edges()), "case": "suboptimal accepted", "causes": v.causes()})
    return rep


def _lighter_solution(pid: str, g: Graph, best: int, rng: random.Random):
    vs = g.vertices
    cands = []
    for m in range(1 << len(vs)):
        X = frozenset(v for i, v in enumerate(vs) if (m >> i) & 1)
        if sum(g.weight(v) for v in X) < best and brute_force_property(pid, g, X):
            cands.append(X)
            if len(cands) > 20:
                break
    return rng.choice(cands) if cands else None


def check_protocol_small(protocol: str, pid: str | None, graphs, seed: int = 0) -> OracleReport:
    """Completeness and extraction soundness of honest runs on small graphs."""
    rep = OracleReport(f"protocol:{protocol}:{pid}")
    for g in graphs:
        k = max(1, exact_treewidth(g))
        proto = get_protocol(protocol, k, pid)
        if protocol == "opt":
            _, X = brute_force_optimum(pid, g)
            g = with_solution(g, X)
        certs = proto.prove(g)
        v = proto.run(g, certs)
        rep.checked += 1
        expect = True if protocol != "mso" else brute_force_property(pid, g)
        if v.global_accept != expect:
            rep.failures.append({"edges": sorted(g.edges()), "accept": v.global_accept, "causes": v.causes()})
        elif v.global_accept:
            fails = proto.oracle(g, certs)
            if fails:
                rep.failures.append({"edges": sorted(g.edges()), "oracle": fails})
    return rep


def oracle_check(protocol: str, pid: str | None, max_n: int, budget: int, seed: int = 0) -> list[OracleReport]:
    """The battery behind ``twcert oracle-check``."""
    small = connected_graphs(min(max_n, 6), seed)
    out = []
    if protocol in ("tw", "mso", "opt"):
        out.append(check_protocol_small(protocol, pid, small[: budget or None], seed))
    if protocol == "mso":
        out.append(check_dp_equivalence(small, (pid,), seed))
    if protocol == "opt":
        out.append(check_max_weight(small, (pid,), seed))
    single = Graph.from_edges([0], [])
    proto_k = 1
    rep = OracleReport("single-vertex")
    proto = get_protocol(protocol, proto_k, pid)
    g1 = single if protocol != "opt" else with_solution(single, brute_force_optimum(pid, single)[1])
    v = proto.run(g1, proto.prove(g1))
    rep.checked = 1
    expect = True if protocol != "mso" else brute_force_property(pid, g1)
    if v.global_accept != expect:
        rep.failures.append({"case": "n=1", "causes": v.causes()})
    out.append(rep)
    return out


__all__ = [
    "DECISION_PROPERTIES",
    "SUBSET_PROPERTIES",
    "OracleReport",
    "check_dp_equivalence",
    "check_max_weight",
    "check_opt_runs",
    "check_protocol_small",
    "connected_graphs",
    "high_treewidth_graphs",
    "oracle_check",
    "sampled_graphs",
]
