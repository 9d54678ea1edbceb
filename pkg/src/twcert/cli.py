"""Command-line interface.

Exit codes: 0 ok, 1 verification rejected (or the instance cannot be
certified), 2 invariant or oracle failure, 3 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .bench import fit_rows, rows_to_csv, size_bench
from .decomposition import (
    DecompositionError,
    TwExceeded,
    decomposition_from_json,
    decomposition_to_json,
    depth_target,
    prepare,
    verify_decomposition,
)
from .fuzz import CATALOGUE_VERSION, KINDS, fuzz
from .graph import GENERATOR_KINDS, GraphError, generate, graph_to_json, load_graph, save_graph
from .local import certs_from_json, certs_to_json
from .opt import solution_of, with_solution
from .oracle import oracle_check
from .protocols import PROTOCOLS, get_protocol
from .regular.algebras import ALGEBRAS, get_algebra
from .regular.dp import dp_argmax
from .tw import decode_all, decoded_debug, depth_bound

EXIT_OK, EXIT_REJECT, EXIT_ORACLE, EXIT_USAGE = 0, 1, 2, 3

log = logging.getLogger("twcert")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(doc, out: str | None) -> None:
    text = doc if isinstance(doc, str) else json.dumps(doc, indent=2, default=str)
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _params(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = v
    return out


def _load_witness(path):
    if not path:
        return None
    return decomposition_from_json(json.loads(Path(path).read_text()))


def _load_solution(path) -> frozenset:
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict):
        doc = doc.get("X", doc.get("solution"))
    if not isinstance(doc, list):
        raise UsageError("solution file must hold a list of vertex ids")
    return frozenset(int(v) for v in doc)


def _apply_weights(g, spec):
    if spec in (None, "inline"):
        return g
    doc = json.loads(Path(spec).read_text())
    return g.with_weights({int(v): int(w) for v, w in doc.items()})


def _need_property(args):
    if args.protocol in ("mso", "opt") and not args.property:
        raise UsageError(f"protocol {args.protocol} needs --property")
    if args.property:
        alg = get_algebra(args.property)
        if args.protocol == "mso" and alg.takes_subset:
            raise UsageError(f"{args.property} is a subset property; use the opt protocol")
        if args.protocol == "opt" and not alg.takes_subset:
            raise UsageError(f"{args.property} is not a subset property")


# -- commands -----------------------------------------------------------------------------


def cmd_gen(args) -> int:
    params = _params(args.param)
    for key in ("n", "k"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    g, witness = generate(args.kind, params, args.seed)
    if args.out:
        save_graph(g, args.out)
    else:
        _emit(graph_to_json(g), None)
    if args.witness_out and witness is not None:
        _emit(decomposition_to_json(witness), args.witness_out)
    log.info("generated %s with n=%d m=%d", args.kind, g.n, g.m)
    return EXIT_OK


def cmd_decompose(args) -> int:
    g = load_graph(args.graph)
    td, dm = prepare(g, args.k, _load_witness(args.witness))
    rep = verify_decomposition(td, g, width=3 * args.k + 2, depth=depth_bound(g.n), coherent=True)
    doc = decomposition_to_json(td)
    doc["report"] = {
        "ok": rep.ok,
        "width": rep.width,
        "depth": rep.depth,
        "coherent": rep.coherent,
        "depth_target": depth_target(g.n),
        "violations": rep.violations,
    }
    _emit(doc, args.out)
    return EXIT_OK if rep.ok else EXIT_ORACLE


def _certify(args, protocol: str) -> int:
    args.protocol = protocol
    _need_property(args)
    g = load_graph(args.graph)
    proto = get_protocol(protocol, args.k, args.property)
    witness = _load_witness(args.witness)
    if protocol == "opt":
        g = _apply_weights(g, args.weights)
        if args.solution:
            X = _load_solution(args.solution)
        else:
            td, _ = prepare(g, args.k, witness)
            best, X = dp_argmax(get_algebra(args.property), td, g)
            if X is None:
                raise UsageError(f"no vertex set satisfies {args.property}")
            log.info("optimum %s found by dynamic programming", best)
        g = with_solution(g, X)
    t0 = time.perf_counter()
    certs = proto.prove(g, witness)
    debug = None
    if args.debug:
        debug = {v: decoded_debug(c) for v, c in decode_all(certs, proto.codec).items()}
    doc = certs_to_json(certs, debug)
    doc["protocol"] = protocol
    doc["k"] = args.k
    doc["property"] = args.property
    if protocol == "opt":
        doc["solution"] = sorted(solution_of(g))
        doc["weights"] = {str(v): g.weight(v) for v in g.vertices}
    doc["prove_seconds"] = round(time.perf_counter() - t0, 3)
    _emit(doc, args.out)
    return EXIT_OK


def cmd_certify_tw(args) -> int:
    return _certify(args, "tw")


def cmd_certify_mso(args) -> int:
    return _certify(args, "mso")


def cmd_certify_opt(args) -> int:
    return _certify(args, "opt")


def _load_run(args):
    doc = json.loads(Path(args.certs).read_text())
    protocol = args.protocol or doc.get("protocol", "tw")
    k = args.k if args.k is not None else doc.get("k")
    if k is None:
        raise UsageError("--k is required")
    pid = args.property or doc.get("property")
    args.protocol, args.property = protocol, pid
    _need_property(args)
    g = load_graph(args.graph)
    if protocol == "opt":
        if "weights" in doc:
            g = g.with_weights({int(v): int(w) for v, w in doc["weights"].items()})
        g = _apply_weights(g, getattr(args, "weights", None))
        if args.solution:
            g = with_solution(g, _load_solution(args.solution))
        elif "solution" in doc:
            g = with_solution(g, doc["solution"])
    return g, certs_from_json(doc), get_protocol(protocol, int(k), pid)


def cmd_verify(args) -> int:
    g, certs, proto = _load_run(args)
    verdict = proto.run(g, certs)
    doc = {
        "protocol": proto.name,
        "k": proto.k,
        "property": proto.pid,
        "global_accept": verdict.global_accept,
        "rejecting": verdict.rejecting(),
        "causes": verdict.causes(),
        "per_vertex": {str(v): list(c) for v, c in sorted(verdict.per_vertex.items()) if c},
    }
    if verdict.global_accept and args.oracle:
        doc["oracle_failures"] = proto.oracle(g, certs)
        _emit(doc, args.out)
        return EXIT_ORACLE if doc["oracle_failures"] else EXIT_OK
    _emit(doc, args.out)
    return EXIT_OK if verdict.global_accept else EXIT_REJECT


def cmd_fuzz(args) -> int:
    if args.certs:
        g, certs, proto = _load_run(args)
    else:
        if args.k is None:
            raise UsageError("--k is required")
        args.protocol = args.protocol or "tw"
        _need_property(args)
        g = load_graph(args.graph)
        proto = get_protocol(args.protocol, args.k, args.property)
        if proto.name == "opt":
            td, _ = prepare(g, args.k)
            _, X = dp_argmax(proto.alg, td, g)
            g = with_solution(g, X or ())
        certs = proto.prove(g)
    kinds = args.kinds.split(",") if args.kinds else KINDS
    unknown = set(kinds) - set(KINDS)
    if unknown:
        raise UsageError(f"unknown mutation kinds {sorted(unknown)}")
    alternatives = []
    try:
        alternatives.append(get_protocol(proto.name, proto.k + 1, proto.pid).prove(g))
    except DecompositionError:
        pass
    rep = fuzz(g, certs, proto, args.trials, args.seed, alternatives, kinds)
    doc = rep.to_json()
    if not args.full:
        doc.pop("mutations")
    _emit(doc, args.out)
    log.info(
        "fuzz: %d trials, %d escapes, %d failed (catalogue v%d)",
        rep.trials, len(rep.escapes), len(rep.failed_escapes), CATALOGUE_VERSION,
    )
    return EXIT_OK if rep.ok else EXIT_ORACLE


def cmd_size_bench(args) -> int:
    try:
        n_list = [int(x) for x in args.n.split(",") if x]
    except ValueError:
        raise UsageError("--n takes a comma-separated list of integers") from None
    if args.protocol in ("mso", "opt"):
        _need_property(args)
    rows = size_bench(args.family, n_list, args.k, args.protocol or "tw", args.property, args.seed)
    fit = fit_rows(rows)
    _emit(rows_to_csv(rows), args.out)
    print(
        json.dumps({"exponent": fit.exponent, "coefficient": fit.coefficient, "points": fit.points}),
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    args.protocol = args.protocol or "tw"
    _need_property(args)
    reports = oracle_check(args.protocol, args.property, args.max_n, args.budget, args.seed)
    doc = {"reports": [r.to_json() for r in reports], "ok": all(r.ok for r in reports)}
    _emit(doc, args.out)
    return EXIT_OK if doc["ok"] else EXIT_ORACLE


# -- parser -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twcert", description="Local certification of bounded treewidth and regular properties.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, graph=True, k=True, prop=False, k_required=True):
        if graph:
            sp.add_argument("--graph", required=True, help="graph file (JSON or edge list)")
        if k:
            sp.add_argument("--k", type=int, required=k_required, default=None)
        if prop:
            sp.add_argument("--property", choices=sorted(ALGEBRAS))
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output file (stdout if omitted)")

    s = sub.add_parser("gen", help="generate a test graph")
    s.add_argument("--kind", choices=GENERATOR_KINDS, required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--param", action="append", help="extra generator parameter key=value")
    s.add_argument("--witness-out", help="write the construction decomposition here")
    common(s, graph=False, k=False)
    s.add_argument("--k", type=int)
    s.set_defaults(fn=cmd_gen)

    s = sub.add_parser("decompose", help="coherent, balanced, decorated decomposition")
    common(s)
    s.add_argument("--witness")
    s.set_defaults(fn=cmd_decompose)

    for name, fn in (("certify-tw", cmd_certify_tw), ("certify-mso", cmd_certify_mso), ("certify-opt", cmd_certify_opt)):
        s = sub.add_parser(name, help=f"honest certificates for the {name.split('-')[1]} protocol")
        common(s, prop=name != "certify-tw")
        s.add_argument("--witness")
        s.add_argument("--debug", action="store_true", help="include decoded certificates")
        if name == "certify-opt":
            s.add_argument("--weights", default="inline", help="'inline' or a JSON file {id: weight}")
            s.add_argument("--solution", help="JSON list of vertex ids (default: an optimum)")
        s.set_defaults(fn=fn, property=None)

    s = sub.add_parser("verify", help="run one verification round")
    common(s, prop=True, k_required=False)
    s.add_argument("--certs", required=True)
    s.add_argument("--protocol", choices=PROTOCOLS)
    s.add_argument("--solution")
    s.add_argument("--oracle", action="store_true", help="re-validate an accepted run with the extraction oracle")
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("fuzz", help="mutate certificates and re-validate escapes")
    common(s, prop=True, k_required=False)
    s.add_argument("--certs")
    s.add_argument("--protocol", choices=PROTOCOLS)
    s.add_argument("--solution")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--kinds", help=f"comma-separated subset of {','.join(KINDS)}")
    s.add_argument("--full", action="store_true", help="list every mutation in the report")
    s.set_defaults(fn=cmd_fuzz)

    s = sub.add_parser("size-bench", help="certificate sizes as CSV")
    s.add_argument("--family", default="partial-k-tree")
    s.add_argument("--n", default="64,128,256,512,1024")
    s.add_argument("--protocol", choices=PROTOCOLS, default="tw")
    common(s, graph=False, prop=True)
    s.set_defaults(fn=cmd_size_bench)

    s = sub.add_parser("oracle-check", help="small-graph oracle battery")
    s.add_argument("--protocol", choices=PROTOCOLS, default="tw")
    s.add_argument("--max-n", type=int, default=6)
    s.add_argument("--budget", type=int, default=0, help="cap on graphs per check (0 = all)")
    common(s, graph=False, k=False, prop=True)
    s.set_defaults(fn=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.fn(args)
    except TwExceeded as exc:
        print(f"TW_EXCEEDED: {exc}", file=sys.stderr)
        return EXIT_REJECT
    except (UsageError, GraphError, DecompositionError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
