"""Certificate-size benchmark with a log-log fit of max bits against log n."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass

import numpy as np

from .graph import generate
from .protocols import get_protocol
from .tw import certificate_bits

CSV_FIELDS = ("family", "n", "k", "protocol", "property", "max_bits", "mean_bits", "log2n", "bound", "seconds")


@dataclass
class SizeRow:
    family: str
    n: int
    k: int
    protocol: str
    property: str
    max_bits: int
    mean_bits: float
    log2n: float
    bound: float
    seconds: float


@dataclass
class SizeFit:
    exponent: float  # slope of log(max bits) against log(log2 n)
    coefficient: float  # least-squares c in max bits ~ c * log2(n)^2
    points: int


def family_graph(family: str, n: int, k: int, seed: int):
    if family == "partial-k-tree":
        return generate("partial-k-tree", {"n": n, "k": k}, seed)
    if family == "grid":
        side = max(1, math.isqrt(n))
        return generate("grid", {"rows": side, "cols": max(1, n // side)}, seed)
    if family in ("path", "cycle", "clique"):
        return generate(family, {"m": n}, seed)
    if family == "random-connected":
        return generate("random-connected", {"n": n, "p": 2.0 / max(n, 2)}, seed)
    raise ValueError(f"unknown family {family!r}")


def size_bench(
    family: str,
    n_list,
    k: int,
    protocol: str = "tw",
    pid: str | None = None,
    seed: int = 0,
) -> list[SizeRow]:
    rows = []
    proto = get_protocol(protocol, k, pid)
    for n in n_list:
        t0 = time.perf_counter()
        g, w = family_graph(family, n, k, seed)
        if protocol == "opt":
            from .opt import with_solution

            g = with_solution(g, ())
        certs = proto.prove(g, w)
        rep = certificate_bits(certs, proto.codec)
        l2 = math.log2(g.n) if g.n > 1 else 0.0
        rows.append(
            SizeRow(
                family, g.n, k, protocol, pid or "", rep.max, round(rep.mean, 2), round(l2, 4),
                64 * k * k * l2 * l2, round(time.perf_counter() - t0, 3),
            )
        )
    return rows


def fit_rows(rows) -> SizeFit:
    pts = [(r.log2n, r.max_bits) for r in rows if r.log2n > 1 and r.max_bits > 0]
    if len(pts) < 2:
        return SizeFit(float("nan"), float("nan"), len(pts))
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope, _ = np.polyfit(x, y, 1)
    sq = np.array([p[0] ** 2 for p in pts])
    bits = np.array([p[1] for p in pts], dtype=float)
    coef = float(sq @ bits / (sq @ sq))
    return SizeFit(float(slope), coef, len(pts))


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([getattr(r, f) for f in CSV_FIELDS])
    return buf.getvalue()
