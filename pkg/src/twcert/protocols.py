"""Uniform handles on the three certification protocols."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

from .graph import Graph
from .local import Verdict, run_round
from .mso import mso_codec, mso_extraction_oracle, mso_verifier, prove_mso
from .opt import opt_codec, opt_extraction_oracle, opt_verifier, prove_opt
from .tw import TW, TwCodec, check_claims, prove_tw, tw_verifier

PROTOCOLS = ("tw", "mso", "opt")


@dataclass(frozen=True)
class Protocol:
    name: str
    k: int
    pid: str | None
    codec: TwCodec
    verifier: Callable
    oracle: Callable  # (g, certs) -> list of failures
    prove: Callable  # (g, witness) -> certs

    @property
    def alg(self):
        return getattr(self.codec, "alg", None)

    def run(self, g: Graph, certs: Mapping[int, bytes]) -> Verdict:
        return run_round(g, certs, self.verifier)


def get_protocol(name: str, k: int, pid: str | None = None) -> Protocol:
    if name == "tw":
        return Protocol(
            "tw",
            k,
            None,
            TW,
            tw_verifier(k),
            lambda g, c: check_claims(g, c, k),
            lambda g, w=None: prove_tw(g, k, w),
        )
    if pid is None:
        raise ValueError(f"protocol {name!r} needs a property")
    if name == "mso":
        return Protocol(
            "mso",
            k,
            pid,
            mso_codec(pid),
            mso_verifier(k, pid),
            lambda g, c: mso_extraction_oracle(g, c, k, pid),
            lambda g, w=None: prove_mso(g, k, pid, w),
        )
    if name == "opt":
        return Protocol(
            "opt",
            k,
            pid,
            opt_codec(pid),
            opt_verifier(k, pid),
            lambda g, c: opt_extraction_oracle(g, c, k, pid),
            lambda g, w=None: prove_opt(g, k, pid, None, w),
        )
    raise ValueError(f"unknown protocol {name!r}; choose from {PROTOCOLS}")
