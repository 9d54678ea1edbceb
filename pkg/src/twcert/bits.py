"""Canonical bit-level encoding used for every certificate.

Natural numbers use Elias gamma coding of n+1, vertex identifiers a fixed
width announced in a header, signed numbers zigzag coding. Encoded strings are
padded to whole bytes with zero bits; decoders reject anything non-canonical.
"""

from __future__ import annotations

from typing import Iterable


class DecodeError(ValueError):
    """Certificate bytes are malformed, truncated or non-canonical."""


class BitWriter:
    def __init__(self, id_width: int = 1):
        self.parts: list[str] = []
        self.id_width = max(1, id_width)

    def uint(self, value: int, width: int) -> None:
        if width == 0:
            return
        if value < 0 or value >> width:
            raise ValueError(f"{value} does not fit in {width} bits")
        self.parts.append(format(value, f"0{width}b"))

    def flag(self, b: bool) -> None:
        self.parts.append("1" if b else "0")

    def nat(self, n: int) -> None:
        if n < 0:
            raise ValueError("nat must be >= 0")
        b = format(n + 1, "b")
        self.parts.append("0" * (len(b) - 1) + b)

    def sint(self, n: int) -> None:
        self.nat(2 * n if n >= 0 else -2 * n - 1)

    def vid(self, v: int) -> None:
        self.uint(v, self.id_width)

    def opt_vid(self, v: int | None) -> None:
        self.flag(v is not None)
        if v is not None:
            self.vid(v)

    def idset(self, vs: Iterable[int]) -> None:
        s = sorted(vs)
        self.nat(len(s))
        for v in s:
            self.vid(v)

    def mask(self, bits: int, width: int) -> None:
        self.uint(bits, width)

    def bitstring(self) -> str:
        return "".join(self.parts)

    def __len__(self) -> int:
        return sum(len(p) for p in self.parts)

    def to_bytes(self) -> bytes:
        s = self.bitstring()
        pad = (-len(s)) % 8
        s += "0" * pad
        return int(s, 2).to_bytes(len(s) // 8, "big") if s else b""


class BitReader:
    def __init__(self, data: bytes):
        self.s = "".join(format(b, "08b") for b in data)
        self.pos = 0
        self.id_width = 1

    @classmethod
    def from_bits(cls, bits: str) -> "BitReader":
        r = cls(b"")
        r.s = bits
        return r

    def _take(self, width: int) -> str:
        end = self.pos + width
        if end > len(self.s):
            raise DecodeError("truncated certificate")
        out = self.s[self.pos : end]
        self.pos = end
        return out

    def uint(self, width: int) -> int:
        if width == 0:
            return 0
        return int(self._take(width), 2)

    def flag(self) -> bool:
        return self._take(1) == "1"

    def nat(self, limit: int = 1 << 40) -> int:
        zeros = 0
        while True:
            if self.pos >= len(self.s):
                raise DecodeError("truncated number")
            if self.s[self.pos] == "1":
                break
            zeros += 1
            self.pos += 1
            if zeros > 64:
                raise DecodeError("number too long")
        n = int(self._take(zeros + 1), 2) - 1
        if n > limit:
            raise DecodeError(f"value {n} exceeds limit {limit}")
        return n

    def sint(self) -> int:
        z = self.nat()
        return z // 2 if z % 2 == 0 else -(z + 1) // 2

    def vid(self) -> int:
        return self.uint(self.id_width)

    def opt_vid(self) -> int | None:
        return self.vid() if self.flag() else None

    def idset(self, limit: int = 1 << 16) -> tuple[int, ...]:
        n = self.nat(limit)
        out = tuple(self.vid() for _ in range(n))
        for a, b in zip(out, out[1:]):
            if a >= b:
                raise DecodeError("identifier set not strictly ascending")
        return out

    def mask(self, width: int) -> int:
        return self.uint(width)

    def finish(self) -> int:
        """Check canonical zero padding; return the number of payload bits."""
        rest = self.s[self.pos :]
        if len(rest) >= 8 or "1" in rest:
            raise DecodeError("trailing data after certificate")
        return self.pos


def id_width_for(max_id: int) -> int:
    """ceil(log2(max_id + 1)), at least 1."""
    return max(1, int(max_id).bit_length())


def index_width(size: int) -> int:
    """Bits for an index into a bag of ``size`` elements."""
    return max(1, (size - 1).bit_length())


def signed_width(bound: int) -> int:
    """Two's complement width able to hold every value in [-bound, bound]."""
    return max(1, bound).bit_length() + 1


def put_signed(w: BitWriter, value: int, width: int) -> None:
    lo, hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
    if not lo <= value <= hi:
        raise ValueError(f"{value} does not fit in {width} signed bits")
    w.uint(value & ((1 << width) - 1), width)


def get_signed(r: BitReader, width: int) -> int:
    u = r.uint(width)
    return u - (1 << width) if u >> (width - 1) else u
