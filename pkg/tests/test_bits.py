from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from twcert.bits import (
    BitReader,
    BitWriter,
    DecodeError,
    get_signed,
    id_width_for,
    index_width,
    put_signed,
    signed_width,
)


@given(st.lists(st.tuples(st.sampled_from("unsf"), st.integers(0, 10**6))))
def test_roundtrip(items):
    w = BitWriter(20)
    for kind, x in items:
        if kind == "u":
            w.uint(x, 20)
        elif kind == "n":
            w.nat(x)
        elif kind == "s":
            w.sint(x - 500_000)
        else:
            w.flag(x % 2 == 1)
    r = BitReader(w.to_bytes())
    r.id_width = 20
    for kind, x in items:
        if kind == "u":
            assert r.uint(20) == x
        elif kind == "n":
            assert r.nat() == x
        elif kind == "s":
            assert r.sint() == x - 500_000
        else:
            assert r.flag() == (x % 2 == 1)
    assert r.finish() == len(w)


@given(st.sets(st.integers(0, 4095), max_size=30))
def test_idset_canonical(ids):
    w = BitWriter(12)
    w.idset(ids)
    r = BitReader(w.to_bytes())
    r.id_width = 12
    assert r.idset() == tuple(sorted(ids))


def test_idset_rejects_unsorted():
    w = BitWriter(4)
    w.nat(2)
    w.vid(5)
    w.vid(3)
    r = BitReader(w.to_bytes())
    r.id_width = 4
    with pytest.raises(DecodeError):
        r.idset()


def test_truncation_and_padding():
    with pytest.raises(DecodeError):
        BitReader(b"").nat()
    r = BitReader(b"\x80\x01")
    assert r.flag() is True
    with pytest.raises(DecodeError):
        r.finish()


def test_widths():
    assert id_width_for(0) == 1
    assert id_width_for(255) == 8
    assert id_width_for(256) == 9
    assert index_width(1) == 1
    assert index_width(9) == 4
    assert signed_width(0) == 2


@given(st.integers(-(10**9), 10**9))
def test_signed(value):
    width = signed_width(abs(value))
    w = BitWriter()
    put_signed(w, value, width)
    assert get_signed(BitReader(w.to_bytes()), width) == value
