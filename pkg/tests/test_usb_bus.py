import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from usbee.bits import as_bits, bits_to_str
from usbee.errors import FramingError
from usbee.usb_bus import (
    Level,
    TransferTimeParams,
    bit_stuff,
    bit_unstuff,
    nrzi_decode,
    nrzi_encode,
    stuffed_bit_count,
    transfer_time_ns,
    worst_case_stuffed_bits,
)

from oracles import nrzi, stuff, unstuff

bitlists = st.lists(st.integers(0, 1), max_size=300)


@pytest.mark.parametrize("bits, levels", [("000", "KJK"), ("111", "JJJ"), ("01", "KK")])
def test_nrzi_examples(bits, levels):
    w = nrzi_encode(bits, Level.J)
    assert str(w) == levels
    assert bits_to_str(nrzi_decode(w, Level.J)) == bits


def test_nrzi_from_k():
    assert str(nrzi_encode("0011", Level.K)) == "JKKK"


@settings(max_examples=200, deadline=None)
@given(bits=bitlists, initial=st.sampled_from(list(Level)))
def test_nrzi_matches_oracle_and_round_trips(bits, initial):
    w = nrzi_encode(bits, initial)
    assert str(w) == nrzi(bits, initial.name)
    assert nrzi_decode(w, initial).tolist() == bits
    assert w.transitions() == bits.count(0)


@pytest.mark.parametrize(
    "raw, stuffed",
    [("111111", "1111110"), ("0101", "0101"), ("1" * 12, "11111101111110")],
)
def test_stuff_examples(raw, stuffed):
    assert bits_to_str(bit_stuff(raw)) == stuffed
    assert bits_to_str(stuff(as_bits(raw).tolist())) == stuffed
    assert bits_to_str(bit_unstuff(stuffed)) == raw


def test_unstuff_rejects_seven_ones():
    with pytest.raises(FramingError):
        bit_unstuff("1111111")
    with pytest.raises(FramingError):
        bit_unstuff("0101111111100")


@settings(max_examples=300, deadline=None)
@given(bits=bitlists)
def test_stuff_matches_oracle(bits):
    out = bit_stuff(bits).tolist()
    assert out == stuff(bits)
    assert unstuff(out) == bits
    assert bit_unstuff(out).tolist() == bits
    assert "1111111" not in bits_to_str(out)


@settings(max_examples=100, deadline=None)
@given(bits=bitlists, split=st.integers(0, 300))
def test_stuff_in_pieces_with_carry(bits, split):
    split = min(split, len(bits))
    whole = bit_stuff(bits)
    head = bit_stuff(bits[:split])
    s = bits_to_str(head)
    carry = len(s) - len(s.rstrip("1"))
    tail = bit_stuff(bits[split:], carry)
    assert np.array_equal(np.concatenate([head, tail]), whole)


def test_owed_stuff_bit_is_emitted_first():
    assert bits_to_str(bit_stuff("1", carry=6)) == "01"
    assert bits_to_str(bit_stuff("11111", carry=1)) == "111110"
    with pytest.raises(ValueError):
        bit_stuff("1", carry=7)


def test_large_random_round_trip():
    rng = np.random.default_rng(7)
    bits = rng.integers(0, 2, 100_000).astype(np.uint8)
    stuffed = bit_stuff(bits)
    assert np.array_equal(bit_unstuff(stuffed), bits)
    assert "1111111" not in bits_to_str(stuffed)


@pytest.mark.parametrize(
    "data_bc, stuffed, expected",
    [(0, 0, 922.769), (1, 8, 939.433), (64, 598, 2168.403)],
)
def test_transfer_time_examples(data_bc, stuffed, expected):
    assert transfer_time_ns(TransferTimeParams(data_bc), stuffed) == pytest.approx(expected, abs=5e-4)


def test_transfer_time_helpers():
    assert worst_case_stuffed_bits(64) == 598
    assert worst_case_stuffed_bits(0) == 0
    assert stuffed_bit_count(b"\x00") == 8
    assert stuffed_bit_count(b"\xff") == 9
    assert transfer_time_ns(TransferTimeParams(1, 10.0), 8) == pytest.approx(949.433, abs=5e-4)


@settings(max_examples=100, deadline=None)
@given(
    a=st.integers(0, 10_000), b=st.integers(0, 10_000),
    d1=st.floats(0, 1e6), d2=st.floats(0, 1e6),
)
def test_transfer_time_monotone(a, b, d1, d2):
    lo, hi = sorted((a, b))
    dlo, dhi = sorted((d1, d2))
    p = TransferTimeParams(0, dlo)
    assert transfer_time_ns(p, lo) <= transfer_time_ns(p, hi)
    assert transfer_time_ns(p, lo) <= transfer_time_ns(TransferTimeParams(0, dhi), lo)


def test_transfer_time_params_validation():
    with pytest.raises(ValueError):
        TransferTimeParams(-1)
    with pytest.raises(ValueError):
        transfer_time_ns(TransferTimeParams(0), -1)
