"""Bit-stream helpers.

A bit stream is a 1-D ``uint8`` numpy array of 0/1 values. Bytes are
expanded MSB-first.
"""
import numpy as np


def as_bits(bits) -> np.ndarray:
    """Coerce a '0'/'1' string, a sequence of ints or an array to a bit array."""
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bit string: {bits!r}")
        return (np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")).astype(np.uint8)
    arr = np.asarray(bits)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError("bit values must be 0 or 1")
    return arr.astype(np.uint8, copy=False)


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in as_bits(bits))


def bytes_to_bits(data) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_bytes(bits) -> bytes:
    b = as_bits(bits)
    if b.size % 8:
        raise ValueError(f"bit count {b.size} is not a whole number of bytes")
    return np.packbits(b).tobytes()


def trailing_ones(bits) -> int:
    b = as_bits(bits)
    zeros = np.flatnonzero(b == 0)
    return int(b.size if zeros.size == 0 else b.size - 1 - zeros[-1])
