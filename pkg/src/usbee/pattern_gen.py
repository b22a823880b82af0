"""Bus pattern synthesis.

``fill_buffer_freq`` builds the byte buffer that, once written to a USB
device, toggles the D+/D- pair as a square wave at ``freq_units`` x 100 kHz.
The logic mirrors the original C routine step for step: a 32-bit
accumulator is shifted left once per generated bit, the new LSB is set when
``floor(i * t)`` is even (with ``t = freq / 4800 * 2``), and a word is
emitted every 32 bits. The loop is vectorised here but performs the same
IEEE-754 double arithmetic, so the output is bit-identical.
"""
from dataclasses import dataclass

import numpy as np

from .bits import as_bits

#: 480 MHz bit clock expressed in 100 kHz units.
BUS_CLOCK_UNITS = 4800
#: Highest representable tone: one toggle every bit time.
MAX_FREQ_UNITS = BUS_CLOCK_UNITS / 2
#: Buffer size used by the original transmitter (6 KiB).
DEFAULT_PATTERN_BYTES = 6144


@dataclass(frozen=True, eq=False)
class PatternBuffer:
    """Packed output of :func:`fill_buffer_freq`.

    ``words[k]`` holds generated bits ``32k .. 32k+31`` with the first
    generated bit in the most significant position.
    """

    words: np.ndarray
    freq_units: float
    size_bytes: int

    def __post_init__(self):
        if self.words.size * 4 != self.size_bytes:
            raise ValueError("words.size * 4 must equal size_bytes")

    def __eq__(self, other):
        if not isinstance(other, PatternBuffer):
            return NotImplemented
        return (
            self.size_bytes == other.size_bytes
            and self.freq_units == other.freq_units
            and np.array_equal(self.words, other.words)
        )

    def to_bytes(self) -> bytes:
        """Little-endian word serialization (what a commodity host writes)."""
        return self.words.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, freq_units: float = float("nan")) -> "PatternBuffer":
        if len(data) % 4:
            raise ValueError("pattern data must be a whole number of 32-bit words")
        words = np.frombuffer(data, dtype="<u4").astype(np.uint32)
        return cls(words, freq_units, len(data))


def _check_args(freq_units, size_bytes):
    if size_bytes < 4 or size_bytes % 4:
        raise ValueError(f"size_bytes must be a positive multiple of 4, got {size_bytes}")
    if not 0 <= freq_units <= MAX_FREQ_UNITS:
        raise ValueError(f"freq_units must lie in [0, {MAX_FREQ_UNITS:g}], got {freq_units}")


def generated_bits(freq_units: float, n_bits: int) -> np.ndarray:
    """The first ``n_bits`` bits the generator loop produces, in order."""
    t = freq_units / BUS_CLOCK_UNITS * 2
    i = np.arange(n_bits, dtype=np.float64)
    # (int)(i*t) truncates; i*t >= 0 so floor is the same thing
    return (np.floor(i * t).astype(np.int64) % 2 == 0).astype(np.uint8)


def fill_buffer_freq(freq_units: float, size_bytes: int) -> PatternBuffer:
    """Fill a ``size_bytes`` buffer with the square-wave pattern for ``freq_units``."""
    _check_args(freq_units, size_bytes)
    bits = generated_bits(freq_units, size_bytes * 8)
    return pack_bits(bits, freq_units)


def pack_bits(bits, freq_units: float = float("nan")) -> PatternBuffer:
    """Pack a logical bit stream into 32-bit words, first bit as MSB."""
    b = as_bits(bits)
    if b.size % 32:
        raise ValueError("bit count must be a multiple of 32")
    words = np.packbits(b).view(">u4").astype(np.uint32)
    return PatternBuffer(words, freq_units, b.size // 8)


def pattern_bits(p: PatternBuffer) -> np.ndarray:
    """Unpack a buffer back into the generated bit order."""
    return np.unpackbits(p.words.astype(">u4").view(np.uint8))


def period_bits(freq_units: float) -> float:
    """Pattern period in bit times (4800 / freq)."""
    return BUS_CLOCK_UNITS / freq_units
