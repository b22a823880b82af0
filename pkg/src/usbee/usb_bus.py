"""USB 2.0 high-speed data-bus line model: NRZI, bit stuffing, transfer time."""
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .bits import as_bits, bytes_to_bits
from .errors import FramingError

#: 480 Mbit/s bit period in nanoseconds, as used by the transfer-time formula.
BIT_TIME_NS = 2.083
#: Consecutive '1' bits after which a '0' is stuffed.
STUFF_RUN = 6


class Level(IntEnum):
    """Differential line state. J drives D+, K drives D-."""

    J = 0
    K = 1


@dataclass(frozen=True, eq=False)
class LineWaveform:
    """Line level per bit time (0 = J, 1 = K) plus the level before the first bit."""

    levels: np.ndarray
    initial: Level = Level.J
    bit_time_ns: float = BIT_TIME_NS

    def __len__(self):
        return int(self.levels.size)

    def toggles(self) -> np.ndarray:
        """Boolean per bit time: did the level change at this clock boundary."""
        prev = np.empty_like(self.levels)
        if prev.size:
            prev[0] = int(self.initial)
            prev[1:] = self.levels[:-1]
        return self.levels != prev

    def transitions(self) -> int:
        return int(np.count_nonzero(self.toggles()))

    def __str__(self):
        return "".join("K" if v else "J" for v in self.levels)


def nrzi_encode(bits, initial: Level = Level.J) -> LineWaveform:
    """'0' toggles the line, '1' holds it."""
    b = as_bits(bits)
    flips = np.cumsum(b == 0, dtype=np.int64)
    levels = ((int(initial) + flips) % 2).astype(np.uint8)
    return LineWaveform(levels, Level(initial))


def nrzi_decode(w: LineWaveform, initial: Level = None) -> np.ndarray:
    if initial is not None and Level(initial) != w.initial:
        w = LineWaveform(w.levels, Level(initial), w.bit_time_ns)
    return (~w.toggles()).astype(np.uint8)


def _ones_run_lengths(b: np.ndarray, carry: int = 0) -> np.ndarray:
    """For each position, the length of the run of '1's ending there (0 on a '0')."""
    idx = np.arange(b.size)
    last_zero = np.maximum.accumulate(np.where(b == 0, idx, -1)) if b.size else idx
    run = idx - last_zero
    if carry:
        run = np.where(last_zero < 0, run + carry, run)
    return np.where(b == 1, run, 0)


def bit_stuff(bits, carry: int = 0) -> np.ndarray:
    """Insert a '0' after every run of six consecutive '1's.

    ``carry`` is the number of '1's already on the wire immediately before
    ``bits`` (0..6), so a long stream can be stuffed in pieces. A carry of 6
    means the stuff bit for the previous piece is still owed.
    """
    if not 0 <= carry <= STUFF_RUN:
        raise ValueError(f"carry must be in [0, {STUFF_RUN}]")
    b = as_bits(bits)
    prefix = np.zeros(1, np.uint8) if carry == STUFF_RUN else np.zeros(0, np.uint8)
    if carry == STUFF_RUN:
        carry = 0
    run = _ones_run_lengths(b, carry)
    at = np.flatnonzero((run > 0) & (run % STUFF_RUN == 0)) + 1
    return np.concatenate([prefix, np.insert(b, at, 0)])


def bit_unstuff(bits) -> np.ndarray:
    """Remove stuff bits; raise :class:`FramingError` on seven '1's in a row."""
    b = as_bits(bits)
    run = _ones_run_lengths(b)
    bad = np.flatnonzero(run > STUFF_RUN)
    if bad.size:
        raise FramingError(f"seven consecutive '1' bits ending at bit {int(bad[0])}")
    drop = np.flatnonzero(run == STUFF_RUN) + 1
    drop = drop[drop < b.size]
    return np.delete(b, drop)


@dataclass(frozen=True)
class TransferTimeParams:
    data_bc: int
    host_delay_ns: float = 0.0

    def __post_init__(self):
        if self.data_bc < 0:
            raise ValueError("data_bc must be >= 0")
        if self.host_delay_ns < 0:
            raise ValueError("host_delay_ns must be >= 0")


def worst_case_stuffed_bits(data_bc: int) -> int:
    """ceil(data_bc * 8 * 7/6), the all-ones bound."""
    return -(-data_bc * 8 * 7 // 6)


def stuffed_bit_count(data: bytes) -> int:
    """Exact wire bit count of ``data`` after stuffing (MSB-first expansion)."""
    return int(bit_stuff(bytes_to_bits(data)).size)


def transfer_time_ns(p: TransferTimeParams, stuffed_bits: int) -> float:
    """High-speed packet transfer time including protocol overhead.

    The 55-byte overhead, the 2.083 ns bit period and the 3.16 offset are
    fixed constants of the formula and are not derived here.
    """
    if stuffed_bits < 0:
        raise ValueError("stuffed_bits must be >= 0")
    return (55 * 8 * BIT_TIME_NS) + (BIT_TIME_NS * math.floor(3.16 + stuffed_bits)) + p.host_delay_ns
