"""B-FSK modem: framing, modulation onto pattern tones, chunked-FFT demodulation.

Transmit: payload bytes -> frame bits (preamble, sync word, payload MSB-first)
-> one schedule entry per bit, '0' on the lower tone ``f0``, '1' on ``f1``.

Receive: the envelope is cut into FFT chunks of ``SR * TOB / 4`` samples, so
four chunks span one bit. Each chunk is classified as ZERO, ONE or
NO_SIGNAL by comparing the magnitudes at the two tone bins against the
chunk median. Chunk votes are correlated against the frame header to find
the start, then combined four at a time by majority.
"""
import configparser
import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction

import numpy as np

from .bits import as_bits, bits_to_bytes, bytes_to_bits
from .channel import Spectrogram, bit_times, decimation, emitted_tone_hz
from .errors import ConfigError, NoSyncError, TruncatedFrameError
from .pattern_gen import DEFAULT_PATTERN_BYTES, MAX_FREQ_UNITS

CHUNKS_PER_BIT = 4
PREAMBLE_BITS = np.tile(np.array([1, 0], np.uint8), 8)
SYNC_WORD = 0xD5
HEADER_BITS = np.concatenate([PREAMBLE_BITS, bytes_to_bits([SYNC_WORD])])

# header correlation at chunk resolution: 96 chunks, perfect match scores 96
SYNC_MIN_SCORE = 80
# after the first crossing, keep looking this many chunks for a better peak
SYNC_LOOKAHEAD = 2 * CHUNKS_PER_BIT


def _exact(x) -> Fraction:
    return Fraction(x).limit_denominator(10**9)


def chunk_size(sample_rate_hz, tob_s) -> int:
    """FFT size SR * TOB / 4; the product must be a positive multiple of 4."""
    prod = _exact(sample_rate_hz) * _exact(tob_s)
    if prod <= 0 or prod.denominator != 1 or prod.numerator % CHUNKS_PER_BIT:
        raise ConfigError(
            f"sample_rate_hz * tob_s = {float(prod):g} is not a positive multiple of 4"
        )
    return prod.numerator // CHUNKS_PER_BIT


@dataclass(frozen=True)
class ModemConfig:
    f0_units: float = 300.0
    f1_units: float = 400.0
    tob_s: float = 1 / 640
    sample_rate_hz: float = 96e6
    chunks_per_bit: int = CHUNKS_PER_BIT
    detect_threshold: float = 6.0
    bit_stuffing: bool = True
    pattern_size_bytes: int = DEFAULT_PATTERN_BYTES
    guard_bits: int = 2

    def __post_init__(self):
        if not 0 <= self.f0_units < self.f1_units <= MAX_FREQ_UNITS:
            raise ConfigError(
                f"need 0 <= f0_units < f1_units <= {MAX_FREQ_UNITS:g}, "
                f"got {self.f0_units}, {self.f1_units}"
            )
        if self.tob_s <= 0 or self.sample_rate_hz <= 0:
            raise ConfigError("tob_s and sample_rate_hz must be positive")
        if self.chunks_per_bit != CHUNKS_PER_BIT:
            raise ConfigError("chunks_per_bit is fixed at 4")
        if self.detect_threshold <= 0:
            raise ConfigError("detect_threshold must be positive")
        if self.pattern_size_bytes < 4 or self.pattern_size_bytes % 4:
            raise ConfigError("pattern_size_bytes must be a positive multiple of 4")
        if self.guard_bits < 0:
            raise ConfigError("guard_bits must be >= 0")
        chunk_size(self.sample_rate_hz, self.tob_s)

    @property
    def bytes_per_s(self) -> float:
        return 1 / (8 * self.tob_s)

    @property
    def samples_per_bit(self) -> int:
        return fft_chunk_size(self) * CHUNKS_PER_BIT

    def with_rate(self, bytes_per_s) -> "ModemConfig":
        return dataclasses.replace(self, tob_s=float(1 / (8 * _exact(bytes_per_s))))


def fft_chunk_size(cfg: ModemConfig) -> int:
    return chunk_size(cfg.sample_rate_hz, cfg.tob_s)


def tone_bins(cfg: ModemConfig, bin_hz: float):
    """FFT bins nearest to where the f0 and f1 envelopes land."""
    return tuple(
        int(round(emitted_tone_hz(f, cfg.bit_stuffing, cfg.pattern_size_bytes) / bin_hz))
        for f in (cfg.f0_units, cfg.f1_units)
    )


def check_channel(cfg: ModemConfig):
    """Constraints the emission model adds on top of the modem's own invariants."""
    try:
        decimation(cfg.sample_rate_hz)
        bit_times(cfg.tob_s)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    nyquist = cfg.sample_rate_hz / 2
    for f in (cfg.f0_units, cfg.f1_units):
        tone = emitted_tone_hz(f, cfg.bit_stuffing, cfg.pattern_size_bytes)
        if not 0 < tone < nyquist:
            raise ConfigError(
                f"tone for {f:g} units ({tone / 1e6:.3f} MHz) must lie in (0, SR/2 = {nyquist / 1e6:g} MHz)"
            )
    b0, b1 = tone_bins(cfg, cfg.sample_rate_hz / fft_chunk_size(cfg))
    if b0 == b1:
        raise ConfigError("f0 and f1 fall into the same FFT bin")


_FIELDS = {f.name: f.type for f in dataclasses.fields(ModemConfig)}


def _coerce(name, text):
    kind = _FIELDS[name]
    if kind in ("bool", bool):
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: not a boolean: {text!r}")
    try:
        if kind in ("int", int):
            return int(text)
        return float(Fraction(text.strip()))
    except ValueError:
        raise ConfigError(f"{name}: bad value {text!r}") from None


def parse_config(text: str, check=True) -> ModemConfig:
    """Parse ``key = value`` lines (``#`` comments allowed) into a config.

    ``bytes_per_s`` may be given instead of ``tob_s``. Values accept simple
    fractions such as ``1/640``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string("[modem]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for key, raw in cp["modem"].items():
        if key == "bytes_per_s":
            values["tob_s"] = float(1 / (8 * Fraction(raw.strip())))
        elif key in _FIELDS:
            values[key] = _coerce(key, raw)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    cfg = ModemConfig(**values)
    if check:
        check_channel(cfg)
    return cfg


def load_config(path=None, check=True) -> ModemConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        cfg = ModemConfig()
        if check:
            check_channel(cfg)
        return cfg
    with open(path) as fh:
        return parse_config(fh.read(), check=check)


def dump_config(cfg: ModemConfig) -> str:
    return "".join(f"{k} = {getattr(cfg, k)!r}\n" for k in sorted(_FIELDS))


def config_hash(cfg: ModemConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()[:16]


def frame(payload) -> np.ndarray:
    """Preamble (16 alternating bits), sync byte 0xD5, payload bits MSB-first."""
    payload = bytes(payload)
    if not payload:
        raise ValueError("payload must not be empty")
    return np.concatenate([HEADER_BITS, bytes_to_bits(payload)])


@dataclass
class SymbolSchedule:
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def airtime_s(self) -> float:
        return sum(d for _, d in self.entries)


def bfsk_modulate(bits, cfg: ModemConfig) -> SymbolSchedule:
    tones = (cfg.f0_units, cfg.f1_units)
    return SymbolSchedule([(tones[b], cfg.tob_s) for b in as_bits(bits).tolist()])


class Symbol(IntEnum):
    # values double as the +/-1 signs used for header correlation
    ZERO = -1
    NO_SIGNAL = 0
    ONE = 1


def row_median(m):
    """Median of each row (same values as ``np.median(m, axis=1)``, cheaper)."""
    n = m.shape[1]
    k = n // 2
    if n % 2:
        return np.partition(m, k, axis=1)[:, k]
    part = np.partition(m, k, axis=1)
    return (part[:, :k].max(axis=1) + part[:, k]) / 2


def classify_chunks(mags, cfg: ModemConfig, bin_hz=None) -> np.ndarray:
    """Classify each row of a magnitude matrix; returns int8 Symbol values."""
    m = np.atleast_2d(np.asarray(mags))
    if not np.issubdtype(m.dtype, np.floating):
        m = m.astype(np.float64)
    if bin_hz is None:
        bin_hz = cfg.sample_rate_hz / (2 * m.shape[1])
    b0, b1 = tone_bins(cfg, bin_hz)
    if max(b0, b1) >= m.shape[1]:
        raise ConfigError("tone bin beyond the one-sided spectrum")
    p0, p1 = m[:, b0], m[:, b1]
    med = row_median(m)
    peak = np.maximum(p0, p1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(med > 0, peak / np.where(med > 0, med, 1.0), np.where(peak > 0, np.inf, 0.0))
    present = ratio >= cfg.detect_threshold
    out = np.zeros(m.shape[0], np.int8)
    out[present & (p0 > p1)] = Symbol.ZERO
    out[present & (p1 > p0)] = Symbol.ONE
    return out


def classify_chunk(chunk, cfg: ModemConfig) -> Symbol:
    return Symbol(int(classify_chunks(chunk, cfg)[0]))


@dataclass
class DemodStats:
    """Vote record of one frame.

    ``votes`` has one row of four chunk classes per payload bit and
    ``decisions`` the resulting per-bit Symbol; a NO_SIGNAL decision is an
    erasure (tied vote) and is emitted as a '0' bit.
    """

    sync_chunk: int = None
    sync_score: int = 0
    votes: np.ndarray = field(default_factory=lambda: np.zeros((0, CHUNKS_PER_BIT), np.int8))
    decisions: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int8))

    @property
    def erasures(self) -> int:
        return int(np.count_nonzero(self.decisions == Symbol.NO_SIGNAL))

    def describe(self) -> str:
        names = {Symbol.ZERO: "0", Symbol.ONE: "1", Symbol.NO_SIGNAL: "-"}
        groups = ["".join(names[v] for v in row) for row in self.votes.tolist()]
        return " ".join(groups)


def _header_template():
    return np.repeat(HEADER_BITS.astype(np.int64) * 2 - 1, CHUNKS_PER_BIT)


def find_sync(votes):
    """Chunk index where the header starts, and its correlation score."""
    v = np.asarray(votes, dtype=np.int64)
    tpl = _header_template()
    if v.size < tpl.size:
        return None, 0
    scores = np.correlate(v, tpl, mode="valid")
    hits = np.flatnonzero(scores >= SYNC_MIN_SCORE)
    if hits.size == 0:
        return None, int(scores.max())
    first = int(hits[0])
    window = scores[first : first + SYNC_LOOKAHEAD + 1]
    best = first + int(np.argmax(window))
    return best, int(scores[best])


def decode_votes(votes):
    """Turn a chunk-vote sequence into payload bytes.

    Raises :class:`NoSyncError` if the header is never found and
    :class:`TruncatedFrameError` if the signal ends mid-byte.
    """
    v = np.asarray(votes, dtype=np.int8)
    start, score = find_sync(v)
    if start is None:
        raise NoSyncError(f"no frame header found (best score {score})",
                          stats=DemodStats(sync_score=score))
    pos = start + HEADER_BITS.size * CHUNKS_PER_BIT
    rows, decisions = [], []
    while pos + CHUNKS_PER_BIT <= v.size:
        group = v[pos : pos + CHUNKS_PER_BIT]
        if np.count_nonzero(group == Symbol.NO_SIGNAL) >= 3:
            break
        ones = np.count_nonzero(group == Symbol.ONE)
        zeros = np.count_nonzero(group == Symbol.ZERO)
        decisions.append(Symbol.ONE if ones > zeros else Symbol.ZERO if zeros > ones else Symbol.NO_SIGNAL)
        rows.append(group)
        pos += CHUNKS_PER_BIT
    stats = DemodStats(
        sync_chunk=start,
        sync_score=score,
        votes=np.array(rows, np.int8).reshape(-1, CHUNKS_PER_BIT),
        decisions=np.array(decisions, np.int8),
    )
    bits = (stats.decisions == Symbol.ONE).astype(np.uint8)
    if bits.size == 0 or bits.size % 8:
        raise TruncatedFrameError(
            f"signal lost after {bits.size} payload bits (not a whole byte)", bits=bits, stats=stats
        )
    return bits_to_bytes(bits), stats


def bfsk_demodulate(spec: Spectrogram, cfg: ModemConfig):
    """Classify every chunk of ``spec`` and decode the frame it carries."""
    expected = fft_chunk_size(cfg)
    if spec.fft_size != expected:
        raise ConfigError(f"spectrogram chunk size {spec.fft_size} != SR*TOB/4 = {expected}")
    return decode_votes(classify_chunks(spec.chunks, cfg, spec.bin_hz))


def airtime_s(n_bits: int, cfg: ModemConfig) -> float:
    return n_bits * cfg.tob_s


def nearest_valid_rate(bytes_per_s: float, sample_rate_hz: float):
    """Closest integer byte rate whose FFT chunk size is an integer, or None."""

    def valid(rate):
        try:
            chunk_size(sample_rate_hz, 1 / (8 * Fraction(rate)))
        except ConfigError:
            return False
        return True

    cands = [c for c in range(1, 2 * math.ceil(bytes_per_s) + 2) if valid(c)]
    return min(cands, key=lambda c: (abs(c - bytes_per_s), c)) if cands else None
