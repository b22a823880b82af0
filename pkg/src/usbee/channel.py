"""Emission and noise model between the bus and the receiver.

The radiated field is not simulated. What the receiver sees is modelled as
the *transition density* of the line: each output sample is the fraction of
bit times within its window at which the D+/D- pair toggled. A pattern
segment from :func:`~usbee.pattern_gen.fill_buffer_freq` therefore shows up
as a roughly 50 % duty square envelope whose fundamental is the pattern
tone, and an idle or all-hold line is silent.

Bit stuffing stretches the pattern on the wire (stuff bits displace pattern
bits inside a fixed symbol airtime), which lowers the emitted tone by the
ratio raw/stuffed bits. :func:`emitted_tone_hz` accounts for this.
"""
import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bits import trailing_ones
from .pattern_gen import DEFAULT_PATTERN_BYTES, fill_buffer_freq, pattern_bits
from .usb_bus import STUFF_RUN, Level, LineWaveform, bit_stuff, nrzi_encode
from .errors import EnvelopeFormatError

LINE_RATE_HZ = 480_000_000
UNIT_HZ = 100_000


@dataclass(eq=False)
class EnvelopeSignal:
    samples: np.ndarray
    sample_rate_hz: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(eq=False)
class Spectrogram:
    """Time-ordered one-sided magnitude spectra, one row per FFT chunk."""

    chunks: np.ndarray
    bin_hz: float
    fft_size: int

    def __len__(self):
        return int(self.chunks.shape[0])


def bit_times(duration_s: float) -> int:
    """Number of 480 Mbit/s bit times in ``duration_s``; must be whole."""
    n = duration_s * LINE_RATE_HZ
    r = round(n)
    if abs(n - r) > 1e-6 * max(1.0, n):
        raise ValueError(f"duration {duration_s} s is not a whole number of bit times")
    return int(r)


def decimation(sample_rate_hz: float) -> int:
    """Bit times per envelope sample."""
    if not 0 < sample_rate_hz <= LINE_RATE_HZ:
        raise ValueError(f"sample rate must be in (0, {LINE_RATE_HZ}] Hz")
    ratio = LINE_RATE_HZ / sample_rate_hz
    d = round(ratio)
    if abs(ratio - d) > 1e-9 * ratio:
        raise ValueError(
            f"{LINE_RATE_HZ} / {sample_rate_hz:g} is not an integer decimation ratio"
        )
    return int(d)


@lru_cache(maxsize=64)
def _pattern(freq_units, pattern_size_bytes):
    bits = pattern_bits(fill_buffer_freq(freq_units, pattern_size_bytes))
    bits.flags.writeable = False
    return bits


def symbol_bits(freq_units, n_bit_times, pattern_size_bytes=DEFAULT_PATTERN_BYTES,
                stuffing=True, carry=0):
    """Wire bits for one symbol and the run-of-ones carried into the next.

    The pattern buffer is repeated to cover ``n_bit_times``; when stuffing
    is on, stuff bits are inserted and the result is cut back to the same
    number of bit times, since the bus clock does not stretch.
    """
    if n_bit_times == 0:
        return np.zeros(0, np.uint8), carry
    pattern = _pattern(float(freq_units), pattern_size_bytes)
    reps = -(-n_bit_times // pattern.size)
    raw = np.tile(pattern, reps)[:n_bit_times]
    if not stuffing:
        return raw, 0
    out = bit_stuff(raw, carry)[:n_bit_times]
    run = trailing_ones(out)
    if run == out.size and carry < STUFF_RUN:
        run += carry
    return out, min(run, STUFF_RUN)


def _entries(schedule):
    return schedule.entries if hasattr(schedule, "entries") else schedule


def synthesize_line(schedule, pattern_size_bytes: int = DEFAULT_PATTERN_BYTES,
                    stuffing: bool = True, initial: Level = Level.J) -> LineWaveform:
    """Full-rate line waveform for a symbol schedule.

    Each ``(freq_units, duration_s)`` entry becomes ``duration_s * 480e6`` bit
    times of the repeated pattern. Line state and the stuffing run counter
    are continuous across entries.
    """
    parts = []
    carry = 0
    for freq, duration in _entries(schedule):
        bits, carry = symbol_bits(freq, bit_times(duration), pattern_size_bytes, stuffing, carry)
        parts.append(bits)
    bits = np.concatenate(parts) if parts else np.zeros(0, np.uint8)
    return nrzi_encode(bits, initial)


def transition_counts(w: LineWaveform, sample_rate_hz: float) -> np.ndarray:
    """Integer number of toggles in each decimation window (partial tail dropped)."""
    d = decimation(sample_rate_hz)
    toggles = w.toggles()
    n = toggles.size // d
    return toggles[: n * d].reshape(n, d).sum(axis=1, dtype=np.int64)


def emission_envelope(w: LineWaveform, sample_rate_hz: float) -> EnvelopeSignal:
    d = decimation(sample_rate_hz)
    counts = transition_counts(w, sample_rate_hz)
    return EnvelopeSignal(counts / d, sample_rate_hz, {"snr_db": None})


def add_noise(sig: EnvelopeSignal, snr_db, seed, reference_power=None) -> EnvelopeSignal:
    """Add white Gaussian noise at ``snr_db`` relative to the signal's mean power.

    ``snr_db`` of None or +inf returns an unchanged copy. ``reference_power``
    overrides the measured mean-square power, e.g. to exclude guard silence.
    """
    if sig.samples.size == 0:
        raise ValueError("cannot add noise to an empty signal")
    meta = dict(sig.meta)
    if snr_db is None or snr_db == math.inf:
        meta["snr_db"] = None
        return EnvelopeSignal(sig.samples.copy(), sig.sample_rate_hz, meta)
    power = float(np.mean(sig.samples ** 2)) if reference_power is None else float(reference_power)
    if power <= 0:
        raise ValueError("signal power is zero; SNR is undefined")
    sigma = math.sqrt(power / 10 ** (snr_db / 10))
    rng = np.random.default_rng(seed)
    meta["snr_db"] = float(snr_db)
    return EnvelopeSignal(sig.samples + sigma * rng.standard_normal(sig.samples.size),
                          sig.sample_rate_hz, meta)


def spectrogram_of(sig: EnvelopeSignal, fft_size: int) -> Spectrogram:
    """Non-overlapping rectangular-window chunks, one-sided magnitudes (fft_size/2 bins)."""
    if fft_size < 2:
        raise ValueError("fft_size must be >= 2")
    n = sig.samples.size // fft_size
    if n < 1:
        raise ValueError(f"signal of {sig.samples.size} samples is shorter than one chunk")
    x = sig.samples[: n * fft_size].reshape(n, fft_size)
    mags = np.abs(np.fft.rfft(x, axis=1)[:, : fft_size // 2])
    return Spectrogram(mags, sig.sample_rate_hz / fft_size, fft_size)


@lru_cache(maxsize=256)
def stuffing_dilation(freq_units: float, pattern_size_bytes: int = DEFAULT_PATTERN_BYTES) -> float:
    """Raw-to-stuffed length ratio of one pattern buffer (<= 1)."""
    raw = _pattern(float(freq_units), pattern_size_bytes)
    return raw.size / bit_stuff(raw).size


def emitted_tone_hz(freq_units: float, stuffing: bool = True,
                    pattern_size_bytes: int = DEFAULT_PATTERN_BYTES) -> float:
    """Envelope fundamental produced by a pattern once it is on the wire."""
    tone = freq_units * UNIT_HZ
    if stuffing and freq_units > 0:
        tone *= stuffing_dilation(float(freq_units), pattern_size_bytes)
    return tone


class SymbolEnvelopeCache:
    """Per-symbol transition counts, memoised on (freq, bit times, carry).

    The envelope of a symbol depends only on its wire bits, which depend only
    on the pattern, the symbol length and the stuffing run carried in from
    the previous symbol. Caching that makes long frames cheap while staying
    identical to :func:`synthesize_line` + :func:`transition_counts`.
    """

    def __init__(self, sample_rate_hz, pattern_size_bytes=DEFAULT_PATTERN_BYTES, stuffing=True):
        self.sample_rate_hz = sample_rate_hz
        self.decimation = decimation(sample_rate_hz)
        self.pattern_size_bytes = pattern_size_bytes
        self.stuffing = stuffing
        self._memo = {}

    def counts(self, freq_units, n_bit_times, carry=0):
        key = (float(freq_units), n_bit_times, carry if self.stuffing else 0)
        hit = self._memo.get(key)
        if hit is None:
            if n_bit_times % self.decimation:
                raise ValueError("symbol length must be a whole number of envelope samples")
            bits, carry_out = symbol_bits(freq_units, n_bit_times, self.pattern_size_bytes,
                                          self.stuffing, key[2])
            c = (bits == 0).reshape(-1, self.decimation).sum(axis=1, dtype=np.int64)
            c.flags.writeable = False
            hit = self._memo[key] = (c, carry_out)
        return hit

    def symbols(self, schedule):
        """Yield ``(counts, n_bit_times)`` per entry, threading the stuffing carry."""
        carry = 0
        for freq, duration in _entries(schedule):
            n = bit_times(duration)
            c, carry = self.counts(freq, n, carry)
            yield c, n


def fast_envelope(schedule, sample_rate_hz, pattern_size_bytes=DEFAULT_PATTERN_BYTES,
                  stuffing=True, cache=None) -> EnvelopeSignal:
    """Same result as ``emission_envelope(synthesize_line(...))`` via the symbol cache."""
    cache = cache or SymbolEnvelopeCache(sample_rate_hz, pattern_size_bytes, stuffing)
    parts = [c for c, _ in cache.symbols(schedule)]
    counts = np.concatenate(parts) if parts else np.zeros(0, np.int64)
    return EnvelopeSignal(counts / cache.decimation, sample_rate_hz, {"snr_db": None})


def sidecar_path(path) -> str:
    return os.fspath(path) + ".json"


def write_envelope(path, sig: EnvelopeSignal, config_hash=None):
    """Write raw float32 little-endian samples plus a JSON sidecar."""
    with open(path, "wb") as fh:
        fh.write(sig.samples.astype("<f4").tobytes())
    meta = {
        "sample_rate_hz": float(sig.sample_rate_hz),
        "snr_db": sig.meta.get("snr_db"),
        "config_hash": config_hash,
    }
    with open(sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_envelope(path) -> EnvelopeSignal:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        with open(sidecar_path(path)) as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise EnvelopeFormatError(f"{path}: missing sidecar {sidecar_path(path)}") from None
    except json.JSONDecodeError as exc:
        raise EnvelopeFormatError(f"{sidecar_path(path)}: invalid JSON ({exc})") from None
    if not isinstance(meta, dict) or "sample_rate_hz" not in meta:
        raise EnvelopeFormatError(f"{sidecar_path(path)}: sample_rate_hz is required")
    if len(raw) % 4:
        raise EnvelopeFormatError(f"{path}: size {len(raw)} is not a multiple of 4 bytes")
    samples = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return EnvelopeSignal(samples, float(meta["sample_rate_hz"]), meta)
