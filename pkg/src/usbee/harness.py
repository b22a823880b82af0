"""End-to-end loopback and BER/throughput sweeps.

Two receive paths share the same classifier and frame decoder:

``"envelope"``
    Materialises the envelope sample stream, adds time-domain noise and
    runs :func:`~usbee.channel.spectrogram_of`. Used for single loopbacks
    and whenever the samples must be written to disk.

``"spectral"``
    Caches the complex spectrum of every (tone, stuffing carry) symbol and
    draws the noise directly in the frequency domain. The DFT of white
    Gaussian noise of variance s^2 over N samples is, bin by bin, an
    independent N(0, N s^2) at DC and a circular complex normal of total
    variance N s^2 elsewhere, so the classifier sees the same statistics
    without an FFT per chunk. Noiseless, the two paths agree exactly.
"""
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .bits import bytes_to_bits
from .channel import EnvelopeSignal, SymbolEnvelopeCache, add_noise, bit_times, spectrogram_of
from .errors import ConfigError, DemodError, NoSyncError
from .modem import (
    CHUNKS_PER_BIT,
    ModemConfig,
    bfsk_modulate,
    check_channel,
    classify_chunks,
    config_hash,
    decode_votes,
    fft_chunk_size,
    frame,
    nearest_valid_rate,
)

SWEEP_FIELDS = [
    "bit_rate_bps", "bytes_per_s", "snr_db", "trials", "bit_errors", "BER",
    "frame_sync_failures", "config_hash", "seed",
]


@dataclass
class LoopbackResult:
    sent: bytes
    recovered: bytes
    bit_errors: int
    stats: object
    airtime_s: float
    payload_airtime_s: float
    error: DemodError = None
    envelope: EnvelopeSignal = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.recovered == self.sent


def count_bit_errors(sent: bytes, recovered_bits) -> int:
    """Hamming distance over the sent bits; missing bits count as errors."""
    ref = bytes_to_bits(sent)
    got = np.asarray(recovered_bits, np.uint8)[: ref.size]
    return int(np.count_nonzero(ref[: got.size] != got) + (ref.size - got.size))


class Link:
    """Transmitter + channel + receiver for one config, with per-symbol caches."""

    def __init__(self, cfg: ModemConfig):
        check_channel(cfg)
        self.cfg = cfg
        self.fft_size = fft_chunk_size(cfg)
        self.bin_hz = cfg.sample_rate_hz / self.fft_size
        self.envelopes = SymbolEnvelopeCache(cfg.sample_rate_hz, cfg.pattern_size_bytes, cfg.bit_stuffing)
        self._spectra = {}

    # transmit side ---------------------------------------------------------

    def schedule(self, payload):
        return bfsk_modulate(frame(payload), self.cfg)

    def _symbols(self, payload):
        """(cache key, counts) per transmitted bit."""
        carry = 0
        out = []
        for freq, duration in self.schedule(payload):
            n = bit_times(duration)
            key = (freq, carry)
            counts, carry = self.envelopes.counts(freq, n, carry)
            out.append((key, counts))
        return out

    def envelope(self, payload):
        """Noiseless envelope with guard silence; returns (signal, frame power, symbol lengths)."""
        syms = self._symbols(payload)
        d = self.envelopes.decimation
        guard = np.zeros(self.cfg.guard_bits * self.cfg.samples_per_bit)
        body = np.concatenate([c for _, c in syms]) / d
        power = float(np.mean(body**2))
        sig = EnvelopeSignal(np.concatenate([guard, body, guard]), self.cfg.sample_rate_hz, {"snr_db": None})
        return sig, power, [c.size for _, c in syms]

    # spectral fast path ----------------------------------------------------

    def _symbol_spectra(self, key, counts):
        hit = self._spectra.get(key)
        if hit is None:
            x = (counts / self.envelopes.decimation).reshape(CHUNKS_PER_BIT, self.fft_size)
            spec = np.fft.rfft(x, axis=1)[:, : self.fft_size // 2]
            votes = classify_chunks(np.abs(spec), self.cfg, self.bin_hz)
            power_sum = float(np.sum(x**2))
            hit = self._spectra[key] = (spec, votes, power_sum)
        return hit

    def spectral_votes(self, payload, snr_db=None, rng=None):
        """Chunk votes for one frame (guards included) via the cached spectra."""
        syms = self._symbols(payload)
        parts = [self._symbol_spectra(k, c) for k, c in syms]
        n_guard = self.cfg.guard_bits * CHUNKS_PER_BIT
        if snr_db is None or snr_db == math.inf:
            silent = np.zeros(n_guard, np.int8)
            return np.concatenate([silent] + [v for _, v, _ in parts] + [silent]), syms
        n_samples = sum(c.size for _, c in syms)
        power = sum(p for _, _, p in parts) / n_samples
        sigma2 = power / 10 ** (snr_db / 10)
        spec = self._noise_spectrum(len(parts) * CHUNKS_PER_BIT + 2 * n_guard, sigma2, rng)
        for i, (s, _, _) in enumerate(parts):
            lo = n_guard + i * CHUNKS_PER_BIT
            spec[lo : lo + CHUNKS_PER_BIT] += s
        return classify_chunks(np.abs(spec), self.cfg, self.bin_hz), syms

    def _noise_spectrum(self, n_chunks, sigma2, rng):
        """DFT of white noise, drawn directly: complex64 rows of fft_size/2 bins."""
        n = self.fft_size
        half = n // 2
        noise = rng.standard_normal((n_chunks, 2 * half), dtype=np.float32).view(np.complex64)
        noise *= np.float32(math.sqrt(n * sigma2 / 2))
        # DC is real with the full variance
        noise[:, 0] = np.float32(math.sqrt(n * sigma2)) * rng.standard_normal(n_chunks, dtype=np.float32)
        return noise

    # receive ---------------------------------------------------------------

    def loopback(self, payload, snr_db=None, seed=0, path="envelope") -> LoopbackResult:
        payload = bytes(payload)
        rng = np.random.default_rng(seed)
        sig = None
        if path == "envelope":
            sig, power, lengths = self.envelope(payload)
            if snr_db is not None and snr_db != math.inf:
                sig = add_noise(sig, snr_db, rng, reference_power=power)
            votes = classify_chunks(spectrogram_of(sig, self.fft_size).chunks, self.cfg, self.bin_hz)
        elif path == "spectral":
            votes, syms = self.spectral_votes(payload, snr_db, rng)
            lengths = [c.size for _, c in syms]
        else:
            raise ValueError(f"unknown path {path!r}")
        sr = self.cfg.sample_rate_hz
        n_header = len(lengths) - 8 * len(payload)
        airtime = sum(lengths) / sr
        payload_airtime = sum(lengths[n_header:]) / sr
        try:
            recovered, stats = decode_votes(votes)
            error = None
            bits = bytes_to_bits(recovered)
        except DemodError as exc:
            recovered, stats, error, bits = b"", exc.stats, exc, exc.bits
        return LoopbackResult(payload, recovered, count_bit_errors(payload, bits), stats,
                              airtime, payload_airtime, error, sig)


def loopback(payload, cfg: ModemConfig = None, snr_db=None, seed=0, path="envelope"):
    return Link(cfg or ModemConfig()).loopback(payload, snr_db, seed, path)


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    config_hash: str = ""
    seed: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: _fmt(row[k]) for k in SWEEP_FIELDS})
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def check_rates(cfg: ModemConfig, rates):
    """Reject byte rates whose FFT chunk would not be an integer."""
    for r in rates:
        try:
            cfg.with_rate(r)
        except ConfigError:
            near = nearest_valid_rate(r, cfg.sample_rate_hz)
            raise ConfigError(
                f"rate {r:g} B/s gives a non-integer FFT size at SR={cfg.sample_rate_hz:g} Hz; "
                f"nearest valid rate is {near} B/s"
            ) from None


def sweep(cfg: ModemConfig, rates, snrs, trials, seed=0, payload_bytes=4) -> SweepReport:
    """Monte-Carlo BER over a (rate, SNR) grid using the spectral path.

    Trial ``t`` of row ``r`` draws its payload and noise from
    ``SeedSequence([seed, r, t])``, so rows are independent of order.
    """
    check_rates(cfg, rates)
    report = SweepReport(config_hash=config_hash(cfg), seed=seed)
    row_index = 0
    for rate in rates:
        link = Link(cfg.with_rate(rate))
        for snr in snrs:
            errors = sync_failures = 0
            for t in range(trials):
                rng = np.random.default_rng(np.random.SeedSequence([seed, row_index, t]))
                payload = rng.integers(0, 256, payload_bytes, dtype=np.uint8).tobytes()
                res = link.loopback(payload, snr, rng, path="spectral")
                errors += res.bit_errors
                sync_failures += isinstance(res.error, NoSyncError)
            report.rows.append({
                "bit_rate_bps": 8 * float(rate),
                "bytes_per_s": float(rate),
                "snr_db": float(snr),
                "trials": trials,
                "bit_errors": errors,
                "BER": errors / (trials * payload_bytes * 8),
                "frame_sync_failures": sync_failures,
                "config_hash": report.config_hash,
                "seed": seed,
            })
            row_index += 1
    return report
