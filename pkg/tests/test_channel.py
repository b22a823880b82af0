import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from usbee.channel import (
    EnvelopeSignal,
    SymbolEnvelopeCache,
    add_noise,
    decimation,
    emission_envelope,
    emitted_tone_hz,
    fast_envelope,
    read_envelope,
    spectrogram_of,
    synthesize_line,
    transition_counts,
    write_envelope,
)
from usbee.errors import EnvelopeFormatError
from usbee.usb_bus import Level, LineWaveform, nrzi_encode

from oracles import bus_transmit, nrzi, trace_fill_buffer_freq, window_transitions

BT = 1 / 480e6  # one bit time


def trace_bits(freq, size_bytes):
    return [int(c) for w in trace_fill_buffer_freq(size_bytes, freq) for c in f"{w:032b}"]


def test_one_period_of_freq_200_without_stuffing():
    w = synthesize_line([(200, 24 * BT)], stuffing=False)
    assert str(w) == "J" * 12 + "KJ" * 6


def test_freq_zero_with_stuffing_toggles_every_seventh_bit_time():
    w = synthesize_line([(0, 28 * BT)], stuffing=True)
    assert str(w) == "JJJJJJK" "KKKKKKJ" "JJJJJJK" "KKKKKKJ"


def test_empty_schedule():
    assert len(synthesize_line([])) == 0


@settings(max_examples=40, deadline=None)
@given(
    entries=st.lists(
        st.tuples(st.sampled_from([0, 100, 200, 300, 350, 400, 1200, 2400]), st.integers(1, 200)),
        min_size=1, max_size=6,
    ),
    stuffing=st.booleans(),
    initial=st.sampled_from(list(Level)),
)
def test_synthesize_line_matches_bus_oracle(entries, stuffing, initial):
    schedule = [(f, n * BT) for f, n in entries]
    w = synthesize_line(schedule, pattern_size_bytes=16, stuffing=stuffing, initial=initial)
    expected = bus_transmit([(trace_bits(f, 16), n) for f, n in entries], stuffing)
    assert str(w) == nrzi(expected, initial.name)
    assert len(w) == sum(n for _, n in entries)


def test_all_toggle_and_all_hold_envelopes():
    toggling = nrzi_encode(np.zeros(4800, np.uint8))
    holding = nrzi_encode(np.ones(4800, np.uint8))
    assert np.all(emission_envelope(toggling, 48e6).samples == 1.0)
    assert np.all(emission_envelope(holding, 48e6).samples == 0.0)


def test_toggle_runs_of_freq_2400_reach_full_density():
    # the '0' half of a long-period pattern toggles every bit time
    w = synthesize_line([(100, 4800 * BT)], stuffing=False)
    env = emission_envelope(w, 48e6).samples
    assert env.max() == 1.0 and env.min() == 0.0


def test_decimation_validation():
    assert decimation(96e6) == 5
    assert decimation(480e6) == 1
    for bad in (1e9, 0, 7e6):
        with pytest.raises(ValueError):
            decimation(bad)


@settings(max_examples=40, deadline=None)
@given(bits=st.lists(st.integers(0, 1), min_size=0, max_size=400), window=st.sampled_from([1, 2, 3, 5, 10]),
       initial=st.sampled_from(list(Level)))
def test_window_counts_and_conservation(bits, window, initial):
    w = nrzi_encode(bits, initial)
    counts = transition_counts(w, 480e6 / window)
    assert counts.tolist() == window_transitions(str(w), initial.name, window)
    whole = len(bits) - len(bits) % window
    assert int(counts.sum()) == bits[:whole].count(0)
    env = emission_envelope(w, 480e6 / window)
    assert np.array_equal(env.samples * window, counts.astype(float))
    assert np.all((env.samples >= 0) & (env.samples <= 1))


def test_envelope_sample_count_matches_airtime():
    sr = 96e6
    sched = [(300, 1e-5), (400, 1e-5), (300, 2e-5)]
    env = emission_envelope(synthesize_line(sched), sr)
    assert abs(len(env) - round(sum(d for _, d in sched) * sr)) <= 1


def test_freq_200_envelope_peaks_at_20_mhz():
    w = synthesize_line([(200, 49152 * BT)], stuffing=False)
    spec = spectrogram_of(emission_envelope(w, 48e6), 4800)
    assert spec.bin_hz == 10_000
    for chunk in spec.chunks:
        assert 1 + np.argmax(chunk[1:]) == 2000


def test_spectrogram_of_pure_sine():
    n, k = 256, 17
    x = np.sin(2 * np.pi * k * np.arange(10 * n) / n)
    spec = spectrogram_of(EnvelopeSignal(x, 1000.0), n)
    assert spec.chunks.shape == (10, n // 2)
    assert np.all(spec.chunks.argmax(axis=1) == k)


@pytest.mark.parametrize("length, fft_size", [(1000, 100), (1099, 100), (5, 2), (64, 64)])
def test_spectrogram_chunk_count(length, fft_size):
    spec = spectrogram_of(EnvelopeSignal(np.zeros(length), 1.0), fft_size)
    assert len(spec) == length // fft_size


def test_spectrogram_rejects_short_input():
    with pytest.raises(ValueError):
        spectrogram_of(EnvelopeSignal(np.zeros(10), 1.0), 16)
    with pytest.raises(ValueError):
        spectrogram_of(EnvelopeSignal(np.zeros(10), 1.0), 1)


@pytest.mark.parametrize("f", range(100, 601, 50))
def test_spectral_peak_law_below_nyquist(f):
    # 240 MS/s keeps every tone up to 60 MHz below SR/2
    w = synthesize_line([(f, 48000 * BT)], stuffing=False)
    spec = spectrogram_of(emission_envelope(w, 240e6), 24000)
    peak = 1 + int(np.argmax(spec.chunks[0][1:]))
    assert abs(peak - f * 1e5 / spec.bin_hz) <= 1


@pytest.mark.parametrize("f", range(100, 601, 50))
def test_stuffed_pattern_peaks_at_dilated_tone(f):
    w = synthesize_line([(f, 48000 * BT)], stuffing=True)
    spec = spectrogram_of(emission_envelope(w, 240e6), 24000)
    peak = 1 + int(np.argmax(spec.chunks[0][1:]))
    assert abs(peak - emitted_tone_hz(f, True) / spec.bin_hz) <= 1


@pytest.mark.parametrize("f, tone", [(300, 480e6 / 17), (400, 480e6 / 13), (500, 50e6), (600, 60e6)])
def test_emitted_tone_values(f, tone):
    # 8 ones + 8 zeros gains one stuff bit per period; 6+6 also gains one
    assert emitted_tone_hz(f, True) == pytest.approx(tone, rel=1e-12)
    assert emitted_tone_hz(f, False) == f * 1e5


def _noisy_input(n=1_000_000):
    rng = np.random.default_rng(3)
    return EnvelopeSignal(rng.integers(0, 6, n) / 5, 96e6)


def test_add_noise_noiseless_is_identity():
    sig = _noisy_input(1000)
    for snr in (None, math.inf):
        out = add_noise(sig, snr, seed=1)
        assert np.array_equal(out.samples, sig.samples)
        assert out.samples is not sig.samples


def test_add_noise_is_deterministic():
    sig = _noisy_input(10_000)
    a = add_noise(sig, 3.0, seed=42)
    b = add_noise(sig, 3.0, seed=42)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, add_noise(sig, 3.0, seed=43).samples)


@pytest.mark.parametrize("snr_db", [0.0, -10.0, 12.0])
def test_add_noise_empirical_snr(snr_db):
    sig = _noisy_input()
    out = add_noise(sig, snr_db, seed=9)
    noise = out.samples - sig.samples
    measured = 10 * np.log10(np.mean(sig.samples**2) / np.mean(noise**2))
    assert abs(measured - snr_db) < 0.5
    assert abs(noise.mean()) < 5 * noise.std() / math.sqrt(noise.size)


def test_add_noise_reference_power_and_errors():
    sig = EnvelopeSignal(np.zeros(100), 1.0)
    with pytest.raises(ValueError):
        add_noise(sig, 0.0, 1)
    out = add_noise(sig, 0.0, 1, reference_power=1.0)
    assert out.meta["snr_db"] == 0.0
    with pytest.raises(ValueError):
        add_noise(EnvelopeSignal(np.zeros(0), 1.0), 0.0, 1)


@settings(max_examples=25, deadline=None)
@given(
    freqs=st.lists(st.sampled_from([0, 150, 300, 400, 555.5]), min_size=1, max_size=8),
    bits_per_symbol=st.sampled_from([20, 100, 480]),
    stuffing=st.booleans(),
)
def test_fast_envelope_equals_full_rate_path(freqs, bits_per_symbol, stuffing):
    sched = [(f, bits_per_symbol * BT) for f in freqs]
    full = emission_envelope(synthesize_line(sched, 64, stuffing), 48e6)
    fast = fast_envelope(sched, 48e6, 64, stuffing)
    assert np.array_equal(full.samples, fast.samples)


def test_symbol_cache_reuses_entries():
    cache = SymbolEnvelopeCache(48e6, 64, True)
    a, carry = cache.counts(300, 1000, 0)
    b, _ = cache.counts(300, 1000, 0)
    assert a is b
    assert 0 <= carry <= 6
    with pytest.raises(ValueError):
        cache.counts(300, 1001, 0)


def test_envelope_file_round_trip(tmp_path):
    sig = EnvelopeSignal(np.array([0.0, 0.2, 0.4, 1.0, -0.5]), 96e6, {"snr_db": 3.5})
    path = tmp_path / "env.f32"
    write_envelope(path, sig, "abc123")
    raw = path.read_bytes()
    assert len(raw) == 20
    assert np.frombuffer(raw, "<f4")[3] == 1.0
    back = read_envelope(path)
    assert back.sample_rate_hz == 96e6
    assert back.meta == {"sample_rate_hz": 96e6, "snr_db": 3.5, "config_hash": "abc123"}
    assert np.allclose(back.samples, sig.samples, atol=1e-7)


def test_envelope_file_format_errors(tmp_path):
    path = tmp_path / "env.f32"
    path.write_bytes(b"\x00" * 8)
    with pytest.raises(EnvelopeFormatError):
        read_envelope(path)  # no sidecar
    (tmp_path / "env.f32.json").write_text("{not json")
    with pytest.raises(EnvelopeFormatError):
        read_envelope(path)
    (tmp_path / "env.f32.json").write_text('{"snr_db": null}')
    with pytest.raises(EnvelopeFormatError):
        read_envelope(path)
    (tmp_path / "env.f32.json").write_text('{"sample_rate_hz": 1.0}')
    path.write_bytes(b"\x00" * 7)
    with pytest.raises(EnvelopeFormatError):
        read_envelope(path)
    with pytest.raises(FileNotFoundError):
        read_envelope(tmp_path / "missing.f32")


def test_line_waveform_default_bit_time():
    assert LineWaveform(np.zeros(1, np.uint8)).bit_time_ns == 2.083
