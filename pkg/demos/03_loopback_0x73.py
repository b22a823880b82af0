# Sending one byte through the simulated channel
#
# 0x73 is 01110011. Each bit is a burst of one of two patterns; the
# receiver looks at four FFT chunks per bit and picks the louder tone.

import numpy as np

from usbee.channel import spectrogram_of
from usbee.harness import Link
from usbee.modem import CHUNKS_PER_BIT, HEADER_BITS, ModemConfig, tone_bins

cfg = ModemConfig()
link = Link(cfg)
print(f"{cfg.bytes_per_s:g} B/s, FFT chunk {link.fft_size} samples, bin {link.bin_hz:g} Hz")
print("tone bins:", tone_bins(cfg, link.bin_hz))

res = link.loopback(b"\x73")
print("recovered:", res.recovered.hex(), " bit errors:", res.bit_errors)
print("chunk votes per bit:", res.stats.describe())

# Where does the energy sit? The strongest non-DC bin in each bit period.

spec = spectrogram_of(res.envelope, link.fft_size)
start = res.stats.sync_chunk + HEADER_BITS.size * CHUNKS_PER_BIT
for i, bit in enumerate("01110011"):
    rows = spec.chunks[start + i * CHUNKS_PER_BIT : start + (i + 1) * CHUNKS_PER_BIT, 1:]
    peak = 1 + int(np.argmax(rows.sum(axis=0)))
    print(f"bit {i}: sent {bit}  peak bin {peak}  ({peak * link.bin_hz / 1e6:.2f} MHz)")

# The same byte with noise. Far below the noise floor the frame header is lost.

for snr in (-10, -20, -40):
    r = link.loopback(b"\x73", snr_db=snr, seed=1, path="spectral")
    print(f"SNR {snr:>4} dB: recovered={r.recovered.hex() or '--'} errors={r.bit_errors} "
          f"{type(r.error).__name__ if r.error else ''}")
