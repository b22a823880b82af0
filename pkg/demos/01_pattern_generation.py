# Generating a bus pattern for a chosen tone
#
# The transmitter never touches a radio. It writes a buffer whose bits,
# clocked out at 480 Mbit/s, toggle the data lines at the wanted rate.

import numpy as np

from usbee.bits import bits_to_str
from usbee.pattern_gen import fill_buffer_freq, pattern_bits, period_bits

# A 20 MHz tone is 200 units of 100 kHz. One 32-bit word shows the shape:
# twelve ones, twelve zeros, then the next period starts.

p = fill_buffer_freq(200, 4)
print(f"word: 0x{p.words[0]:08X}")
print("bits:", bits_to_str(pattern_bits(p)))

# On disk the words are little-endian, so the first byte is the low byte.

print("file bytes:", p.to_bytes().hex(" "))

# The default 6 KB buffer repeats with period 4800/f bits.

for f in (100, 200, 300, 400):
    bits = pattern_bits(fill_buffer_freq(f, 6144)).astype(int)
    n = int(period_bits(f))
    print(f"f={f:>3}  period={n:>2} bits  ones per period={bits[:n].sum()}  "
          f"periodic={np.array_equal(bits[n:], bits[:-n])}")

# The two extremes: f=0 holds the line, f=2400 toggles every bit time.

print(fill_buffer_freq(0, 4).to_bytes().hex(), fill_buffer_freq(2400, 4).to_bytes().hex())
