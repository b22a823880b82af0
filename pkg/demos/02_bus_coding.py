# From pattern bits to line levels
#
# The bus sends NRZI: a '0' flips the J/K level, a '1' holds it. After six
# ones in a row a '0' is stuffed in so the receiver keeps its clock.

from usbee.bits import bits_to_str
from usbee.usb_bus import (
    Level,
    TransferTimeParams,
    bit_stuff,
    bit_unstuff,
    nrzi_encode,
    stuffed_bit_count,
    transfer_time_ns,
    worst_case_stuffed_bits,
)

raw = "0111111110"
stuffed = bit_stuff(raw)
print("raw      ", raw)
print("stuffed  ", bits_to_str(stuffed))
print("unstuffed", bits_to_str(bit_unstuff(stuffed)))
print("levels   ", nrzi_encode(stuffed, Level.J))

# A 20 MHz pattern has runs of twelve ones, so stuffing adds two zeros per
# period and the tone on the wire is slightly lower than asked for.

print("stuff bits in one 24-bit period:", len(bit_stuff("1" * 12 + "0" * 12)) - 24)

# Packet transfer time for a bulk OUT transaction, worst-case stuffing.

for n in (0, 1, 64):
    s = worst_case_stuffed_bits(n)
    print(f"{n:>2} bytes: {s:>3} stuffed bits, {transfer_time_ns(TransferTimeParams(n), s):.3f} ns")

# With the actual payload the count is exact.

s = stuffed_bit_count(b"\x00")
print(f"payload 00: {s} bits, {transfer_time_ns(TransferTimeParams(1), s):.3f} ns")
