# Bit error rate against SNR
#
# The sweep uses the frequency-domain noise path, so each trial costs a
# fraction of a second. Pass a trial count to trade time for precision.

import sys

from usbee.harness import sweep
from usbee.modem import ModemConfig

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20
cfg = ModemConfig()
rep = sweep(cfg, [80], [-40, -30, -25, -22, -21, -20, -19, -18, -15, -10], trials, seed=7, payload_bytes=1)

print(f"{'SNR dB':>7} {'BER':>8} {'no sync':>8}")
for row in rep.rows:
    print(f"{row['snr_db']:>7g} {row['BER']:>8.4f} {row['frame_sync_failures']:>8}")

# The same table as CSV, as written by `usbee sweep --out`.

print()
print(rep.to_csv())
