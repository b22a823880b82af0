"""Simulator and codec for a covert channel that radiates data from a USB data bus.

Transmit chain: :mod:`usbee.pattern_gen` (bus patterns that toggle the line
at a chosen tone), :mod:`usbee.usb_bus` (NRZI, bit stuffing, transfer time)
and :mod:`usbee.modem` (framing and B-FSK). :mod:`usbee.channel` turns line
activity into a noisy emission envelope, and the modem demodulates it with
chunked FFTs. :mod:`usbee.harness` wires everything into loopbacks and sweeps.
"""
from .bits import as_bits, bits_to_bytes, bytes_to_bits
from .channel import (
    EnvelopeSignal,
    Spectrogram,
    add_noise,
    emission_envelope,
    emitted_tone_hz,
    read_envelope,
    spectrogram_of,
    synthesize_line,
    write_envelope,
)
from .errors import (
    ConfigError,
    DemodError,
    EnvelopeFormatError,
    FramingError,
    NoSyncError,
    TruncatedFrameError,
)
from .harness import Link, SweepReport, loopback, sweep
from .modem import (
    ModemConfig,
    Symbol,
    SymbolSchedule,
    bfsk_demodulate,
    bfsk_modulate,
    classify_chunk,
    fft_chunk_size,
    frame,
    load_config,
)
from .pattern_gen import PatternBuffer, fill_buffer_freq, pattern_bits
from .usb_bus import (
    Level,
    LineWaveform,
    TransferTimeParams,
    bit_stuff,
    bit_unstuff,
    nrzi_decode,
    nrzi_encode,
    transfer_time_ns,
)

__version__ = "0.1.0"
