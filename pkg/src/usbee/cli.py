"""Command-line entry point: ``usbee <subcommand> [--config F] [--seed N] [--out P]``."""
import argparse
import math
import sys

from . import channel, modem, usb_bus
from .errors import ConfigError, EnvelopeFormatError, NoSyncError, TruncatedFrameError
from .harness import Link, check_rates, sweep
from .pattern_gen import DEFAULT_PATTERN_BYTES, fill_buffer_freq

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_NOSYNC = 3
EXIT_TRUNCATED = 4
EXIT_CONFIG = 5
EXIT_IO = 6
EXIT_FORMAT = 7


def _float_list(text):
    out = []
    for item in text.split(","):
        item = item.strip()
        if item:
            out.append(math.inf if item.lower() in ("inf", "+inf", "noiseless") else float(item))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _snr(text):
    return _float_list(text)[0]


def _hex_bytes(text):
    try:
        return bytes.fromhex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a hex string: {text!r}") from None


def cmd_gen_pattern(args, out):
    if args.freq != int(args.freq) and not args.fractional:
        raise ConfigError("freq must be a whole number of 100 kHz units (use --fractional)")
    buf = fill_buffer_freq(args.freq, args.size)
    path = args.out or "pattern.bin"
    with open(path, "wb") as fh:
        fh.write(buf.to_bytes())
    print(f"wrote {buf.size_bytes} bytes to {path}", file=out)
    print(f"expected emission: {args.freq * channel.UNIT_HZ / 1e6:.1f} MHz", file=out)
    return EXIT_OK


def _print_votes(stats, out):
    if stats is not None and len(stats.votes):
        print(f"votes: {stats.describe()}", file=out)


def cmd_loopback(args, out):
    if not args.payload:
        raise _Usage("payload must not be empty")
    cfg = modem.load_config(args.config)
    link = Link(cfg)
    res = link.loopback(args.payload, args.snr, args.seed, path="envelope")
    if args.dump:
        channel.write_envelope(args.dump, res.envelope, modem.config_hash(cfg))
    print(
        f"sent={res.sent.hex()} recovered={res.recovered.hex()} bit_errors={res.bit_errors} "
        f"airtime_s={res.airtime_s:.6f}",
        file=out,
    )
    _print_votes(res.stats, out)
    if res.error is not None:
        raise res.error
    return EXIT_OK if res.ok else EXIT_MISMATCH


def cmd_rx(args, out):
    cfg = modem.load_config(args.config)
    sig = channel.read_envelope(args.envelope)
    if sig.sample_rate_hz != cfg.sample_rate_hz:
        raise ConfigError(
            f"file sample rate {sig.sample_rate_hz:g} Hz != config sample rate {cfg.sample_rate_hz:g} Hz"
        )
    spec = channel.spectrogram_of(sig, modem.fft_chunk_size(cfg))
    payload, stats = modem.bfsk_demodulate(spec, cfg)
    print(payload.hex(), file=out)
    _print_votes(stats, out)
    return EXIT_OK


def cmd_sweep(args, out):
    cfg = modem.load_config(args.config, check=False)
    check_rates(cfg, args.rates)
    report = sweep(cfg, args.rates, args.snrs, args.trials, args.seed, args.payload_bytes)
    if args.out:
        report.write(args.out)
        print(f"wrote {len(report.rows)} rows to {args.out}", file=out)
    else:
        out.write(report.to_csv())
    return EXIT_OK


def cmd_transfer_time(args, out):
    if args.hex is not None:
        data_bc = len(args.hex)
        stuffed = usb_bus.stuffed_bit_count(args.hex)
    else:
        data_bc = args.data_bc
        stuffed = usb_bus.worst_case_stuffed_bits(data_bc)
    p = usb_bus.TransferTimeParams(data_bc, args.host_delay)
    print(f"data_bc={data_bc} stuffed_bits={stuffed} T={usb_bus.transfer_time_ns(p, stuffed):.3f} ns",
          file=out)
    return EXIT_OK


class _Usage(Exception):
    pass


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value modem config file (defaults if omitted)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path")

    p = argparse.ArgumentParser(prog="usbee", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-pattern", parents=[common], help="write a raw bus pattern file")
    g.add_argument("--freq", type=float, required=True, help="tone in 100 kHz units")
    g.add_argument("--size", type=int, default=DEFAULT_PATTERN_BYTES, help="buffer size in bytes")
    g.add_argument("--fractional", action="store_true", help="allow non-integer --freq")
    g.set_defaults(func=cmd_gen_pattern)

    lb = sub.add_parser("loopback", parents=[common], help="simulate transmit -> channel -> receive")
    lb.add_argument("payload", type=_hex_bytes, help="payload as hex, e.g. 73")
    lb.add_argument("--snr", type=_snr, default=math.inf, help="dB, or 'inf' for noiseless")
    lb.add_argument("--dump", help="write the received envelope (+ .json sidecar) here")
    lb.set_defaults(func=cmd_loopback)

    rx = sub.add_parser("rx", parents=[common], help="demodulate an envelope sample file")
    rx.add_argument("envelope")
    rx.set_defaults(func=cmd_rx)

    sw = sub.add_parser("sweep", parents=[common], help="BER / throughput sweep to CSV")
    sw.add_argument("--rates", type=_float_list, default=[20.0, 40.0, 80.0], help="bytes/s, comma separated")
    sw.add_argument("--snrs", type=_float_list, default=[math.inf], help="dB, comma separated; 'inf' = noiseless")
    sw.add_argument("--trials", type=int, default=10)
    sw.add_argument("--payload-bytes", type=int, default=4)
    sw.set_defaults(func=cmd_sweep)

    tt = sub.add_parser("transfer-time", parents=[common], help="USB 2.0 packet transfer time")
    src = tt.add_mutually_exclusive_group(required=True)
    src.add_argument("--data-bc", type=int, help="payload bytes, worst-case stuffing")
    src.add_argument("--hex", type=_hex_bytes, help="payload bytes, exact stuffing")
    tt.add_argument("--host-delay", type=float, default=0.0, help="ns")
    tt.set_defaults(func=cmd_transfer_time)
    return p


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args, out)
    except _Usage as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE
    except NoSyncError as exc:
        print(f"no sync: {exc}", file=err)
        return EXIT_NOSYNC
    except TruncatedFrameError as exc:
        print(f"truncated frame: {exc}", file=err)
        return EXIT_TRUNCATED
    except EnvelopeFormatError as exc:
        print(f"format error: {exc}", file=err)
        return EXIT_FORMAT
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc.filename or ''}: {exc.strerror or exc}", file=err)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
