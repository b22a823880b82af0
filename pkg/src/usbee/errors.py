"""Exception types shared across the package."""


class USBeeError(Exception):
    pass


class ConfigError(USBeeError, ValueError):
    """Invalid or inconsistent modem/channel configuration."""


class FramingError(USBeeError, ValueError):
    """Seven consecutive '1' bits seen on a stuffed stream."""


class EnvelopeFormatError(USBeeError, ValueError):
    """Envelope sample file or its sidecar is malformed."""


class DemodError(USBeeError):
    """Base for receive-side failures.

    ``bits`` holds whatever payload bits were assembled before the failure
    and ``stats`` the vote record, so callers can still score partial frames.
    """

    def __init__(self, message, bits=None, stats=None):
        super().__init__(message)
        self.bits = bits if bits is not None else []
        self.stats = stats


class NoSyncError(DemodError):
    """The preamble/sync word was never found."""


class TruncatedFrameError(DemodError):
    """Signal was lost before a whole number of payload bytes arrived."""
