"""Exception hierarchy shared by all subpackages."""


class LogDepthError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(LogDepthError, ValueError):
    pass


class ParameterError(LogDepthError, ValueError):
    pass


class UnsupportedDepthError(ParameterError):
    pass


class DataError(LogDepthError, ValueError):
    pass


class FormatError(LogDepthError, ValueError):
    pass


class DecodeError(LogDepthError):
    """A compressed stream or container could not be decoded.

    ``offset`` is the byte position at which the problem was detected,
    when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConsistencyError(DecodeError):
    """Decoded data is well-formed but disagrees with the container metadata."""


class HarnessBusyError(LogDepthError, RuntimeError):
    """A timed section was requested while another one is running."""
