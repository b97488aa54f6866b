"""Raw RFC 1951 streams via zlib, with an effort knob and offset-reporting inflate.

Effort levels:

* 0..9 map to zlib compression levels with the default strategy,
  ``memLevel=9`` and a 32 KiB window.
* 10 (``MAX_EFFORT``) compresses at level 9 under every zlib strategy and
  keeps the shortest stream (earliest strategy wins ties).

Effort 10 is never longer than effort 9. Between levels 1..9 zlib gives
no ordering guarantee; a higher level may come out at most
``EFFORT_TOLERANCE`` longer (relative) plus ``EFFORT_SLACK`` bytes.
"""
from __future__ import annotations

import zlib

from ..errors import DecodeError, ParameterError

MAX_EFFORT = 10
EFFORT_TOLERANCE = 0.02
EFFORT_SLACK = 64

STRATEGIES = (
    ("default", zlib.Z_DEFAULT_STRATEGY),
    ("filtered", zlib.Z_FILTERED),
    ("rle", zlib.Z_RLE),
    ("huffman_only", zlib.Z_HUFFMAN_ONLY),
    ("fixed", zlib.Z_FIXED),
)


def _raw_deflate(data, level, strategy):
    c = zlib.compressobj(level, zlib.DEFLATED, -15, 9, strategy)
    return c.compress(data) + c.flush()


def deflate_best(data: bytes) -> tuple[bytes, str]:
    """Shortest level-9 stream over all strategies, with the winning strategy name."""
    best, best_name = None, ""
    for name, strategy in STRATEGIES:
        out = _raw_deflate(data, 9, strategy)
        if best is None or len(out) < len(best):
            best, best_name = out, name
    return best, best_name


def deflate_compress(data: bytes, effort: int = 9) -> bytes:
    if not 0 <= effort <= MAX_EFFORT:
        raise ParameterError(f"effort must lie in [0, {MAX_EFFORT}], got {effort}")
    data = bytes(data)
    if effort == MAX_EFFORT:
        return deflate_best(data)[0]
    return _raw_deflate(data, effort, zlib.Z_DEFAULT_STRATEGY)


def _locate_error(stream: bytes) -> int:
    d = zlib.decompressobj(-15)
    for i in range(len(stream)):
        try:
            d.decompress(stream[i : i + 1])
        except zlib.error:
            return i
        if d.eof:
            return i + 1
    return len(stream)


def inflate(stream: bytes) -> bytes:
    """Decode a raw Deflate stream; raises DecodeError with the failing byte offset."""
    stream = bytes(stream)
    d = zlib.decompressobj(-15)
    try:
        out = d.decompress(stream)
    except zlib.error as exc:
        raise DecodeError(f"malformed deflate stream: {exc}", _locate_error(stream)) from None
    if not d.eof:
        raise DecodeError("truncated deflate stream", len(stream))
    if d.unused_data:
        raise DecodeError("trailing bytes after final deflate block", len(stream) - len(d.unused_data))
    return out


def stored_block(payload: bytes, final: bool = True) -> bytes:
    """A single stored (BTYPE=00) block holding ``payload`` verbatim."""
    if len(payload) > 0xFFFF:
        raise ParameterError("a stored block holds at most 65535 bytes")
    n = len(payload)
    return bytes([1 if final else 0]) + n.to_bytes(2, "little") + (n ^ 0xFFFF).to_bytes(2, "little") + payload
