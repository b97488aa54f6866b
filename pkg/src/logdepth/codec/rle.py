"""Toy run-length codec over the row-major bit string of a 1-bit image.

The image is cut into maximal runs ``(bit, length)``. Consecutive runs
always alternate, so only the first run's bit is stored; every later bit
is implied. Payload layout:

1. number of runs, unsigned LEB128 varint (bytes);
2. a bit string, MSB-first, zero-padded to a byte boundary:
   the first run's bit, then one length code per run.

Length code for a run of ``k >= 1`` bits:

* ``k <= 15``: ``k - 1`` one-bits then a zero-bit (unary, exactly k bits);
* ``k >= 16``: fifteen one-bits then the Elias-gamma code of ``k - 15``
  (``floor(log2 m)`` zeros followed by ``m`` in binary).

Short runs therefore cost exactly their own length and a long uniform
run costs about ``15 + 2*log2(k)`` bits.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConsistencyError, DecodeError, UnsupportedDepthError
from ..image import Image
from .blob import CompressedBlob
from .scanlines import scanline_crc

UNARY_LIMIT = 15
_SMALL = {k: "1" * (k - 1) + "0" for k in range(1, UNARY_LIMIT + 1)}


def encode_uvarint(n: int) -> bytes:
    if n < 0:
        raise ValueError("uvarint must be non-negative")
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def decode_uvarint(data: bytes, pos: int = 0) -> tuple[int, int]:
    """Return ``(value, next_pos)``."""
    result = shift = 0
    while True:
        if pos >= len(data):
            raise DecodeError("truncated varint", pos)
        b = data[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if not b & 0x80:
            return result, pos
        shift += 7
        if shift > 63:
            raise DecodeError("varint longer than 64 bits", pos)


def runs(bits) -> tuple[np.ndarray, np.ndarray]:
    """Maximal runs of a 1-D bit array as ``(values, lengths)``."""
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if b.size == 0:
        return b[:0], np.zeros(0, dtype=np.int64)
    starts = np.flatnonzero(np.r_[True, b[1:] != b[:-1]])
    lengths = np.diff(np.r_[starts, b.size])
    return b[starts], lengths


def length_code(k: int) -> str:
    if k < 1:
        raise ValueError("run length must be >= 1")
    if k <= UNARY_LIMIT:
        return _SMALL[k]
    m = k - UNARY_LIMIT
    return "1" * UNARY_LIMIT + "0" * (m.bit_length() - 1) + format(m, "b")


def _bits_to_bytes(s: str) -> bytes:
    arr = np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0")
    return np.packbits(arr).tobytes()


def encode_runs(first_bit: int, lengths) -> bytes:
    parts = [str(int(first_bit))]
    parts.extend(_SMALL[k] if k <= UNARY_LIMIT else length_code(k) for k in map(int, lengths))
    return encode_uvarint(len(lengths)) + _bits_to_bytes("".join(parts))


def decode_runs(payload: bytes) -> tuple[int, list[int]]:
    """Inverse of ``encode_runs``: ``(first_bit, lengths)``."""
    n_runs, start = decode_uvarint(payload, 0)
    body = np.unpackbits(np.frombuffer(payload, dtype=np.uint8, offset=start))
    s = (body + ord("0")).tobytes()
    end = len(s)
    if n_runs == 0:
        return 0, []
    if end < 1:
        raise DecodeError("missing first-run bit", start)
    first = s[0] - ord("0")
    pos = 1
    lengths = []
    for _ in range(n_runs):
        z = s.find(b"0", pos, pos + UNARY_LIMIT)
        if z >= 0:
            lengths.append(z - pos + 1)
            pos = z + 1
            continue
        if pos + UNARY_LIMIT > end:
            raise DecodeError("truncated run-length code", start + pos // 8)
        pos += UNARY_LIMIT
        one = s.find(b"1", pos)
        if one < 0:
            raise DecodeError("truncated gamma code", start + pos // 8)
        width = one - pos + 1
        if one + width > end:
            raise DecodeError("truncated gamma code", start + pos // 8)
        lengths.append(int(s[one : one + width], 2) + UNARY_LIMIT)
        pos = one + width
    if s.find(b"1", pos) >= 0:
        raise DecodeError("non-zero padding after last run", start + pos // 8)
    return first, lengths


def rle_compress(img: Image) -> CompressedBlob:
    if img.depth != 1:
        raise UnsupportedDepthError(f"toy_rle handles 1-bit images only, got depth {img.depth}")
    values, lengths = runs(img.pixels)
    payload = encode_runs(int(values[0]), lengths)
    return CompressedBlob(
        codec_id="toy_rle", payload=payload, width=img.width, height=img.height,
        depth=1, checksum=scanline_crc(img),
    )


def rle_decompress(blob: CompressedBlob) -> Image:
    if blob.codec_id != "toy_rle":
        raise DecodeError(f"expected a toy_rle blob, got {blob.codec_id}")
    if blob.depth != 1:
        raise ConsistencyError(f"toy_rle blob declares depth {blob.depth}")
    first, lengths = decode_runs(blob.payload)
    area = blob.width * blob.height
    total = sum(lengths)
    if total != area:
        raise ConsistencyError(f"runs cover {total} pixels, image area is {area}")
    values = np.empty(len(lengths), dtype=np.uint8)
    values[0::2] = first
    values[1::2] = first ^ 1
    bits = np.repeat(values, lengths)
    return Image._trusted(bits.reshape(blob.height, blob.width), 1)

