"""The compressed-image container.

Byte layout, all integers big-endian::

    offset  size  field
    0       4     magic  b"LDB" + format version (0x01)
    4       1     codec id (0 = toy_rle, 1 = filtered_deflate)
    5       1     pixel depth in bits (1 or 8)
    6       4     width
    10      4     height
    14      4     CRC-32 of the packed scanlines (integrity only)
    18      4     filter table length F
    22      F     filter table: one id byte per row, raw-deflated
                  (empty for toy_rle)
    22+F    4     payload length P
    26+F    P     payload

The header is everything before the payload; ``bit_length`` counts it.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from functools import cached_property

from ..errors import ConsistencyError, DecodeError, ParameterError

MAGIC = b"LDB\x01"
FORMAT_VERSION = 1
CODEC_IDS = ("toy_rle", "filtered_deflate")
_FIXED = struct.Struct(">4sBBIIII")


def codec_index(codec_id: str) -> int:
    try:
        return CODEC_IDS.index(codec_id)
    except ValueError:
        raise ParameterError(f"unknown codec {codec_id!r}; expected one of {CODEC_IDS}") from None


def _pack_filter_table(choices: bytes) -> bytes:
    if not choices:
        return b""
    c = zlib.compressobj(9, zlib.DEFLATED, -15, 9)
    return c.compress(choices) + c.flush()


@dataclass(frozen=True)
class CompressedBlob:
    codec_id: str
    payload: bytes
    width: int
    height: int
    depth: int
    checksum: int
    filter_choices: bytes = b""
    strategy: str = field(default="", compare=False)

    def __post_init__(self):
        codec_index(self.codec_id)

    @cached_property
    def _filter_table(self) -> bytes:
        return _pack_filter_table(bytes(self.filter_choices))

    @property
    def header_bits(self) -> int:
        return 8 * (_FIXED.size + len(self._filter_table) + 4)

    @property
    def bit_length(self) -> int:
        return 8 * len(self.payload) + self.header_bits

    def to_bytes(self) -> bytes:
        table = self._filter_table
        head = _FIXED.pack(
            MAGIC, codec_index(self.codec_id), self.depth, self.width, self.height,
            self.checksum, len(table),
        )
        return head + table + struct.pack(">I", len(self.payload)) + bytes(self.payload)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CompressedBlob":
        data = bytes(data)
        if len(data) < _FIXED.size:
            raise DecodeError("container shorter than its fixed header", len(data))
        magic, codec, depth, width, height, crc, table_len = _FIXED.unpack_from(data, 0)
        if magic[:3] != MAGIC[:3]:
            raise DecodeError("bad magic number", 0)
        if magic[3] != FORMAT_VERSION:
            raise DecodeError(f"unsupported container version {magic[3]}", 3)
        if codec >= len(CODEC_IDS):
            raise DecodeError(f"unknown codec id {codec}", 4)
        pos = _FIXED.size
        if len(data) < pos + table_len + 4:
            raise DecodeError("truncated filter table", len(data))
        table = data[pos : pos + table_len]
        pos += table_len
        (plen,) = struct.unpack_from(">I", data, pos)
        pos += 4
        if len(data) < pos + plen:
            raise DecodeError("truncated payload", len(data))
        if len(data) > pos + plen:
            raise DecodeError("trailing bytes after payload", pos + plen)
        choices = b""
        if table:
            try:
                choices = zlib.decompress(table, -15)
            except zlib.error as exc:
                raise DecodeError(f"corrupt filter table: {exc}", _FIXED.size) from None
        if CODEC_IDS[codec] == "filtered_deflate" and len(choices) != height:
            raise ConsistencyError(
                f"filter table has {len(choices)} entries for {height} rows"
            )
        return cls(
            codec_id=CODEC_IDS[codec], payload=data[pos : pos + plen], width=width,
            height=height, depth=depth, checksum=crc, filter_choices=choices,
        )
