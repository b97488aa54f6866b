"""Image <-> scanline byte rows (1-bit pixels packed MSB-first, rows byte-padded)."""
from __future__ import annotations

import zlib

import numpy as np

from ..image import Image


def stride(width: int, depth: int) -> int:
    return (width + 7) // 8 if depth == 1 else width


def pack_rows(img: Image) -> np.ndarray:
    """(H, stride) uint8 array of scanline bytes."""
    if img.depth == 1:
        return np.packbits(img.pixels, axis=1)
    return img.pixels


def unpack_rows(rows: np.ndarray, width: int, depth: int) -> np.ndarray:
    if depth == 1:
        return np.unpackbits(rows, axis=1, count=width)
    return rows


def crc_rows(rows: np.ndarray) -> int:
    return zlib.crc32(np.ascontiguousarray(rows).data) & 0xFFFFFFFF


def scanline_crc(img: Image) -> int:
    return crc_rows(pack_rows(img))
