"""Portable bitmap/graymap files and photo ingestion.

Written formats: PBM (P4 raw, P1 plain) for 1-bit images, PGM (P5 raw,
P2 plain) for 8-bit images. Read formats: P1, P2, P4, P5 and PNG (via
Pillow, converted to 8-bit luminance).

Ingestion normalises any input to a square 1-bit image: luminance is
thresholded at 50% (``2 * value < maxval`` is black, so an exact
mid-gray stays white), the largest centered square is cropped, and the
square is resized by nearest neighbour (source index
``floor((i + 0.5) * src / dst)``).
"""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import FormatError
from .image import Image
from .imagegen import binarize

SUPPORTED_FORMATS = ("PBM (P1/P4)", "PGM (P2/P5)", "PNG")
_TOKEN = re.compile(rb"#[^\n]*\n?|\s+")


def encode_pnm(img: Image, plain: bool = False) -> bytes:
    h, w = img.height, img.width
    if img.depth == 1:
        if plain:
            lines = [" ".join(map(str, row)) for row in img.pixels.tolist()]
            return f"P1\n{w} {h}\n".encode() + ("\n".join(lines) + "\n").encode()
        return f"P4\n{w} {h}\n".encode() + np.packbits(img.pixels, axis=1).tobytes()
    if plain:
        lines = [" ".join(map(str, row)) for row in img.pixels.tolist()]
        return f"P2\n{w} {h}\n255\n".encode() + ("\n".join(lines) + "\n").encode()
    return f"P5\n{w} {h}\n255\n".encode() + img.pixels.tobytes()


def write_pnm(path, img: Image, plain: bool = False) -> None:
    Path(path).write_bytes(encode_pnm(img, plain))


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 2
    while len(tokens) < count:
        m = _TOKEN.match(data, pos)
        if m:
            pos = m.end()
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace() and data[end : end + 1] != b"#":
            end += 1
        if end == pos:
            raise FormatError("truncated PNM header")
        tokens.append(data[pos:end])
        pos = end
    return tokens, pos


def decode_pnm(data: bytes) -> tuple[np.ndarray, int]:
    """Return ``(pixels, maxval)``; for bitmaps maxval is 1 and 1 means black."""
    magic = data[:2]
    if magic not in (b"P1", b"P2", b"P4", b"P5"):
        raise FormatError(f"not a supported PNM file (magic {magic!r})")
    n_tokens = 2 if magic in (b"P1", b"P4") else 3
    tokens, pos = _header_tokens(data, n_tokens)
    try:
        w, h = int(tokens[0]), int(tokens[1])
        maxval = int(tokens[2]) if n_tokens == 3 else 1
    except ValueError:
        raise FormatError("non-numeric PNM header field") from None
    if w < 1 or h < 1 or not 1 <= maxval <= 65535:
        raise FormatError(f"bad PNM geometry {w}x{h}, maxval {maxval}")
    if magic in (b"P1", b"P2"):
        body = data[pos:]
        if magic == b"P1":
            vals = [int(c) for c in re.sub(rb"#[^\n]*", b"", body) if c in b"01"]
            vals = [v - ord("0") for v in vals]
        else:
            vals = [int(t) for t in re.sub(rb"#[^\n]*", b"", body).split()]
        if len(vals) < w * h:
            raise FormatError("truncated PNM raster")
        return np.array(vals[: w * h], dtype=np.int64).reshape(h, w), maxval
    pos += 1
    if magic == b"P4":
        stride = (w + 7) // 8
        raw = np.frombuffer(data, dtype=np.uint8, count=stride * h, offset=pos) if len(data) >= pos + stride * h else None
        if raw is None:
            raise FormatError("truncated PBM raster")
        return np.unpackbits(raw.reshape(h, stride), axis=1, count=w).astype(np.int64), 1
    width_bytes = 2 if maxval > 255 else 1
    need = w * h * width_bytes
    if len(data) < pos + need:
        raise FormatError("truncated PGM raster")
    dtype = ">u2" if width_bytes == 2 else np.uint8
    return np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).astype(np.int64).reshape(h, w), maxval


def read_raster(path) -> tuple[np.ndarray, int]:
    """Pixels and maxval of a PNM or PNG file. For PBM, 1 is black; otherwise larger is lighter."""
    data = Path(path).read_bytes()
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        from PIL import Image as PILImage

        with PILImage.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.int64), 255
    if data[:1] == b"P":
        return decode_pnm(data)
    raise FormatError(f"{path}: unsupported format; supported: {', '.join(SUPPORTED_FORMATS)}")


def read_image(path) -> Image:
    """Load a file as-is: PBM becomes a 1-bit image, gray formats an 8-bit one."""
    px, maxval = read_raster(path)
    if maxval == 1:
        return Image(px.astype(np.uint8), depth=1)
    if maxval != 255:
        px = (px * 255 + maxval // 2) // maxval
    return Image(px.astype(np.uint8), depth=8)


def to_bits(px: np.ndarray, maxval: int) -> np.ndarray:
    if maxval == 1:
        return px.astype(np.uint8)
    return binarize(px, maxval)


def center_square(px: np.ndarray) -> np.ndarray:
    h, w = px.shape
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    return px[top : top + side, left : left + side]


def resize_nearest(px: np.ndarray, size: int) -> np.ndarray:
    h, w = px.shape
    rows = ((np.arange(size) + 0.5) * h / size).astype(np.int64)
    cols = ((np.arange(size) + 0.5) * w / size).astype(np.int64)
    return px[np.ix_(rows, cols)]


def normalize(px: np.ndarray, maxval: int, size: int = 600) -> Image:
    bits = center_square(to_bits(px, maxval))
    if bits.shape[0] != size:
        bits = resize_nearest(bits, size)
    return Image(bits, depth=1)
