"""Filtered-Deflate image codec and the codec-level dispatch used by the timing harness."""
from __future__ import annotations

import threading
import zlib

import numpy as np

from ..errors import ConsistencyError, DecodeError, ParameterError
from ..image import Image
from .blob import CODEC_IDS, CompressedBlob
from .deflate import MAX_EFFORT, deflate_best, deflate_compress, inflate
from .filters import N_FILTERS, FilterId, filter_all, heuristic_choice, select_rows, unfilter_image
from .rle import rle_compress, rle_decompress
from .scanlines import crc_rows, pack_rows, stride, unpack_rows

CODEC_VERSION = "logdepth-codec/1"
GREEDY_CONTEXT_ROWS = 8

_local = threading.local()


def _scratch(size: int) -> np.ndarray:
    pool = getattr(_local, "buffers", None)
    if pool is None:
        pool = _local.buffers = {}
    buf = pool.get(size)
    if buf is None:
        buf = pool[size] = np.empty(size, dtype=np.uint8)
    return buf


def drop_buffers() -> None:
    """Release the calling thread's reusable decode buffers."""
    _local.buffers = {}


def greedy_choice(filtered: np.ndarray) -> np.ndarray:
    """Row-by-row filter choice by the Deflate size of the row appended to recent chosen rows."""
    n, h, s = filtered.shape
    choices = np.zeros(h, dtype=np.uint8)
    context = []
    for r in range(h):
        prefix = b"".join(context[-GREEDY_CONTEXT_ROWS:])
        best, best_len = 0, None
        for f in range(n):
            c = zlib.compressobj(9, zlib.DEFLATED, -15, 9)
            size = len(c.compress(prefix + filtered[f, r].tobytes()) + c.flush())
            if best_len is None or size < best_len:
                best, best_len = f, size
        choices[r] = best
        context.append(filtered[best, r].tobytes())
    return choices


def filter_strategies(filtered: np.ndarray) -> list[tuple[str, np.ndarray]]:
    """Candidate per-row filter layouts tried by the optimiser, in tie-break order."""
    h = filtered.shape[1]
    out = [("heuristic", heuristic_choice(filtered))]
    for f in FilterId:
        out.append((f"all-{f.name.lower()}", np.full(h, int(f), dtype=np.uint8)))
    out.append(("greedy", greedy_choice(filtered)))
    return out


def _blob(img, payload, choices, checksum, strategy):
    return CompressedBlob(
        codec_id="filtered_deflate", payload=payload, width=img.width, height=img.height,
        depth=img.depth, checksum=checksum, filter_choices=bytes(choices), strategy=strategy,
    )


def compress_image(img: Image, optimize: bool = True) -> CompressedBlob:
    """Pack rows, filter each row, Deflate the filtered stream.

    ``optimize=False`` uses the minimum-sum-of-absolute-values filter
    heuristic and zlib level 9. ``optimize=True`` evaluates every layout
    from ``filter_strategies`` under every Deflate strategy and keeps the
    smallest container (ties keep the earlier candidate), so it is never
    larger than ``optimize=False``.
    """
    rows = pack_rows(img)
    checksum = crc_rows(rows)
    filtered = filter_all(rows)
    if not optimize:
        choices = heuristic_choice(filtered)
        payload = deflate_compress(select_rows(filtered, choices).tobytes(), 9)
        return _blob(img, payload, choices, checksum, "heuristic/default")
    best = None
    for name, choices in filter_strategies(filtered):
        payload, deflate_name = deflate_best(select_rows(filtered, choices).tobytes())
        blob = _blob(img, payload, choices, checksum, f"{name}/{deflate_name}")
        if best is None or blob.bit_length < best.bit_length:
            best = blob
    return best


def decompress_image(blob: CompressedBlob) -> Image:
    """Inflate, undo the per-row filters, unpack bits."""
    if blob.codec_id != "filtered_deflate":
        raise DecodeError(f"expected a filtered_deflate blob, got {blob.codec_id}")
    h, w = blob.height, blob.width
    s = stride(w, blob.depth)
    if len(blob.filter_choices) != h:
        raise ConsistencyError(f"{len(blob.filter_choices)} filter choices for {h} rows")
    try:
        raw = zlib.decompress(blob.payload, -15)
    except zlib.error:
        inflate(blob.payload)
        raise
    if len(raw) != h * s:
        raise ConsistencyError(f"inflated {len(raw)} bytes, expected {h * s}")
    out = _scratch(h * s)
    bad = unfilter_image(
        np.frombuffer(raw, dtype=np.uint8), np.frombuffer(blob.filter_choices, dtype=np.uint8),
        h, s, out,
    )
    if bad >= 0:
        raise ConsistencyError(f"unknown filter id {blob.filter_choices[bad]} on row {bad}")
    if blob.depth == 1:
        pixels = unpack_rows(out.reshape(h, s), w, 1)
    else:
        pixels = out.reshape(h, s).copy()
    return Image._trusted(pixels, blob.depth)


def compress(img: Image, codec_id: str = "filtered_deflate", optimize: bool = True) -> CompressedBlob:
    if codec_id == "toy_rle":
        return rle_compress(img)
    if codec_id == "filtered_deflate":
        return compress_image(img, optimize)
    raise ParameterError(f"unknown codec {codec_id!r}; expected one of {CODEC_IDS}")


def decompress(blob: CompressedBlob) -> Image:
    if blob.codec_id == "toy_rle":
        return rle_decompress(blob)
    return decompress_image(blob)


def k_estimate(img: Image, codec_id: str = "filtered_deflate", optimize: bool = True) -> int:
    """Compressed length in bits, container header included."""
    return compress(img, codec_id, optimize).bit_length


def verify(blob: CompressedBlob, img: Image) -> bool:
    """Integrity check of a decoded image against the container checksum."""
    return (
        img.width == blob.width
        and img.height == blob.height
        and crc_rows(pack_rows(img)) == blob.checksum
    )


def warmup() -> None:
    """One-time initialisation of the decode path (compiles the unfilter kernel)."""
    rng = np.random.default_rng(0)
    img = Image((rng.random((8, 19)) < 0.5).astype(np.uint8))
    for optimize in (False, True):
        blob = compress_image(img, optimize)
        decompress_image(blob)
    for f in range(N_FILTERS):
        blob = _blob(img, deflate_compress(b"\0" * (8 * 3), MAX_EFFORT), bytes([f]) * 8, 0, "warmup")
        decompress_image(blob)
    rle_decompress(rle_compress(img))
