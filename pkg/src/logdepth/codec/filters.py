"""Five-filter predictive bank over packed scanlines (PNG semantics, one byte per step).

Forward filtering is vectorised with numpy. Reconstruction of a whole
image runs in a compiled kernel so that every filter type costs about
the same per byte; ``unapply_filter`` is a plain-Python per-row version
kept as a readable reference.
"""
from __future__ import annotations

from enum import IntEnum

import numba
import numpy as np

from ..errors import DimensionError


class FilterId(IntEnum):
    NONE = 0
    SUB = 1
    UP = 2
    AVERAGE = 3
    PAETH = 4


N_FILTERS = len(FilterId)


def paeth_predictor(a: int, b: int, c: int) -> int:
    """Pick left (a), above (b) or upper-left (c), whichever is closest to a + b - c."""
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _as_row(x):
    return np.frombuffer(bytes(x), dtype=np.uint8) if not isinstance(x, np.ndarray) else x.astype(np.uint8)


def _predict(rows: np.ndarray, prev: np.ndarray, f: FilterId) -> np.ndarray:
    """Predictions for every byte of ``rows`` (2-D) given the rows above ``prev``."""
    a = np.zeros_like(rows, dtype=np.int16)
    a[:, 1:] = rows[:, :-1]
    b = prev.astype(np.int16)
    if f == FilterId.NONE:
        return np.zeros_like(a)
    if f == FilterId.SUB:
        return a
    if f == FilterId.UP:
        return b
    if f == FilterId.AVERAGE:
        return (a + b) >> 1
    c = np.zeros_like(a)
    c[:, 1:] = b[:, :-1]
    p = a + b - c
    pa, pb, pc = np.abs(p - a), np.abs(p - b), np.abs(p - c)
    return np.where((pa <= pb) & (pa <= pc), a, np.where(pb <= pc, b, c))


def apply_filter(row, prev_row, filter: FilterId) -> bytes:
    """Filter one scanline: ``out[i] = row[i] - predictor(left, above, upper_left) mod 256``."""
    r = _as_row(row)
    p = _as_row(prev_row)
    if r.shape != p.shape:
        raise DimensionError(f"row length {r.size} != previous row length {p.size}")
    pred = _predict(r[None, :], p[None, :], FilterId(filter))
    return ((r.astype(np.int16) - pred) & 0xFF).astype(np.uint8).tobytes()


def unapply_filter(filtered, prev_row, filter: FilterId) -> bytes:
    """Invert ``apply_filter`` for one scanline."""
    f = FilterId(filter)
    x = bytes(filtered)
    prev = bytes(prev_row)
    if len(x) != len(prev):
        raise DimensionError(f"row length {len(x)} != previous row length {len(prev)}")
    out = bytearray(len(x))
    for i, v in enumerate(x):
        a = out[i - 1] if i else 0
        b = prev[i]
        c = prev[i - 1] if i else 0
        if f == FilterId.NONE:
            pred = 0
        elif f == FilterId.SUB:
            pred = a
        elif f == FilterId.UP:
            pred = b
        elif f == FilterId.AVERAGE:
            pred = (a + b) >> 1
        else:
            pred = paeth_predictor(a, b, c)
        out[i] = (v + pred) & 0xFF
    return bytes(out)


def filter_all(rows: np.ndarray) -> np.ndarray:
    """All five filterings of an (H, S) scanline array, shape (5, H, S)."""
    prev = np.zeros_like(rows)
    prev[1:] = rows[:-1]
    r16 = rows.astype(np.int16)
    out = np.empty((N_FILTERS,) + rows.shape, dtype=np.uint8)
    for f in FilterId:
        out[f] = (r16 - _predict(rows, prev, f)) & 0xFF
    return out


def heuristic_choice(filtered: np.ndarray) -> np.ndarray:
    """Per-row filter minimising the sum of absolute signed byte values (lowest id on ties)."""
    cost = np.abs(filtered.view(np.int8).astype(np.int32)).sum(axis=2)
    return np.argmin(cost, axis=0).astype(np.uint8)


def select_rows(filtered: np.ndarray, choices: np.ndarray) -> np.ndarray:
    return filtered[choices, np.arange(filtered.shape[1])]


@numba.njit(cache=True, nogil=True)
def _unfilter_kernel(data, filters, height, stride, out):
    # the previous row lives in its own buffer so the loops do not alias ``out``
    prev = np.zeros(stride, dtype=np.uint8)
    for r in range(height):
        f = filters[r]
        base = r * stride
        if f == 0:
            for i in range(stride):
                v = data[base + i]
                prev[i] = v
                out[base + i] = v
        elif f == 1:
            left = np.uint8(0)
            for i in range(stride):
                left = np.uint8(data[base + i] + left)
                prev[i] = left
                out[base + i] = left
        elif f == 2:
            for i in range(stride):
                v = np.uint8(data[base + i] + prev[i])
                prev[i] = v
                out[base + i] = v
        elif f == 3:
            left = np.int32(0)
            for i in range(stride):
                left = np.int32(np.uint8(data[base + i] + ((left + np.int32(prev[i])) >> 1)))
                prev[i] = left
                out[base + i] = left
        elif f == 4:
            a = np.int32(0)
            c = np.int32(0)
            for i in range(stride):
                b = np.int32(prev[i])
                p = a + b - c
                pa = abs(p - a)
                pb = abs(p - b)
                pc = abs(p - c)
                if pa <= pb and pa <= pc:
                    pred = a
                elif pb <= pc:
                    pred = b
                else:
                    pred = c
                a = np.int32(np.uint8(data[base + i] + pred))
                prev[i] = a
                out[base + i] = a
                c = b
        else:
            return r
    return -1


def unfilter_image(data: np.ndarray, filters: np.ndarray, height: int, stride: int, out: np.ndarray) -> int:
    """Reconstruct ``height`` scanlines in place into ``out``.

    Returns -1 on success or the index of the first row carrying an
    unknown filter id.
    """
    return _unfilter_kernel(data, filters, height, stride, out)
