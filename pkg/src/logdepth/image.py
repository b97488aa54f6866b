"""The measured object: a rectangular grid of 1-bit or 8-bit pixels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

WHITE = 0
BLACK = 1
SUPPORTED_DEPTHS = (1, 8)
MAX_SIDE = 16384


@dataclass(frozen=True, eq=False)
class Image:
    """Row-major pixel grid.

    For depth 1, ``0`` is white and ``1`` is black (portable-bitmap
    convention). The pixel array is stored read-only.
    """

    pixels: np.ndarray
    depth: int = 1

    def __post_init__(self):
        if self.depth not in SUPPORTED_DEPTHS:
            raise ParameterError(f"depth must be one of {SUPPORTED_DEPTHS}, got {self.depth}")
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise DimensionError(f"pixels must be 2-D, got shape {px.shape}")
        h, w = px.shape
        if h < 1 or w < 1:
            raise DimensionError(f"image must be at least 1x1, got {w}x{h}")
        if h > MAX_SIDE or w > MAX_SIDE:
            raise DimensionError(f"image side exceeds {MAX_SIDE}: {w}x{h}")
        if px.size and (px.min() < 0 or px.max() > (1 << self.depth) - 1):
            raise ParameterError(f"pixel values out of range for depth {self.depth}")
        px = np.array(px, dtype=np.uint8, order="C", copy=True)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def _trusted(cls, pixels: np.ndarray, depth: int) -> "Image":
        """Wrap an array already known to be valid, skipping checks and copies."""
        obj = object.__new__(cls)
        pixels.setflags(write=False)
        object.__setattr__(obj, "pixels", pixels)
        object.__setattr__(obj, "depth", depth)
        return obj

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def area(self) -> int:
        return self.pixels.size

    @property
    def maxval(self) -> int:
        return (1 << self.depth) - 1

    def black_count(self) -> int:
        """Number of black pixels (depth 1 only)."""
        if self.depth != 1:
            raise ParameterError("black_count is defined for 1-bit images")
        return int(self.pixels.sum(dtype=np.int64))

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.depth == other.depth and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.depth, self.pixels.shape, self.pixels.tobytes()))

    def __repr__(self):
        return f"Image({self.width}x{self.height}, depth={self.depth})"
