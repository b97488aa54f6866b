"""Seeded generators for every synthetic image series used in the experiments.

All randomness comes from numpy's PCG64 bit generator seeded with the
caller's 64-bit seed (``np.random.Generator(np.random.PCG64(seed))``).
Only ``Generator.random``, ``Generator.integers`` and
``Generator.permutation`` are used, whose output streams numpy keeps
stable for a fixed bit generator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import DimensionError, ParameterError
from .image import BLACK, MAX_SIDE, WHITE, Image

RNG_NAME = "numpy-PCG64"

SERIES_KINDS = (
    "uniform",
    "random_threshold",
    "block_insertion",
    "line_series",
    "rule30_family",
    "tiling",
)

_DEFAULT_PARAMS = {
    "uniform": {"value": WHITE},
    "random_threshold": {"threshold": 0.5, "threshold_min": 0.05},
    "block_insertion": {"threshold": 0.5, "block_bits": 2000},
    "line_series": {},
    "rule30_family": {"noise_fraction": 0.5},
    "tiling": {"tile_factor": 2, "smoothing": 6.0},
}


def make_rng(seed: int) -> np.random.Generator:
    if not 0 <= int(seed) < 1 << 64:
        raise ParameterError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def _check_dims(width, height):
    if width < 1 or height < 1:
        raise DimensionError(f"dimensions must be >= 1, got {width}x{height}")
    if width > MAX_SIDE or height > MAX_SIDE:
        raise DimensionError(f"dimensions exceed {MAX_SIDE}: {width}x{height}")


def _check_fraction(name, value):
    if not 0.0 <= value <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class SeriesSpec:
    """Description of one generated series.

    ``params`` keys by kind (missing keys take the defaults shown):

    * uniform: ``value`` (0 white, 1 black). Image i has size
      ``ceil(width*(i+1)/count) x ceil(height*(i+1)/count)``.
    * random_threshold: ``threshold`` (densest), ``threshold_min``
      (sparsest); thresholds are spaced linearly, densest first.
    * block_insertion: ``threshold`` (base density), ``block_bits``.
    * line_series: none; image n holds ``2 n**2`` lines.
    * rule30_family: ``noise_fraction``; width must be odd and equal to
      height.
    * tiling: ``tile_factor``, ``smoothing``; image i is a blob field
      tiled ``tile_factor**i`` times per side.
    """

    kind: str
    width: int = 600
    height: int = 600
    seed: int = 0
    count: int = 1
    params: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.kind not in SERIES_KINDS:
            raise ParameterError(f"unknown series kind {self.kind!r}; expected one of {SERIES_KINDS}")
        _check_dims(self.width, self.height)
        if self.count < 1:
            raise ParameterError(f"count must be >= 1, got {self.count}")
        merged = dict(_DEFAULT_PARAMS[self.kind])
        merged.update(self.params)
        object.__setattr__(self, "params", merged)
        for key in ("threshold", "threshold_min", "noise_fraction"):
            if key in merged:
                _check_fraction(key, float(merged[key]))
        if self.kind == "block_insertion":
            bits = int(merged["block_bits"])
            if bits < 0 or bits > self.width * self.height:
                raise ParameterError(f"block_bits must lie in [0, area], got {bits}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)


def gen_uniform(width: int, height: int, value: int = WHITE) -> Image:
    _check_dims(width, height)
    if value not in (WHITE, BLACK):
        raise ParameterError(f"uniform value must be 0 or 1, got {value}")
    return Image(np.full((height, width), value, dtype=np.uint8))


def _random_bits(rng, width, height, threshold):
    return (rng.random((height, width)) < threshold).astype(np.uint8)


def gen_random(width: int, height: int, seed: int, threshold: float = 0.5) -> Image:
    """Each pixel black independently with probability ``threshold``."""
    _check_dims(width, height)
    _check_fraction("threshold", threshold)
    return Image(_random_bits(make_rng(seed), width, height, threshold))


def gen_block_series(spec: SeriesSpec) -> list[Image]:
    """Random base image with growing white prefixes of ``block_bits`` pixels.

    Image ``i`` has its first ``i * block_bits`` row-major pixels forced
    white, so image 0 is the untouched base.
    """
    if spec.kind != "block_insertion":
        raise ParameterError(f"expected a block_insertion spec, got {spec.kind}")
    bits = int(spec.params["block_bits"])
    area = spec.width * spec.height
    if (spec.count - 1) * bits > area:
        raise ParameterError(
            f"{spec.count - 1} insertions of {bits} bits exceed the image area {area}"
        )
    base = _random_bits(make_rng(spec.seed), spec.width, spec.height, float(spec.params["threshold"]))
    flat = base.ravel()
    out = []
    for i in range(spec.count):
        img = flat.copy()
        img[: i * bits] = WHITE
        out.append(Image(img.reshape(spec.height, spec.width)))
    return out


def line_pixels(x0: int, y0: int, x1: int, y1: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixels of the Bresenham segment from (x0, y0) to (x1, y1), endpoints included.

    Along the major axis every integer is visited once; the minor
    coordinate is the exact rational position rounded half away from the
    start point, which is what the integer error-accumulator loop yields.
    """
    dx, dy = x1 - x0, y1 - y0
    steps = max(abs(dx), abs(dy))
    if steps == 0:
        return np.array([x0]), np.array([y0])
    i = np.arange(steps + 1, dtype=np.int64)
    if abs(dx) >= abs(dy):
        xs = x0 + np.sign(dx) * i
        ys = y0 + np.sign(dy) * ((2 * i * abs(dy) + steps) // (2 * steps))
    else:
        ys = y0 + np.sign(dy) * i
        xs = x0 + np.sign(dx) * ((2 * i * abs(dx) + steps) // (2 * steps))
    return xs, ys


def _border_points(pos, width, height):
    """Map perimeter indices to (x, y) on the canvas border, clockwise from (0, 0)."""
    top = width - 1
    right = height - 1
    bottom = width - 1
    xs = np.empty_like(pos)
    ys = np.empty_like(pos)
    p = pos.copy()
    m = p < top
    xs[m], ys[m] = p[m], 0
    p2 = p - top
    m2 = (~m) & (p2 < right)
    xs[m2], ys[m2] = width - 1, p2[m2]
    p3 = p2 - right
    m3 = (~m) & (~m2) & (p3 < bottom)
    xs[m3], ys[m3] = width - 1 - p3[m3], height - 1
    p4 = p3 - bottom
    m4 = (~m) & (~m2) & (~m3)
    xs[m4], ys[m4] = 0, height - 1 - p4[m4]
    return xs, ys


def line_count(n: int) -> int:
    return 2 * n * n


def iter_line_series(spec: SeriesSpec) -> Iterator[Image]:
    """Yield the line-series images one at a time (cumulative drawing)."""
    if spec.kind != "line_series":
        raise ParameterError(f"expected a line_series spec, got {spec.kind}")
    w, h = spec.width, spec.height
    total = line_count(spec.count - 1)
    rng = make_rng(spec.seed)
    perimeter = max(2 * (w - 1) + 2 * (h - 1), 1)
    ends = rng.integers(0, perimeter, size=(total, 2))
    if w == 1 or h == 1:
        xs0 = np.zeros(total, dtype=np.int64)
        ys0 = xs0.copy()
        xs1, ys1 = xs0.copy(), ys0.copy()
        if w > 1:
            xs0, xs1 = ends[:, 0] % w, ends[:, 1] % w
        elif h > 1:
            ys0, ys1 = ends[:, 0] % h, ends[:, 1] % h
    else:
        xs0, ys0 = _border_points(ends[:, 0], w, h)
        xs1, ys1 = _border_points(ends[:, 1], w, h)
    canvas = np.zeros((h, w), dtype=np.uint8)
    drawn = 0
    for n in range(spec.count):
        target = line_count(n)
        if target > drawn:
            px, py = [], []
            for j in range(drawn, target):
                lx, ly = line_pixels(int(xs0[j]), int(ys0[j]), int(xs1[j]), int(ys1[j]))
                px.append(lx)
                py.append(ly)
            canvas[np.concatenate(py), np.concatenate(px)] = BLACK
            drawn = target
        yield Image(canvas)


def gen_line_series(spec: SeriesSpec) -> list[Image]:
    return list(iter_line_series(spec))


def rule30_step(row: np.ndarray) -> np.ndarray:
    """One rule-30 update with cyclic boundary: left XOR (center OR right)."""
    return np.roll(row, 1) ^ (row | np.roll(row, -1))


def gen_rule30(width: int, steps: int) -> Image:
    """``steps`` rows of rule 30 from a single black center cell."""
    if width % 2 == 0:
        raise ParameterError(f"rule-30 width must be odd for a centered seed, got {width}")
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    _check_dims(width, steps)
    rows = np.zeros((steps, width), dtype=np.uint8)
    rows[0, width // 2] = BLACK
    for t in range(1, steps):
        rows[t] = rule30_step(rows[t - 1])
    return Image(rows)


def superpose_rotated(img: Image) -> Image:
    """Black-union of the image with itself rotated by 90 degrees."""
    if img.width != img.height:
        raise DimensionError(f"superposition needs a square image, got {img.width}x{img.height}")
    if img.depth == 1:
        return Image(img.pixels | np.rot90(img.pixels), depth=1)
    return Image(np.maximum(img.pixels, np.rot90(img.pixels)), depth=img.depth)


def add_noise(img: Image, fraction: float, seed: int) -> Image:
    """Redraw exactly ``round(fraction * area)`` seeded-random pixel positions uniformly."""
    _check_fraction("fraction", fraction)
    rng = make_rng(seed)
    count = int(round(fraction * img.area))
    flat = img.pixels.ravel().copy()
    if count:
        positions = rng.permutation(img.area)[:count]
        flat[positions] = rng.integers(0, img.maxval + 1, size=count, dtype=np.uint8)
    return Image(flat.reshape(img.height, img.width), depth=img.depth)


def invert(img: Image) -> Image:
    return Image(img.maxval - img.pixels, depth=img.depth)


def tile(img: Image, factor: int) -> Image:
    if factor < 1:
        raise ParameterError(f"tile factor must be >= 1, got {factor}")
    if img.width * factor > MAX_SIDE or img.height * factor > MAX_SIDE:
        raise DimensionError(
            f"tiling {img.width}x{img.height} by {factor} exceeds the maximum side {MAX_SIDE}"
        )
    return Image(np.tile(img.pixels, (factor, factor)), depth=img.depth)


def gen_blobs(width: int, height: int, seed: int, smoothing: float = 6.0) -> Image:
    """Photo-like binary texture: Gaussian-smoothed white noise cut at its median.

    The smoothing is a periodic Gaussian applied in the Fourier domain, so
    the field wraps seamlessly when tiled.
    """
    _check_dims(width, height)
    if smoothing <= 0:
        raise ParameterError(f"smoothing must be positive, got {smoothing}")
    noise = make_rng(seed).random((height, width)) - 0.5
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.rfftfreq(width)[None, :]
    kernel = np.exp(-2.0 * (np.pi * smoothing) ** 2 * (fx * fx + fy * fy))
    field_ = np.fft.irfft2(np.fft.rfft2(noise) * kernel, s=(height, width))
    return Image((field_ < np.median(field_)).astype(np.uint8))


def binarize(gray: np.ndarray, maxval: int = 255) -> np.ndarray:
    """Luminance to 1-bit: strictly below 50% becomes black, exactly 50% stays white."""
    gray = np.asarray(gray, dtype=np.int64)
    return (2 * gray < maxval).astype(np.uint8)


def generate_series(spec: SeriesSpec) -> list[tuple[str, Image]]:
    """Generate a series as ``(image_id, image)`` pairs with stable ids."""
    p = spec.params
    prefix = spec.name
    if spec.kind == "uniform":
        out = []
        for i in range(spec.count):
            w = -(-spec.width * (i + 1) // spec.count)
            h = -(-spec.height * (i + 1) // spec.count)
            out.append((f"{prefix}-{i:03d}", gen_uniform(w, h, int(p["value"]))))
        return out
    if spec.kind == "random_threshold":
        hi, lo = float(p["threshold"]), float(p["threshold_min"])
        ths = np.linspace(hi, lo, spec.count) if spec.count > 1 else [hi]
        rng = make_rng(spec.seed)
        return [
            (f"{prefix}-{i:03d}", Image(_random_bits(rng, spec.width, spec.height, float(t))))
            for i, t in enumerate(ths)
        ]
    if spec.kind == "block_insertion":
        return [(f"{prefix}-{i:03d}", im) for i, im in enumerate(gen_block_series(spec))]
    if spec.kind == "line_series":
        return [(f"{prefix}-{i:03d}", im) for i, im in enumerate(iter_line_series(spec))]
    if spec.kind == "rule30_family":
        if spec.width != spec.height:
            raise DimensionError("rule30_family needs a square canvas")
        base = gen_rule30(spec.width, spec.height)
        members = [
            ("rule30", base),
            ("superposed", superpose_rotated(base)),
            ("noisy", add_noise(base, float(p["noise_fraction"]), spec.seed)),
        ]
        out = []
        for name, im in members:
            out.append((f"{prefix}-{name}", im))
            out.append((f"{prefix}-{name}-inv", invert(im)))
        return out
    if spec.kind == "tiling":
        factor = int(p["tile_factor"])
        out = []
        for i in range(spec.count):
            f = factor**i
            if spec.width % f or spec.height % f:
                raise DimensionError(f"tile factor {f} does not divide {spec.width}x{spec.height}")
            base = gen_blobs(spec.width // f, spec.height // f, spec.seed, float(p["smoothing"]))
            out.append((f"{prefix}-x{f}", tile(base, f)))
        return out
    raise ParameterError(f"unknown series kind {spec.kind!r}")
