import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logdepth.codec import compress, rle_compress, runs
from logdepth.errors import DimensionError, ParameterError
from logdepth.image import BLACK, WHITE, Image
from logdepth.imagegen import (
    SeriesSpec,
    add_noise,
    binarize,
    gen_block_series,
    gen_blobs,
    gen_line_series,
    gen_random,
    gen_rule30,
    gen_uniform,
    generate_series,
    invert,
    line_count,
    line_pixels,
    make_rng,
    rule30_step,
    superpose_rotated,
    tile,
)


def rule_table_step(row, rule=30):
    """Independent oracle: elementary CA step via the rule-number lookup table, cyclic."""
    n = len(row)
    out = [0] * n
    for i in range(n):
        idx = (row[(i - 1) % n] << 2) | (row[i] << 1) | row[(i + 1) % n]
        out[i] = (rule >> idx) & 1
    return out


def bresenham_loop(x0, y0, x1, y1):
    """Reference integer Bresenham with rounding half away from the start point."""
    dx, dy = x1 - x0, y1 - y0
    sx, sy = (dx > 0) - (dx < 0), (dy > 0) - (dy < 0)
    adx, ady = abs(dx), abs(dy)
    pts = []
    if adx >= ady:
        err = adx
        y = y0
        for i in range(adx + 1):
            pts.append((x0 + sx * i, y))
            err += 2 * ady
            if err >= 2 * adx and adx:
                y += sy
                err -= 2 * adx
    else:
        err = ady
        x = x0
        for i in range(ady + 1):
            pts.append((x, y0 + sy * i))
            err += 2 * adx
            if err >= 2 * ady:
                x += sx
                err -= 2 * ady
    return pts


# --- uniform -------------------------------------------------------------


def test_uniform_single_white_pixel():
    img = gen_uniform(1, 1, WHITE)
    assert img.width == img.height == 1
    assert img.pixels.tolist() == [[0]]


def test_uniform_black_600():
    img = gen_uniform(600, 600, BLACK)
    assert img.pixels.shape == (600, 600)
    assert img.black_count() == 360000


def test_uniform_8x4_is_one_run():
    img = gen_uniform(8, 4, WHITE)
    assert img.area == 32
    values, lengths = runs(img.pixels)
    assert values.tolist() == [0] and lengths.tolist() == [32]
    assert rle_compress(img).payload[0] == 1  # one run in the varint count


@pytest.mark.parametrize("w,h", [(0, 5), (5, 0), (-1, 3), (20000, 2)])
def test_uniform_bad_dims(w, h):
    with pytest.raises(DimensionError):
        gen_uniform(w, h)


def test_uniform_bad_value():
    with pytest.raises(ParameterError):
        gen_uniform(2, 2, 2)


# --- random --------------------------------------------------------------


def test_random_zero_threshold_is_white():
    assert gen_random(100, 100, 42, 0.0) == gen_uniform(100, 100, WHITE)


def test_random_one_threshold_is_black():
    assert gen_random(10, 10, 1, 1.0) == gen_uniform(10, 10, BLACK)


def test_random_binomial_count():
    n, p = 10000, 0.3
    sigma = np.sqrt(n * p * (1 - p))
    assert abs(gen_random(100, 100, 42, p).black_count() - n * p) <= 4 * sigma


@given(st.integers(0, 2**63), st.sampled_from([0.1, 0.25, 0.5, 0.8]))
def test_random_frequency_within_4_sigma(seed, p):
    n = 10000
    count = gen_random(100, 100, seed, p).black_count()
    assert abs(count - n * p) <= 4 * np.sqrt(n * p * (1 - p))


def test_random_deterministic():
    assert gen_random(37, 23, 9, 0.4) == gen_random(37, 23, 9, 0.4)
    assert gen_random(37, 23, 9, 0.4) != gen_random(37, 23, 10, 0.4)


@pytest.mark.parametrize("t", [-0.1, 1.5, float("nan")])
def test_random_bad_threshold(t):
    with pytest.raises(ParameterError):
        gen_random(4, 4, 0, t)


def test_random_incompressible():
    img = gen_random(600, 600, 3, 0.5)
    assert compress(img).bit_length > 0.9 * 360000


def test_seed_must_fit_64_bits():
    with pytest.raises(ParameterError):
        make_rng(2**64)
    with pytest.raises(ParameterError):
        make_rng(-1)


# --- block series --------------------------------------------------------


def test_block_series_count_one_is_base():
    spec = SeriesSpec("block_insertion", 50, 40, 5, 1, {"block_bits": 100})
    assert gen_block_series(spec)[0] == gen_random(50, 40, 5, 0.5)


def test_block_series_stripes():
    spec = SeriesSpec("block_insertion", 100, 100, 2, 5, {"block_bits": 2000})
    imgs = gen_block_series(spec)
    for i in range(4):
        a = imgs[i].pixels.ravel()
        b = imgs[i + 1].pixels.ravel()
        diff = np.flatnonzero(a != b)
        stripe = np.arange(i * 2000, (i + 1) * 2000)
        assert set(diff) == set(stripe[a[stripe] == BLACK])
        assert np.all(b[: (i + 1) * 2000] == WHITE)


def test_block_series_full_coverage_ends_white():
    spec = SeriesSpec("block_insertion", 20, 10, 1, 5, {"block_bits": 50})
    assert gen_block_series(spec)[-1] == gen_uniform(20, 10)


def test_block_series_overflow():
    spec = SeriesSpec("block_insertion", 10, 10, 1, 3, {"block_bits": 60})
    with pytest.raises(ParameterError):
        gen_block_series(spec)
    with pytest.raises(ParameterError):
        SeriesSpec("block_insertion", 10, 10, 1, 1, {"block_bits": 101})


def test_block_series_k_non_increasing():
    from scipy.stats import spearmanr

    spec = SeriesSpec("block_insertion", 200, 200, 4, 20, {"block_bits": 2000})
    ks = [compress(im).bit_length for im in gen_block_series(spec)]
    violations = sum(b > a for a, b in zip(ks, ks[1:]))
    assert violations <= 2
    assert spearmanr(range(len(ks)), ks).statistic <= -0.95


# --- line series ---------------------------------------------------------


@given(st.integers(-40, 40), st.integers(-40, 40), st.integers(-40, 40), st.integers(-40, 40))
def test_line_pixels_match_loop(x0, y0, x1, y1):
    xs, ys = line_pixels(x0, y0, x1, y1)
    assert list(zip(xs.tolist(), ys.tolist())) == bresenham_loop(x0, y0, x1, y1)


def test_line_counts():
    assert line_count(0) == 0
    assert line_count(1) == 2
    assert line_count(99) == 19602


def test_line_series_shape_and_monotone_ink():
    spec = SeriesSpec("line_series", 80, 60, 7, 12)
    imgs = gen_line_series(spec)
    assert len(imgs) == 12
    assert imgs[0] == gen_uniform(80, 60)
    ink = [im.black_count() for im in imgs]
    assert ink == sorted(ink)
    for a, b in zip(imgs, imgs[1:]):
        assert np.all(b.pixels >= a.pixels)  # cumulative drawing


def test_line_series_n1_two_lines():
    spec = SeriesSpec("line_series", 64, 64, 3, 2)
    img = gen_line_series(spec)[1]
    # two border-to-border segments: each has between 1 and 64 pixels (major-axis span + 1)
    assert 2 <= img.black_count() <= 128


def test_line_series_default_length_ends_near_black():
    spec = SeriesSpec("line_series", 100, 100, 1, 100)
    last = gen_line_series(spec)[-1]
    assert last.black_count() > 0.9 * last.area


def test_line_series_deterministic():
    spec = SeriesSpec("line_series", 40, 40, 11, 6)
    assert gen_line_series(spec) == gen_line_series(spec)


def test_line_series_degenerate_canvas():
    imgs = gen_line_series(SeriesSpec("line_series", 1, 1, 0, 3))
    assert imgs[-1].pixels.tolist() == [[1]]


# --- rule 30 -------------------------------------------------------------


def test_rule30_single_step():
    assert rule30_step(np.array([0, 0, 1, 0, 0], dtype=np.uint8)).tolist() == [0, 1, 1, 1, 0]


def test_rule30_seed_row_only():
    assert gen_rule30(5, 1).pixels.tolist() == [[0, 0, 1, 0, 0]]


def test_rule30_even_width():
    with pytest.raises(ParameterError):
        gen_rule30(600, 10)


def test_rule30_matches_lookup_table_oracle():
    img = gen_rule30(601, 600)
    row = [0] * 601
    row[300] = 1
    for t in range(600):
        assert img.pixels[t].tolist() == row
        row = rule_table_step(row)


def test_rule30_center_column():
    # independent lookup-table simulation; also the published center-column sequence
    img = gen_rule30(601, 600)
    assert img.pixels[:10, 300].tolist() == [1, 1, 0, 1, 1, 1, 0, 0, 1, 1]


@given(st.lists(st.integers(0, 1), min_size=3, max_size=40))
def test_rule30_step_matches_table(row):
    assert rule30_step(np.array(row, dtype=np.uint8)).tolist() == rule_table_step(row)


# --- superposition, noise, inversion, tiling ----------------------------


def test_superpose_white():
    w = gen_uniform(9, 9)
    assert superpose_rotated(w) == w


def test_superpose_rotation_symmetric_fixed_point():
    px = np.zeros((7, 7), dtype=np.uint8)
    px[3, :] = 1
    px[:, 3] = 1
    img = Image(px)
    assert superpose_rotated(img) == img


def test_superpose_adds_black():
    base = gen_rule30(601, 601)
    sup = superpose_rotated(base)
    assert sup.black_count() >= base.black_count()
    assert np.all(sup.pixels >= base.pixels)


def test_superpose_non_square():
    with pytest.raises(DimensionError):
        superpose_rotated(gen_uniform(4, 5))


def test_noise_zero_is_identity():
    img = gen_random(30, 30, 1, 0.5)
    assert add_noise(img, 0.0, 3) == img


def test_noise_redraws_exact_count():
    img = gen_uniform(600, 600)
    rng = make_rng(5)
    positions = rng.permutation(360000)[:180000]
    noisy = add_noise(img, 0.5, 5)
    changed = np.flatnonzero(noisy.pixels.ravel())
    # only redrawn positions can turn black, and about half of them do
    assert set(changed) <= set(positions)
    assert abs(changed.size - 90000) <= 4 * np.sqrt(180000 * 0.25)


def test_noise_full_two_seeds_differ_by_half():
    img = gen_uniform(100, 100)
    a, b = add_noise(img, 1.0, 1), add_noise(img, 1.0, 2)
    d = int(np.sum(a.pixels != b.pixels))
    assert abs(d - 5000) <= 4 * np.sqrt(10000 * 0.25)


def test_noise_bad_fraction():
    with pytest.raises(ParameterError):
        add_noise(gen_uniform(3, 3), 1.5, 0)


def test_invert_uniform_and_involution():
    assert invert(gen_uniform(5, 5, BLACK)) == gen_uniform(5, 5, WHITE)
    img = gen_random(31, 17, 2, 0.5)
    assert invert(invert(img)) == img


def test_invert_depth8():
    img = Image(np.array([[0, 10, 255]], dtype=np.uint8), depth=8)
    assert invert(img).pixels.tolist() == [[255, 245, 0]]


def test_invert_k_within_one_percent():
    img = gen_rule30(201, 200)
    a, b = compress(img).bit_length, compress(invert(img)).bit_length
    assert abs(a - b) <= 0.01 * a


def test_tile_identity_and_four_copies():
    img = gen_random(300, 300, 1, 0.3)
    assert tile(img, 1) == img
    t = tile(img, 2)
    assert (t.width, t.height) == (600, 600)
    for r in (0, 300):
        for c in (0, 300):
            assert np.array_equal(t.pixels[r : r + 300, c : c + 300], img.pixels)


def test_tile_overflow():
    with pytest.raises(DimensionError):
        tile(gen_uniform(10000, 1), 2)
    with pytest.raises(ParameterError):
        tile(gen_uniform(2, 2), 0)


def test_tile_is_cheaper_than_copies():
    img = gen_blobs(150, 150, 4)
    assert compress(tile(img, 2)).bit_length < 4 * compress(img).bit_length


# --- other helpers -------------------------------------------------------


def test_binarize_tie_stays_white():
    assert binarize(np.array([[0, 127, 128, 255]]), 255).tolist() == [[1, 1, 0, 0]]
    assert binarize(np.array([[2]]), 4).tolist() == [[0]]  # exactly 50%


def test_blobs_balanced_and_periodic():
    img = gen_blobs(64, 64, 3, smoothing=4.0)
    assert img.black_count() == 64 * 64 // 2
    assert gen_blobs(64, 64, 3, 4.0) == img


@pytest.mark.parametrize(
    "spec",
    [
        SeriesSpec("uniform", 20, 10, count=4),
        SeriesSpec("random_threshold", 20, 20, 3, 5),
        SeriesSpec("block_insertion", 20, 20, 3, 4, {"block_bits": 50}),
        SeriesSpec("line_series", 20, 20, 3, 4),
        SeriesSpec("rule30_family", 21, 21, 3),
        SeriesSpec("tiling", 32, 32, 3, 3, {"tile_factor": 2, "smoothing": 2.0}),
    ],
    ids=lambda s: s.kind,
)
def test_generate_series_deterministic(spec):
    a, b = generate_series(spec), generate_series(spec)
    assert [i for i, _ in a] == [i for i, _ in b]
    assert all(x == y for (_, x), (_, y) in zip(a, b))
    assert len({i for i, _ in a}) == len(a)


def test_random_threshold_series_densest_first():
    out = generate_series(SeriesSpec("random_threshold", 100, 100, 1, 4, {"threshold": 0.5, "threshold_min": 0.05}))
    counts = [im.black_count() for _, im in out]
    assert counts == sorted(counts, reverse=True)


def test_rule30_family_members():
    out = dict(generate_series(SeriesSpec("rule30_family", 31, 31, 2, name="r")))
    assert set(out) == {"r-rule30", "r-rule30-inv", "r-superposed", "r-superposed-inv", "r-noisy", "r-noisy-inv"}
    assert out["r-rule30-inv"] == invert(out["r-rule30"])


@pytest.mark.parametrize(
    "kind,params",
    [("random_threshold", {"threshold": 2}), ("rule30_family", {"noise_fraction": -0.5}), ("nope", {})],
)
def test_spec_validation(kind, params):
    with pytest.raises(ParameterError):
        SeriesSpec(kind, 10, 10, params=params)


def test_spec_count_positive():
    with pytest.raises(ParameterError):
        SeriesSpec("uniform", 10, 10, count=0)
