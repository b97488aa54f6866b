"""Acceptance criteria C1-C12, each at its stated tolerance.

Every test prints one ``C<n> PASS|FAIL ...`` line and also collects it
for the terminal summary. Timing criteria run full-size corpora with
30 runs per image, so this module takes a few minutes.
"""
import time

import numpy as np
import pytest

from logdepth import analysis, experiments
from logdepth.codec import compress, decompress
from logdepth.imagegen import (
    SeriesSpec,
    add_noise,
    gen_blobs,
    gen_block_series,
    gen_random,
    gen_rule30,
    gen_uniform,
    invert,
    iter_line_series,
    superpose_rotated,
    tile,
)
from logdepth.timing import TimingStats

from conftest import ACCEPTANCE_LINES

RUNS = 30
RAW_600 = 600 * 600


def record(cid, passed, detail):
    line = f"{cid} {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def generated_image(i, rng):
    """The i-th image of the round-trip corpus: generators cycled, sizes and seeds drawn from rng."""
    w, h = int(rng.integers(1, 97)), int(rng.integers(1, 97))
    seed = int(rng.integers(0, 2**31))
    kind = i % 10
    if kind == 0:
        return gen_uniform(w, h, int(rng.integers(0, 2)))
    if kind == 1:
        return gen_random(w, h, seed, float(rng.uniform(0, 1)))
    if kind == 2:
        bits = max(1, w * h // 8)
        series = gen_block_series(SeriesSpec("block_insertion", w, h, seed, 8, {"block_bits": bits}))
        return series[int(rng.integers(0, 8))]
    if kind == 3:
        stop = int(rng.integers(0, 10))
        for n, img in enumerate(iter_line_series(SeriesSpec("line_series", w, h, seed, 10))):
            if n == stop:
                return img
    side = w | 1
    if kind == 4:
        return gen_rule30(side, h)
    if kind == 5:
        return superpose_rotated(gen_rule30(side, side))
    if kind == 6:
        return add_noise(gen_rule30(side, h), float(rng.uniform(0, 1)), seed)
    if kind == 7:
        return invert(gen_blobs(w, h, seed))
    if kind == 8:
        f = int(rng.integers(1, 4))
        return tile(gen_random(max(w // f, 1), max(h // f, 1), seed, 0.3), f)
    return gen_blobs(w, h, seed, float(rng.uniform(1, 8)))


def test_c1_round_trip_1000_images():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    bad = 0
    for i in range(1000):
        img = generated_image(i, rng)
        for codec in ("toy_rle", "filtered_deflate"):
            blob = compress(img, codec)
            bad += decompress(blob) != img
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 120
    assert record("C1", ok, f"1000 images x 2 codecs, {bad} mismatches, {elapsed:.1f} s (< 120 s)")


def test_c2_toy_codec_slope():
    v = experiments.block_series_toy(size=600, count=100)
    assert record("C2", v.passed, f"toy RLE: mean drop {v.data['mean_drop']:.1f} bits in [1900, 2000], "
                                   f"R^2 {v.data['r2']:.5f} >= 0.99")


def test_c3_full_codec_slope():
    v = experiments.block_series_png(size=600, count=100)
    assert record("C3", v.passed, f"filtered Deflate: slope {v.data['slope']:.1f} bits/image < 0, "
                                   f"R^2 {v.data['r2']:.4f} >= 0.9")


def test_c4_random_incompressible():
    k = compress(gen_random(600, 600, 0, 0.5), optimize=True).bit_length
    assert record("C4a", k >= 0.9 * RAW_600, f"K(random 600^2) = {k} bits >= {0.9 * RAW_600:.0f}")


@pytest.mark.xfail(strict=True, reason="Deflate needs >= 2 bits per 258-byte match: >= 349 bits of matches "
                                         "for 45000 packed bytes, before block and container headers")
def test_c4_uniform_compressible():
    blob = compress(gen_uniform(600, 600), optimize=True)
    limit = 0.001 * RAW_600
    ok = blob.bit_length <= limit
    record("C4b", ok, f"K(uniform 600^2) = {blob.bit_length} bits (payload {8 * len(blob.payload)}, "
                      f"header {blob.header_bits}) <= {limit:.0f}; unattainable for a Deflate stream")
    assert ok


def test_c5_size_scaling():
    v = experiments.size_scaling(runs=RUNS)
    r2 = {k: f["r2"] for k, f in v.data["fits"].items()}
    assert record("C5", v.passed, f"mean D vs pixels: R^2 uniform {r2['uniform']:.4f}, random {r2['random']:.4f} "
                                   f"(>= 0.9 each)")


def test_c6_line_series_shape():
    v = experiments.line_series(runs=RUNS, size=600, count=100)
    stats = v.data["stats"]
    means = [s["mean"] for s in stats]
    se = v.data["pooled_se"]
    p = v.data["peak"]
    margin = min(means[p] - means[0], means[p] - means[-1]) / se
    assert record("C6", v.passed, f"peak image {p}, exceeds both endpoints by {margin:.1f} pooled SE (>= 3)")


def test_c7_depth_signature():
    v = experiments.signature(runs=RUNS, size=600)
    groups = " ".join(f"{g}={','.join(m)}" for g, m in v.data["groups"].items())
    assert record("C7", v.passed, f"K top 2: {v.data['K_order'][:2]}; D groups {groups}")


def test_c8_inversion_invariance():
    sessions = 10
    res = experiments.inversion_check(experiments.mixed_corpus(600), runs=RUNS, sessions=sessions)
    worst_k = max(res["k_rel"].values())
    worst_g = min(res["together"].values())
    ok = worst_k <= 0.01 and worst_g >= 0.9 * sessions
    assert record("C8", ok, f"max |dK|/K {100 * worst_k:.3f}% (<= 1%), image and inverse share a D group "
                            f"in >= {worst_g}/{sessions} sessions (>= 90%)")


def pairwise_oracle(partition):
    gs = partition.groups
    return sum(
        1 for i in range(len(gs)) for j in range(i + 1, len(gs))
        if not gs[i].mean - gs[i].std > gs[j].mean + gs[j].std
    )


def test_c9_grouping_correctness():
    rng = np.random.default_rng(9)
    violations = 0
    for t in range(1000):
        n = int(rng.integers(1, 60))
        scale = float(rng.choice([0.01, 0.1, 1.0, 5.0]))
        means = rng.uniform(0, 10, n)
        stds = rng.exponential(scale, n)
        if t % 4 == 0:
            means = np.round(means)  # exact ties
        stats = [TimingStats(f"i{k}", float(m), float(s), 30) for k, (m, s) in enumerate(zip(means, stds))]
        part = analysis.partition_significant(stats)
        members = sorted(m for g in part.groups for m in g.members)
        violations += pairwise_oracle(part) + (members != sorted(s.image_id for s in stats))
    assert record("C9", violations == 0, f"1000 random stat sets, {violations} oracle violations")


def test_c10_ranking_stability():
    v = experiments.series1(runs=RUNS, size=600, sessions=2)
    assert record("C10", v.passed, f"rho {min(v.data['rho']):.3f} (>= 0.9), extremes kept {v.data['extremes']}; "
                                    f"orders {v.data['rankings']}")


def test_c11_aggregation_soundness():
    rng = np.random.default_rng(11)
    contradictions = 0
    for _ in range(1000):
        n_codecs, n_images = int(rng.integers(1, 5)), int(rng.integers(2, 10))
        base = rng.lognormal(0, 1, n_images)
        cells = base * rng.lognormal(0, float(rng.choice([0.05, 0.5, 2.0])), (n_codecs, n_images))
        ids = tuple(f"i{k}" for k in range(n_images))
        agg = analysis.aggregate_depth(analysis.DepthMatrix(tuple(f"c{k}" for k in range(n_codecs)), ids, cells))
        pos = {i: p for p, i in enumerate(agg.total_order)}
        contradictions += sum(pos[h] > pos[k] for h, k in agg.partial_order)
    assert record("C11", contradictions == 0, f"1000 random matrices, {contradictions} contradictions")


def test_c12_timed_region_isolation():
    v = experiments.isolation(runs=RUNS, size=600)
    assert record("C12", v.passed, f"mean shift {v.data['shift'] * 1e6:+.2f} us vs pooled SE "
                                    f"{v.data['pooled_se'] * 1e6:.2f} us (< 1 SE)")
