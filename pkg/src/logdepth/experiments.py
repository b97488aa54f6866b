"""The experiment battery: generated corpora, timing sessions and their pass/fail predicates.

Every experiment returns a ``Verdict`` holding the predicate outcome, a
few human-readable lines and the underlying numbers. Corpora are built
from seeds only, so reruns see identical images; timing values differ
between runs and carry their session metadata.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import analysis
from .codec import compress
from .errors import ParameterError
from .image import Image
from .imagegen import (
    SeriesSpec,
    gen_blobs,
    gen_random,
    gen_rule30,
    gen_uniform,
    generate_series,
    invert,
    iter_line_series,
    superpose_rotated,
    tile,
)
from .timing import Protocol, Session, run_session

SIZE_SCALING_SIDES = (100, 300, 500, 700, 900)
# densities picked so that neighbouring decode times sit several sigma apart
SERIES1_THRESHOLDS = (0.5, 0.3, 0.05, 0.02, 0.01)
STRUCTURED = ("rule30", "superposed", "tiled-x1", "tiled-x4", "line-mid")


@dataclass
class Verdict:
    test_id: str
    passed: bool
    predicate: str
    lines: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.passed)

    def summary(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.test_id}: {self.predicate}"


def time_corpus(
    images: dict[str, Image],
    protocol: Protocol,
    codec: str = "filtered_deflate",
    optimize: bool = True,
    blobs: dict | None = None,
    verify_rounds=1,
) -> tuple[dict, Session]:
    """Compress (unless ``blobs`` is given) and time a corpus in one interleaved session."""
    if blobs is None:
        blobs = {k: compress(v, codec, optimize) for k, v in images.items()}
    ids = list(blobs)
    session = run_session([blobs[i] for i in ids], protocol, ids, verify_rounds=verify_rounds)
    return blobs, session


def pooled_sigma(stats) -> float:
    n = np.array([s.n_kept for s in stats], dtype=float)
    v = np.array([s.std for s in stats]) ** 2
    dof = (n - 1).sum()
    return float(math.sqrt(((n - 1) * v).sum() / dof)) if dof > 0 else 0.0


def pooled_se(stats) -> float:
    """Pooled within-image sigma over the typical per-image sample count."""
    n = float(np.mean([s.n_kept for s in stats]))
    return pooled_sigma(stats) / math.sqrt(n)


def _rule30_side(size: int) -> int:
    return size if size % 2 else size - 1


# --- compressed-length experiments ---------------------------------------


def block_series_k(codec: str, size: int = 600, count: int = 100, block_bits: int = 2000, seed: int = 0,
                   optimize: bool = True) -> tuple[list[int], analysis.LinearFit]:
    spec = SeriesSpec("block_insertion", size, size, seed, count, {"threshold": 0.5, "block_bits": block_bits})
    ks = [compress(im, codec, optimize).bit_length for _, im in generate_series(spec)]
    return ks, analysis.linear_fit(np.arange(count), ks)


def block_series_toy(seed: int = 0, size: int = 600, count: int = 100, **_) -> Verdict:
    ks, fit = block_series_k("toy_rle", size, count, seed=seed)
    drop = -fit.slope
    mean_drop = (ks[0] - ks[-1]) / (count - 1)
    ok = 1900 <= mean_drop <= 2000 and fit.r2 >= 0.99
    return Verdict(
        "block_series_toy", ok, "mean per-image drop in [1900, 2000] bits and R^2 >= 0.99",
        [f"mean drop {mean_drop:.1f} bits/image, fitted drop {drop:.1f}, R^2 {fit.r2:.5f}"],
        {"K_bits": ks, "slope": fit.slope, "r2": fit.r2, "mean_drop": mean_drop},
    )


def block_series_png(seed: int = 0, size: int = 600, count: int = 100, optimize: bool = True, **_) -> Verdict:
    ks, fit = block_series_k("filtered_deflate", size, count, seed=seed, optimize=optimize)
    ok = fit.slope < 0 and fit.r2 >= 0.9
    return Verdict(
        "block_series_png", ok, "negative slope with R^2 >= 0.9",
        [f"slope {fit.slope:.1f} bits/image, R^2 {fit.r2:.4f}"],
        {"K_bits": ks, "slope": fit.slope, "r2": fit.r2},
    )


# --- timing experiments ---------------------------------------------------


def size_scaling(runs: int = 30, seed: int = 0, sides=SIZE_SCALING_SIDES, **_) -> Verdict:
    images = {}
    for s in sides:
        images[f"uniform-{s}"] = gen_uniform(s, s)
        images[f"random-{s}"] = gen_random(s, s, seed, 0.5)
    _, session = time_corpus(images, Protocol(n_runs=runs, shuffle_seed=seed))
    by_id = session.by_id()
    fits, lines = {}, []
    for fam in ("uniform", "random"):
        x = [s * s for s in sides]
        y = [by_id[f"{fam}-{s}"].mean for s in sides]
        fits[fam] = analysis.linear_fit(x, y)
        lines.append(f"{fam}: {fits[fam].slope * 1e9:.3f} ns/pixel, R^2 {fits[fam].r2:.4f}")
    ok = all(f.r2 >= 0.9 for f in fits.values())
    return Verdict(
        "size_scaling", ok, "mean D vs pixel count linear with R^2 >= 0.9 for both families", lines,
        {"fits": {k: vars(v) for k, v in fits.items()}, "stats": [s.to_dict() for s in session.stats],
         "session": session.metadata},
    )


def line_series(runs: int = 30, seed: int = 0, size: int = 600, count: int = 100, **_) -> Verdict:
    spec = SeriesSpec("line_series", size, size, seed, count, name="lines")
    images = {f"lines-{i:03d}": im for i, im in enumerate(iter_line_series(spec))}
    blobs, session = time_corpus(images, Protocol(n_runs=runs, shuffle_seed=seed))
    ordered = [session.by_id()[i] for i in images]
    means = np.array([s.mean for s in ordered])
    se = pooled_se(ordered)
    peak = int(np.argmax(means[1:-1])) + 1
    margin = min(means[peak] - means[0], means[peak] - means[-1])
    ok = margin >= 3 * se
    jumps = analysis.select_jumps(ordered, min(8, len(ordered)))
    lines = [
        f"peak at image {peak}: {means[peak] * 1e6:.1f} us; endpoints {means[0] * 1e6:.1f} / {means[-1] * 1e6:.1f} us",
        f"margin {margin / se:.1f} pooled SE (need >= 3)",
        f"jump selection: images {list(jumps.indices)}, spread {jumps.spread_in_sigma:.1f} sigma"
        + (" (degenerate)" if jumps.degenerate else ""),
    ]
    return Verdict(
        "line_series", ok, "max interior mean D exceeds both endpoints by >= 3 pooled SE", lines,
        {"K_bits": [blobs[i].bit_length for i in images], "stats": [s.to_dict() for s in ordered],
         "peak": peak, "pooled_se": se, "jumps": list(jumps.indices), "session": session.metadata},
    )


def series1_corpus(size: int = 600, seed: int = 0) -> dict[str, Image]:
    return {f"density-{t:g}": gen_random(size, size, seed, t) for t in SERIES1_THRESHOLDS}


def extremes_hold(reference: analysis.RankedSet, other: analysis.RankedSet) -> bool:
    """The reference's top two never come last and its bottom two never come first in ``other``."""
    ref = reference.order
    order = other.order
    return order[-1] not in ref[:2] and order[0] not in ref[-2:]


def series1(runs: int = 30, seed: int = 0, size: int = 600, sessions: int = 2, **_) -> Verdict:
    images = series1_corpus(size, seed)
    blobs = None
    rankings = []
    for k in range(sessions):
        blobs, session = time_corpus(images, Protocol(n_runs=runs, shuffle_seed=seed + k), blobs=blobs)
        rankings.append(analysis.rank(((s.image_id, s.mean) for s in session.stats), "D"))
    rhos = [analysis.rank_correlation(rankings[0], r).rho for r in rankings[1:]]
    extremes = all(extremes_hold(rankings[0], r) for r in rankings[1:])
    ok = min(rhos) >= 0.9 and extremes
    lines = [f"session {k}: {' > '.join(r.order)}" for k, r in enumerate(rankings)]
    lines.append(f"Spearman rho vs session 0: {', '.join(f'{r:.3f}' for r in rhos)}; extremes kept: {extremes}")
    return Verdict(
        "series1", ok, "rho >= 0.9 between sessions and extremes never swap halves", lines,
        {"rankings": [r.order for r in rankings], "rho": rhos, "extremes": extremes,
         "K_bits": {k: b.bit_length for k, b in blobs.items()}},
    )


def inversion_check(images: dict[str, Image], runs: int = 30, seed: int = 0, sessions: int = 10) -> dict:
    """K and D-group agreement between each image and its inverse across repeated sessions."""
    corpus = {}
    for k, im in images.items():
        corpus[k] = im
        corpus[f"{k}-inv"] = invert(im)
    blobs = {k: compress(v) for k, v in corpus.items()}
    k_rel = {k: abs(blobs[k].bit_length - blobs[f"{k}-inv"].bit_length) / blobs[k].bit_length for k in images}
    together = {k: 0 for k in images}
    for s in range(sessions):
        _, session = time_corpus(corpus, Protocol(n_runs=runs, shuffle_seed=seed + s), blobs=blobs)
        groups = analysis.partition_significant(session.stats).group_of()
        for k in images:
            together[k] += groups[k] == groups[f"{k}-inv"]
    return {"k_rel": k_rel, "together": together, "sessions": sessions}


def series2(runs: int = 30, seed: int = 0, size: int = 600, sessions: int = 10, **_) -> Verdict:
    side = _rule30_side(size)
    base = gen_rule30(side, side)
    images = {
        "rule30": base,
        "superposed": superpose_rotated(base),
        "noisy": dict(generate_series(SeriesSpec("rule30_family", side, side, seed, name="r30")))["r30-noisy"],
    }
    res = inversion_check(images, runs, seed, sessions)
    k_ok = all(v <= 0.01 for v in res["k_rel"].values())
    g_ok = all(c >= 0.9 * sessions for c in res["together"].values())
    lines = [
        f"{k}: K differs by {100 * res['k_rel'][k]:.3f}%, same group in {res['together'][k]}/{sessions} sessions"
        for k in images
    ]
    return Verdict(
        "series2", k_ok and g_ok, "image and inverse within 1% in K and same D group in >= 90% of sessions",
        lines, res,
    )


def mixed_corpus(size: int = 600, seed: int = 0) -> dict[str, Image]:
    """Uniform, random, rule 30 (plain and superposed), photo-like and tiled blobs, mid line image."""
    side = _rule30_side(size)
    r30 = gen_rule30(side, side)
    quarter = max(size // 4, 1)
    lines = SeriesSpec("line_series", size, size, seed, 100)
    mid = None
    for i, im in enumerate(iter_line_series(lines)):
        if i == lines.count // 2:
            mid = im
            break
    return {
        "uniform": gen_uniform(size, size),
        "random": gen_random(size, size, seed, 0.5),
        "rule30": r30,
        "superposed": superpose_rotated(r30),
        "tiled-x1": gen_blobs(size, size, seed),
        "tiled-x4": tile(gen_blobs(quarter, quarter, seed), 4) if size % 4 == 0 else gen_blobs(size, size, seed + 1),
        "line-mid": mid,
    }


def signature(runs: int = 30, seed: int = 0, size: int = 600, **_) -> Verdict:
    images = mixed_corpus(size, seed)
    blobs, session = time_corpus(images, Protocol(n_runs=runs, shuffle_seed=seed))
    k_rank = analysis.rank(((k, b.bit_length) for k, b in blobs.items()), "K")
    part = analysis.partition_significant(session.stats)
    labels = [g.label for g in part.groups]
    g = part.group_of()
    rnd = labels.index(g["random"])
    top2 = "random" in k_rank.order[:2]
    below = all(labels.index(g[s]) < rnd for s in STRUCTURED)
    lines = [
        f"K order: {' > '.join(k_rank.order)}",
        "D groups: " + "; ".join(f"{gr.label}={','.join(gr.members)}" for gr in part.groups),
    ]
    return Verdict(
        "signature", top2 and below, "random in top 2 by K and in a lower D group than every structured image",
        lines, {"K_order": k_rank.order, "groups": {gr.label: list(gr.members) for gr in part.groups},
                "stats": [s.to_dict() for s in session.stats]},
    )


def isolation(runs: int = 30, seed: int = 0, size: int = 600, copies: int = 2, **_) -> Verdict:
    """Interleave every image at one and two verification rounds; the timed means must not move.

    Each arm holds ``copies`` interleaved copies of every blob; an image's
    shift is the difference of its arm averages, and the verdict compares
    the mean shift over all images with the pooled standard error.
    """
    images = {**mixed_corpus(size, seed), **series1_corpus(size, seed)}
    spec = SeriesSpec("line_series", size, size, seed, 100, name="lines")
    for i, im in enumerate(iter_line_series(spec)):
        if i % 10 == 5:
            images[f"lines-{i:03d}"] = im
    base = {k: compress(v) for k, v in images.items()}
    blobs, rounds = {}, []
    for r in (1, 2):
        for c in range(copies):
            for k, b in base.items():
                blobs[f"{k}@{r}.{c}"] = b
                rounds.append(r)
    _, session = time_corpus({}, Protocol(n_runs=runs, shuffle_seed=seed), blobs=blobs, verify_rounds=rounds)
    by_id = session.by_id()

    def arm(k, r):
        return np.mean([by_id[f"{k}@{r}.{c}"].mean for c in range(copies)])

    deltas = np.array([arm(k, 2) - arm(k, 1) for k in images])
    se = pooled_se(session.stats)
    shift = float(deltas.mean())
    ok = abs(shift) < se
    return Verdict(
        "isolation", ok, "doubling verification moves the mean D by < 1 pooled SE",
        [f"mean shift {shift * 1e6:+.2f} us vs pooled SE {se * 1e6:.2f} us over {len(images)} images "
         f"x {copies} copies per arm"],
        {"deltas": deltas.tolist(), "pooled_se": se, "shift": shift, "images": list(images)},
    )


REPRODUCIBLE: dict[str, Callable[..., Verdict]] = {
    "size_scaling": size_scaling,
    "block_series_toy": block_series_toy,
    "block_series_png": block_series_png,
    "line_series": line_series,
    "series1": series1,
    "series2": series2,
    "signature": signature,
    "isolation": isolation,
}


def reproduce(test_id: str, **kwargs) -> Verdict:
    try:
        fn = REPRODUCIBLE[test_id]
    except KeyError:
        raise ParameterError(f"unknown test id {test_id!r}; expected one of {sorted(REPRODUCIBLE)}") from None
    return fn(**kwargs)
