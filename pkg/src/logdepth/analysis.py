"""Rankings, significant-group partitions, jump selection and multi-codec aggregation."""
from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .errors import DataError, ParameterError
from .timing import TimingStats


@dataclass(frozen=True)
class RankEntry:
    image_id: str
    value: float
    rank: int
    tied: bool = False


@dataclass(frozen=True)
class RankedSet:
    """Descending order; equal values are ordered by image id and flagged ``tied``."""

    measure: str
    entries: tuple
    tie_policy: str = "descending value, ties by ascending image id"

    @property
    def order(self) -> list[str]:
        return [e.image_id for e in self.entries]

    def rank_of(self) -> dict[str, int]:
        return {e.image_id: e.rank for e in self.entries}

    def values(self) -> dict[str, float]:
        return {e.image_id: e.value for e in self.entries}


def rank(values: Iterable[tuple[str, float]], measure: str = "K") -> RankedSet:
    items = [(str(i), float(v)) for i, v in values]
    if not items:
        raise ParameterError("cannot rank an empty set")
    if measure not in ("K", "D"):
        raise ParameterError(f"measure must be 'K' or 'D', got {measure!r}")
    for i, v in items:
        if not math.isfinite(v):
            raise DataError(f"non-finite value for {i}: {v}")
    if len({i for i, _ in items}) != len(items):
        raise ParameterError("duplicate image ids")
    items.sort(key=lambda t: (-t[1], t[0]))
    counts: dict[float, int] = {}
    for _, v in items:
        counts[v] = counts.get(v, 0) + 1
    entries = tuple(
        RankEntry(i, v, r, counts[v] > 1) for r, (i, v) in enumerate(items, start=1)
    )
    return RankedSet(measure, entries)


def group_label(index: int) -> str:
    """A, B, ..., Z, then AA, AB, ..."""
    letters = string.ascii_uppercase
    label = ""
    index += 1
    while index:
        index, rem = divmod(index - 1, 26)
        label = letters[rem] + label
    return label


@dataclass(frozen=True)
class Group:
    label: str
    members: tuple
    mean: float
    std: float


@dataclass(frozen=True)
class GroupPartition:
    groups: tuple

    def group_of(self) -> dict[str, str]:
        return {m: g.label for g in self.groups for m in g.members}

    def is_valid(self) -> bool:
        return not non_overlap_violations(self)


def pooled(stats: Sequence[TimingStats]) -> tuple[float, float]:
    """Mean and std of the union of the members' (trimmed) samples, from their summaries."""
    n = np.array([s.n_kept for s in stats], dtype=float)
    m = np.array([s.mean for s in stats])
    v = np.array([s.std for s in stats]) ** 2
    total = n.sum()
    mean = float((n * m).sum() / total)
    if total <= 1:
        return mean, 0.0
    ss = ((n - 1) * v).sum() + (n * (m - mean) ** 2).sum()
    return mean, float(math.sqrt(max(ss, 0.0) / (total - 1)))


def non_overlap_violations(partition: GroupPartition) -> list[tuple[str, str]]:
    """Pairs of groups (i above j) breaking ``mean_i - std_i > mean_j + std_j``."""
    bad = []
    gs = partition.groups
    for i in range(len(gs)):
        for j in range(i + 1, len(gs)):
            if not gs[i].mean - gs[i].std > gs[j].mean + gs[j].std:
                bad.append((gs[i].label, gs[j].label))
    return bad


def partition_significant(stats: Sequence[TimingStats]) -> GroupPartition:
    """Split images into groups whose mean +/- std intervals do not overlap.

    Images whose own intervals overlap, directly or through a chain of
    overlaps, always share a group: a sweep by descending upper bound
    yields these clusters. Any two groups whose pooled intervals still
    overlap are then merged, together with everything between them,
    until every pair of groups is separated.
    """
    if not stats:
        raise ParameterError("cannot partition an empty set")
    for s in stats:
        if s.n_runs < 2:
            raise ParameterError(f"{s.image_id}: need n_runs >= 2, got {s.n_runs}")
    by_top = sorted(stats, key=lambda s: (-(s.mean + s.std), s.image_id))
    raw: list[list[TimingStats]] = [[by_top[0]]]
    low = by_top[0].mean - by_top[0].std
    for s in by_top[1:]:
        if s.mean + s.std >= low:
            raw[-1].append(s)
            low = min(low, s.mean - s.std)
        else:
            raw.append([s])
            low = s.mean - s.std
    merged = True
    while merged and len(raw) > 1:
        merged = False
        summaries = [pooled(g) for g in raw]
        for i in range(len(raw)):
            # widest violating span first so one pass settles group i
            m_i, s_i = summaries[i]
            bad = [j for j in range(i + 1, len(raw)) if not m_i - s_i > summaries[j][0] + summaries[j][1]]
            if bad:
                j = max(bad)
                raw[i : j + 1] = [[m for g in raw[i : j + 1] for m in g]]
                merged = True
                break
    groups = []
    for idx, members in enumerate(raw):
        members = sorted(members, key=lambda s: (-s.mean, s.image_id))
        mean, std = pooled(members)
        groups.append(Group(group_label(idx), tuple(m.image_id for m in members), mean, std))
    return GroupPartition(tuple(groups))


@dataclass(frozen=True)
class JumpSelection:
    indices: tuple
    spread_in_sigma: float
    sigma: float
    min_gap: float
    degenerate: bool = False


def _best_subset(values: np.ndarray, k: int) -> tuple[float, list[int]]:
    """Choose k of the sorted values maximising the smallest adjacent gap.

    Ties keep the largest final position and then the lowest earlier ones.
    """
    n = values.size
    if k == 1:
        return math.inf, [0]
    neg = -math.inf
    best = np.full((k + 1, n), neg)
    parent = np.full((k + 1, n), -1, dtype=np.int64)
    best[1, :] = math.inf
    for j in range(2, k + 1):
        for i in range(j - 1, n):
            gaps = values[i] - values[: i]
            cand = np.minimum(best[j - 1, :i], gaps)
            p = int(np.argmax(cand))
            best[j, i] = cand[p]
            parent[j, i] = p
    last = best[k][::-1]
    end = n - 1 - int(np.argmax(last))
    path = [end]
    for j in range(k, 1, -1):
        path.append(int(parent[j, path[-1]]))
    return float(best[k, end]), path[::-1]


def select_jumps(series: Sequence[TimingStats], k: int, separation: float = 2.0) -> JumpSelection:
    """Pick k images whose depths are pairwise as far apart as possible.

    ``spread_in_sigma`` is ``(max D - min D) / sigma`` with ``sigma`` the
    pooled within-image standard deviation. Selected depths must differ
    pairwise by more than ``separation * sigma``; when k such images do
    not exist the largest achievable selection is returned with
    ``degenerate=True``. Indices refer to positions in ``series`` and are
    returned in increasing order.
    """
    n = len(series)
    if k < 1 or k > n:
        raise ParameterError(f"k must lie in [1, {n}], got {k}")
    d = np.array([s.mean for s in series])
    n_kept = np.array([s.n_kept for s in series], dtype=float)
    var = np.array([s.std for s in series]) ** 2
    dof = (n_kept - 1).sum()
    sigma = float(math.sqrt(((n_kept - 1) * var).sum() / dof)) if dof > 0 else 0.0
    spread = float(d.max() - d.min())
    spread_sigma = spread / sigma if sigma > 0 else math.inf
    order = np.argsort(d, kind="stable")
    sorted_d = d[order]
    threshold = separation * sigma
    degenerate = False
    for kk in range(k, 0, -1):
        gap, pos = _best_subset(sorted_d, kk)
        if kk == 1 or gap > threshold:
            break
        degenerate = True
    idx = tuple(sorted(int(order[p]) for p in pos))
    return JumpSelection(idx, spread_sigma, sigma, gap, degenerate)


@dataclass(frozen=True)
class Correlation:
    rho: float
    pvalue: float
    n: int
    mapping: tuple = field(default=())


def rank_correlation(r1: RankedSet, r2: RankedSet, partition: GroupPartition | None = None) -> Correlation:
    """Spearman coefficient between two rankings of the same images (average ranks on ties).

    With a partition, ``mapping`` lists ``(rank in r1, image id, group)``
    rows in r1 order.
    """
    v1, v2 = r1.values(), r2.values()
    if set(v1) != set(v2):
        raise ParameterError("rankings cover different image sets")
    ids = sorted(v1)
    if len(ids) < 2:
        raise ParameterError("need at least two images to correlate")
    a = np.array([v1[i] for i in ids])
    b = np.array([v2[i] for i in ids])
    if np.all(a == a[0]) or np.all(b == b[0]):
        rho, p = float("nan"), float("nan")
    else:
        res = sps.spearmanr(a, b)
        rho, p = float(res.statistic), float(res.pvalue)
    mapping = ()
    if partition is not None:
        groups = partition.group_of()
        mapping = tuple((e.rank, e.image_id, groups.get(e.image_id, "")) for e in r1.entries)
    return Correlation(rho, p, len(ids), mapping)


@dataclass(frozen=True)
class DepthMatrix:
    """Decompression times: one row per codec, one column per image."""

    codecs: tuple
    images: tuple
    cells: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cells, dtype=float)
        if c.shape != (len(self.codecs), len(self.images)):
            raise DataError(f"cells shape {c.shape} != ({len(self.codecs)}, {len(self.images)})")
        if not np.all(np.isfinite(c)):
            raise DataError("depth matrix has missing or non-finite cells")
        if np.any(c < 0):
            raise DataError("depth matrix has negative cells")
        object.__setattr__(self, "cells", c)


@dataclass(frozen=True)
class Aggregate:
    partial_order: frozenset
    total_order: tuple
    harmonic_means: dict


def aggregate_depth(matrix: DepthMatrix) -> Aggregate:
    """Unanimous partial order over images plus a harmonic-mean total order.

    ``(h, k)`` is in the partial order iff every codec times h strictly
    above k. The total order sorts by the harmonic mean of per-codec
    times, descending, ties by image id.
    """
    c = matrix.cells
    if np.any(c <= 0):
        raise DataError("harmonic mean needs strictly positive cells")
    ids = list(matrix.images)
    hm = sps.hmean(c, axis=0)
    partial = set()
    for h in range(len(ids)):
        for k in range(len(ids)):
            if h != k and np.all(c[:, h] > c[:, k]):
                partial.add((ids[h], ids[k]))
    total = tuple(sorted(ids, key=lambda i: (-hm[ids.index(i)], i)))
    return Aggregate(frozenset(partial), total, {i: float(hm[n]) for n, i in enumerate(ids)})


def stats_summary(stats_by_series: Mapping[str, Sequence[TimingStats]]) -> list[tuple[str, float]]:
    """Pooled within-image standard deviation per series, largest first."""
    if not stats_by_series:
        raise ParameterError("need at least one series")
    rows = []
    for name, stats in stats_by_series.items():
        n = np.array([s.n_kept for s in stats], dtype=float)
        v = np.array([s.std for s in stats]) ** 2
        dof = (n - 1).sum()
        rows.append((name, float(math.sqrt(((n - 1) * v).sum() / dof)) if dof > 0 else 0.0))
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


def linear_fit(x, y) -> LinearFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ParameterError("a linear fit needs at least two points")
    res = sps.linregress(x, y)
    return LinearFit(float(res.slope), float(res.intercept), float(res.rvalue**2))
