"""Report bundles: rankings, partition and correlation, with their JSON, CSV and SVG forms."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .. import analysis
from ..errors import DataError, ParameterError
from ..timing import TimingStats, samples_from_stats, stabilization_curve
from . import svg

CSV_FIELDS = ("image_id", "k_bits", "d_mean_us", "d_std_us", "n_runs", "k_rank", "d_rank", "d_group")
PLOTS = ("k_ranking.svg", "d_ranking.svg", "k_to_d.svg", "k_vs_d.svg", "stabilization.svg")


@dataclass
class ReportBundle:
    k_ranking: analysis.RankedSet
    d_ranking: analysis.RankedSet
    partition: analysis.GroupPartition
    correlation: analysis.Correlation | None
    session_metadata: dict
    records: list
    stats: list


def build_bundle(k_bits: dict, stats: list[TimingStats], metadata: dict | None = None) -> ReportBundle:
    ids = {s.image_id for s in stats}
    if set(k_bits) != ids:
        missing = sorted(ids.symmetric_difference(k_bits))
        raise DataError(f"K and D records cover different images: {missing[:5]}")
    k_rank = analysis.rank(k_bits.items(), "K")
    d_rank = analysis.rank(((s.image_id, s.mean) for s in stats), "D")
    part = analysis.partition_significant(stats)
    corr = analysis.rank_correlation(k_rank, d_rank, part) if len(stats) >= 2 else None
    kr, dr, grp = k_rank.rank_of(), d_rank.rank_of(), part.group_of()
    by_id = {s.image_id: s for s in stats}
    records = [
        {
            "image_id": i,
            "k_bits": int(k_bits[i]),
            "d_mean_us": by_id[i].mean * 1e6,
            "d_std_us": by_id[i].std * 1e6,
            "n_runs": by_id[i].n_runs,
            "k_rank": kr[i],
            "d_rank": dr[i],
            "d_group": grp[i],
        }
        for i in d_rank.order
    ]
    return ReportBundle(k_rank, d_rank, part, corr, dict(metadata or {}), records, list(stats))


def bundle_json(b: ReportBundle) -> dict:
    c = b.correlation
    return {
        "records": b.records,
        "k_ranking": b.k_ranking.order,
        "d_ranking": b.d_ranking.order,
        "tie_policy": b.d_ranking.tie_policy,
        "groups": [
            {"label": g.label, "members": list(g.members), "mean_us": g.mean * 1e6, "std_us": g.std * 1e6}
            for g in b.partition.groups
        ],
        "spearman": None if c is None else {"rho": _finite(c.rho), "pvalue": _finite(c.pvalue), "n": c.n},
        "session": b.session_metadata,
    }


def _finite(x):
    return x if x is not None and math.isfinite(x) else None


def write_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for r in records:
            w.writerow({k: (f"{r[k]:.3f}" if isinstance(r[k], float) else r[k]) for k in CSV_FIELDS})


def plots(b: ReportBundle) -> dict[str, str]:
    k_vals = b.k_ranking.values()
    d = {s.image_id: s for s in b.stats}
    groups = b.partition.group_of()
    colors = {g.label: svg.PALETTE[i % len(svg.PALETTE)] for i, g in enumerate(b.partition.groups)}
    d_order = b.d_ranking.order
    out = {
        "k_ranking.svg": svg.bar_chart(
            b.k_ranking.order, [k_vals[i] for i in b.k_ranking.order],
            title="Compressed length (K) ranking", ylabel="bits",
        ),
        "d_ranking.svg": svg.bar_chart(
            d_order, [d[i].mean * 1e6 for i in d_order], [d[i].std * 1e6 for i in d_order],
            title="Decompression time (D) ranking, mean and std", ylabel="microseconds",
            colors=[colors[groups[i]] for i in d_order],
        ),
        "k_to_d.svg": svg.rank_mapping(b.k_ranking.order, d_order, groups, title="K rank to D rank"),
        "k_vs_d.svg": svg.scatter(
            [k_vals[i] for i in d_order], [d[i].mean * 1e6 for i in d_order], d_order,
            title="Decompression time against compressed length", xlabel="K (bits)", ylabel="D (microseconds)",
            yerr=[d[i].std * 1e6 for i in d_order],
        ),
    }
    try:
        curve = stabilization_curve(samples_from_stats(b.stats))
    except ParameterError:
        curve = []
    out["stabilization.svg"] = svg.line_plot(
        [k for k, _ in curve], [v for _, v in curve],
        title="Stabilization: largest relative shift of a running mean", xlabel="runs", ylabel="relative shift",
    )
    return out


def write_bundle(directory, b: ReportBundle) -> list[str]:
    """Write report.json, report.csv and the plots; return the file names written."""
    directory = Path(directory)
    (directory / "report.json").write_text(json.dumps(bundle_json(b), indent=2) + "\n")
    write_csv(directory / "report.csv", b.records)
    written = ["report.json", "report.csv"]
    for name, text in plots(b).items():
        (directory / name).write_text(text)
        written.append(name)
    return written


def summary_lines(b: ReportBundle) -> list[str]:
    lines = [f"{'image':<28}{'K bits':>10}{'D us':>10}{'std':>8}  group"]
    for r in b.records:
        lines.append(
            f"{r['image_id']:<28}{r['k_bits']:>10}{r['d_mean_us']:>10.1f}{r['d_std_us']:>8.1f}  {r['d_group']}"
        )
    if b.correlation is not None:
        lines.append(f"Spearman rho(K, D) = {b.correlation.rho:.3f} over {b.correlation.n} images")
    return lines
