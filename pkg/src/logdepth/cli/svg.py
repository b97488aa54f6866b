"""Minimal static SVG charts: bars with error bars, scatter, rank mapping, line plot."""
from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 720, 420
MARGIN = dict(left=70, right=20, top=40, bottom=110)
PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c")


def _doc(body: list[str], width=WIDTH, height=HEIGHT) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>"]) + "\n"


def _text(x, y, s, anchor="middle", size=11, rotate=None, weight="normal") -> str:
    tr = f' transform="rotate({rotate} {x:.1f} {y:.1f})"' if rotate is not None else ""
    return (
        f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}" font-size="{size}" '
        f'font-weight="{weight}"{tr}>{escape(str(s))}</text>'
    )


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    mag = 10 ** len(str(int(v))) / 10 if v >= 1 else 1.0
    for step in (1, 2, 2.5, 5, 10):
        if v <= step * mag:
            return step * mag
    return v


def _axes(title, xlabel, ylabel, y_max, y_min=0.0) -> tuple[list[str], callable]:
    left, top = MARGIN["left"], MARGIN["top"]
    w = WIDTH - left - MARGIN["right"]
    h = HEIGHT - top - MARGIN["bottom"]
    span = (y_max - y_min) or 1.0

    def ymap(v):
        return top + h - (v - y_min) / span * h

    out = [_text(WIDTH / 2, 22, title, size=14, weight="bold")]
    out.append(f'<line x1="{left}" y1="{top + h}" x2="{left + w}" y2="{top + h}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + h}" stroke="black"/>')
    for k in range(6):
        v = y_min + span * k / 5
        y = ymap(v)
        out.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        out.append(_text(left - 6, y + 4, f"{v:.4g}", anchor="end", size=10))
    out.append(_text(16, top + h / 2, ylabel, rotate=-90))
    out.append(_text(left + w / 2, HEIGHT - 8, xlabel))
    return out, ymap


def bar_chart(labels: Sequence[str], values: Sequence[float], errors: Sequence[float] | None = None,
              title: str = "", ylabel: str = "", colors: Sequence[str] | None = None) -> str:
    tops = [v + (errors[i] if errors else 0) for i, v in enumerate(values)]
    y_max = _nice_max(max(tops, default=1.0))
    body, ymap = _axes(title, "", ylabel, y_max)
    left = MARGIN["left"]
    w = WIDTH - left - MARGIN["right"]
    n = max(len(values), 1)
    slot = w / n
    bar = slot * 0.7
    base = ymap(0)
    for i, (lab, v) in enumerate(zip(labels, values)):
        x = left + i * slot + (slot - bar) / 2
        y = ymap(v)
        fill = colors[i] if colors else PALETTE[0]
        body.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar:.1f}" height="{base - y:.1f}" fill="{fill}"/>')
        if errors:
            cx = x + bar / 2
            y0, y1 = ymap(max(v - errors[i], 0)), ymap(v + errors[i])
            body.append(f'<line x1="{cx:.1f}" y1="{y0:.1f}" x2="{cx:.1f}" y2="{y1:.1f}" stroke="black"/>')
            for yy in (y0, y1):
                body.append(f'<line x1="{cx - 3:.1f}" y1="{yy:.1f}" x2="{cx + 3:.1f}" y2="{yy:.1f}" stroke="black"/>')
        if n <= 60:
            body.append(_text(x + bar / 2, base + 10, lab, anchor="end", size=9, rotate=-60))
    return _doc(body)


def scatter(xs: Sequence[float], ys: Sequence[float], labels: Sequence[str] = (), title: str = "",
            xlabel: str = "", ylabel: str = "", yerr: Sequence[float] | None = None) -> str:
    y_max = _nice_max(max((y + (yerr[i] if yerr else 0) for i, y in enumerate(ys)), default=1.0))
    x_max = _nice_max(max(xs, default=1.0))
    body, ymap = _axes(title, xlabel, ylabel, y_max)
    left = MARGIN["left"]
    w = WIDTH - left - MARGIN["right"]
    base = ymap(0)

    def xmap(v):
        return left + v / x_max * w

    for k in range(6):
        v = x_max * k / 5
        body.append(_text(xmap(v), base + 14, f"{v:.4g}", size=10))
    for i, (x, y) in enumerate(zip(xs, ys)):
        cx, cy = xmap(x), ymap(y)
        if yerr:
            body.append(
                f'<line x1="{cx:.1f}" y1="{ymap(max(y - yerr[i], 0)):.1f}" x2="{cx:.1f}" '
                f'y2="{ymap(y + yerr[i]):.1f}" stroke="#888"/>'
            )
        body.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="3.5" fill="{PALETTE[0]}"/>')
        if labels and len(xs) <= 40:
            body.append(_text(cx + 5, cy - 5, labels[i], anchor="start", size=9))
    return _doc(body)


def line_plot(xs: Sequence[float], ys: Sequence[float], title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    y_max = _nice_max(max(ys, default=1.0))
    body, ymap = _axes(title, xlabel, ylabel, y_max)
    left = MARGIN["left"]
    w = WIDTH - left - MARGIN["right"]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0, 1)
    span = (x_hi - x_lo) or 1

    def xmap(v):
        return left + (v - x_lo) / span * w

    for k in range(6):
        v = x_lo + span * k / 5
        body.append(_text(xmap(v), ymap(0) + 14, f"{v:.4g}", size=10))
    pts = " ".join(f"{xmap(x):.1f},{ymap(y):.1f}" for x, y in zip(xs, ys))
    body.append(f'<polyline points="{pts}" fill="none" stroke="{PALETTE[0]}" stroke-width="1.5"/>')
    return _doc(body)


def rank_mapping(left_order: Sequence[str], right_order: Sequence[str], groups: dict | None = None,
                 title: str = "", left_title: str = "K rank", right_title: str = "D rank") -> str:
    """Two ranked columns with a line joining each image's two positions."""
    n = len(left_order)
    row = 16
    height = max(HEIGHT, 80 + n * row)
    xl, xr = 230, WIDTH - 230
    body = [_text(WIDTH / 2, 22, title, size=14, weight="bold"),
            _text(xl, 50, left_title, weight="bold"), _text(xr, 50, right_title, weight="bold")]
    pos = {k: i for i, k in enumerate(right_order)}
    labels = sorted(set((groups or {}).values()))
    color = {g: PALETTE[i % len(PALETTE)] for i, g in enumerate(labels)}
    for i, k in enumerate(left_order):
        y0 = 70 + i * row
        y1 = 70 + pos[k] * row
        c = color.get((groups or {}).get(k), PALETTE[0])
        body.append(f'<line x1="{xl + 4}" y1="{y0 - 4}" x2="{xr - 4}" y2="{y1 - 4}" stroke="{c}"/>')
        body.append(_text(xl - 4, y0, f"{i + 1}. {k}", anchor="end", size=10))
    for j, k in enumerate(right_order):
        g = (groups or {}).get(k)
        suffix = f" [{g}]" if g else ""
        body.append(_text(xr + 4, 70 + j * row, f"{j + 1}. {k}{suffix}", anchor="start", size=10))
    return _doc(body, height=height)
