"""Dependency-free SVG emitters: shape galleries and summary line charts.

Output is deterministic text (fixed number formatting, sorted inputs), so
identical inputs give byte-identical files.
"""
from __future__ import annotations

import math
from collections import defaultdict
from xml.sax.saxutils import escape

import numpy as np

from .experiments import DIVERSITY_KEYS

CHART_METRICS = DIVERSITY_KEYS + ("fitness_median",)
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _num(v) -> str:
    return f"{float(v):.6g}"


def shade(error, scale) -> str:
    """Green whose brightness falls with pixel error; error 0 is pure #00ff00."""
    t = 1.0 - min(float(error) / scale, 1.0) if scale > 0 else 1.0
    return f"#00{int(round(48 + 207 * t)):02x}00"


def _bitmap_path(bitmap, x0, y0, px) -> str:
    """Horizontal pixel runs as one path; bitmap row 0 is the bottom row."""
    b = np.asarray(bitmap, dtype=bool)
    n = b.shape[0]
    parts = []
    for row in range(n):
        line = b[row]
        if not line.any():
            continue
        edges = np.flatnonzero(np.diff(np.concatenate([[0], line.astype(np.int8), [0]])))
        y = y0 + (n - 1 - row) * px
        for start, stop in zip(edges[0::2], edges[1::2]):
            parts.append(f"M{_num(x0 + start * px)} {_num(y)}h{_num((stop - start) * px)}"
                         f"v{_num(px)}h{_num(-(stop - start) * px)}z")
    return "".join(parts)


def gallery_svg(bitmaps, errors, columns: int | None = None, cell: int = 64,
                title: str = "") -> str:
    """Grid of shapes shaded by Pareto pixel error (brightest = closest).

    ``columns`` defaults to ``ceil(sqrt(n))``, so 400 shapes give 20 x 20.
    """
    bitmaps = np.asarray(bitmaps, dtype=bool)
    errors = np.asarray(errors, dtype=float)
    n = len(bitmaps)
    if n == 0:
        raise ValueError("no shapes to draw")
    if len(errors) != n:
        raise ValueError("need one error per shape")
    cols = columns or math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    scale = float(errors.max())
    px = cell / bitmaps.shape[1]
    head = 20 if title else 0
    width, height = cols * cell, rows * cell + head
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" data-rows="{rows}" data-columns="{cols}">',
        f'<rect width="{width}" height="{height}" fill="#101010"/>',
    ]
    if title:
        out.append(f'<text x="4" y="15" fill="#ffffff" font-family="sans-serif" '
                   f'font-size="12">{escape(title)}</text>')
    for i in range(n):
        x0, y0 = (i % cols) * cell, head + (i // cols) * cell
        out.append(f'<g data-index="{i}" data-error="{int(errors[i])}">'
                   f'<rect x="{x0}" y="{y0}" width="{cell}" height="{cell}" fill="none" '
                   f'stroke="#303030"/>'
                   f'<path fill="{shade(errors[i], scale)}" d="{_bitmap_path(bitmaps[i], x0, y0, px)}"/>'
                   f'</g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_chart_svg(title: str, xlabels, series: dict, ylabel: str = "",
                   width: int = 480, height: int = 320) -> str:
    """Line chart with a min-max band per series.

    ``series`` maps a name to ``(median, low, high)`` sequences aligned with
    ``xlabels``; missing points are NaN and skipped.
    """
    left, right, top, bottom = 60, 120, 30, 40
    pw, ph = width - left - right, height - top - bottom
    values = [v for m, lo, hi in series.values() for v in (*lo, *hi, *m) if np.isfinite(v)]
    if not values:
        raise ValueError("chart has no data")
    ymin, ymax = min(values), max(values)
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    nx = len(xlabels)

    def sx(i):
        return left + (pw * (i + 0.5) / nx)

    def sy(v):
        return top + ph * (1.0 - (v - ymin) / (ymax - ymin))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{left}" y="18" font-size="13">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="#000"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="#000"/>',
        f'<text x="{left - 4}" y="{_num(sy(ymax) + 4)}" text-anchor="end">{_num(ymax)}</text>',
        f'<text x="{left - 4}" y="{_num(sy(ymin) + 4)}" text-anchor="end">{_num(ymin)}</text>',
    ]
    if ylabel:
        out.append(f'<text x="12" y="{top + ph / 2}" transform="rotate(-90 12 {top + ph / 2})" '
                   f'text-anchor="middle">{escape(ylabel)}</text>')
    for i, label in enumerate(xlabels):
        out.append(f'<text x="{_num(sx(i))}" y="{top + ph + 16}" text-anchor="middle">'
                   f'{escape(str(label))}</text>')
    for k, (name, (med, lo, hi)) in enumerate(series.items()):
        color = _PALETTE[k % len(_PALETTE)]
        idx = [i for i in range(nx) if np.isfinite(med[i])]
        if not idx:
            continue
        band = [f"{_num(sx(i))},{_num(sy(hi[i]))}" for i in idx]
        band += [f"{_num(sx(i))},{_num(sy(lo[i]))}" for i in reversed(idx)]
        out.append(f'<g data-series="{escape(name)}">')
        out.append(f'<polygon points="{" ".join(band)}" fill="{color}" fill-opacity="0.15" '
                   f'stroke="none"/>')
        line = " ".join(f"{_num(sx(i))},{_num(sy(med[i]))}" for i in idx)
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        for i in idx:
            out.append(f'<circle cx="{_num(sx(i))}" cy="{_num(sy(med[i]))}" r="3" fill="{color}" '
                       f'data-x="{escape(str(xlabels[i]))}" data-value="{med[i]!r}" '
                       f'data-low="{lo[i]!r}" data-high="{hi[i]!r}"/>')
        out.append("</g>")
        out.append(f'<text x="{left + pw + 8}" y="{top + 14 * (k + 1)}" fill="{color}">'
                   f'{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def summarize(rows, metric: str, xkey: str):
    """Median, min and max over seeds of ``metric`` per (algorithm, x)."""
    groups = defaultdict(list)
    for r in rows:
        groups[(r["algorithm"], r[xkey])].append(float(r[metric]))
    xs = sorted({x for _, x in groups})
    algs = sorted({a for a, _ in groups})
    series = {}
    for a in algs:
        stats = [groups.get((a, x)) for x in xs]
        series[a] = tuple(
            [float(fn(v)) if v else float("nan") for v in stats]
            for fn in (np.median, np.min, np.max)
        )
    return xs, series


def study_charts(rows) -> dict[str, str]:
    """One chart per metric and study: ``{"<study>_<metric>.svg": svg}``."""
    if not rows:
        raise ValueError("results are empty")
    charts = {}
    for study in sorted({r["study"] for r in rows}):
        sub = [r for r in rows if r["study"] == study]
        xkey = "bins" if study == "bin_sweep" else "case"
        for metric in CHART_METRICS:
            xs, series = summarize(sub, metric, xkey)
            charts[f"{study}_{metric}.svg"] = line_chart_svg(
                f"{study}: {metric}", xs, series, ylabel=metric)
    return charts
