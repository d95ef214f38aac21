"""Self-contained SVG charts: heatmaps, frontier scatter plots and frontier overlays.

Every chart uses a fixed 960x720 viewBox and writes coordinates with two
decimals so the output is byte-stable.
"""

from __future__ import annotations

from html import escape
from typing import Optional, Sequence

import numpy as np

from .frontier import FrontierPoint, point_metric
from .sweep import SweepResult

WIDTH, HEIGHT = 960, 720
# ColorBrewer YlGnBu, 9 classes
PALETTE = (
    "#ffffd9", "#edf8b1", "#c7e9b4", "#7fcdbb", "#41b6c4",
    "#1d91c0", "#225ea8", "#253494", "#081d58",
)
SERIES_COLORS = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02")
PERCENT_METRICS = {"tp", "fp", "fn", "tn", "review_load", "review_fraction"}
METRIC_TITLES = {
    "tp": "Expected true positives (%)",
    "fp": "Expected false positives (%)",
    "fn": "Expected false negatives (%)",
    "tn": "Expected true negatives (%)",
    "review_load": "Expected human review load (%)",
    "review_fraction": "Human review load (%)",
    "f1": "Expected F1",
    "precision": "Expected precision",
    "recall": "Expected recall",
    "accuracy": "Expected accuracy",
}


def _f(x: float) -> str:
    return f"{x:.2f}"


def _label(value: float, metric: str) -> str:
    if metric in PERCENT_METRICS:
        return f"{100.0 * value:.1f}%"
    return f"{value:.3f}"


def _open(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="13">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.0f}" y="30" text-anchor="middle" font-size="18">{escape(title)}</text>',
    ]


def _text(x: float, y: float, s: str, anchor: str = "middle", extra: str = "") -> str:
    return f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}"{extra}>{escape(s)}</text>'


def _color(value: float, lo: float, hi: float) -> str:
    if hi <= lo:
        return PALETTE[len(PALETTE) // 2]
    k = int((value - lo) / (hi - lo) * len(PALETTE))
    return PALETTE[min(max(k, 0), len(PALETTE) - 1)]


def heatmap_svg(sweep: SweepResult, metric: str, title: Optional[str] = None) -> str:
    """Heatmap of ``metric`` with tau_l on x and tau_u on y, coloured per panel."""
    tl, tu = sweep.grid.axes()
    values = {}
    for p in sweep.points:
        v = point_metric(p, metric)
        if v is not None:
            values[(p.thresholds.tau_l, p.thresholds.tau_u)] = v
    lo = min(values.values(), default=0.0)
    hi = max(values.values(), default=1.0)
    left, top, right, bottom = 90.0, 60.0, 800.0, 640.0
    cw = (right - left) / len(tl)
    ch = (bottom - top) / len(tu)
    out = _open(title or f"{METRIC_TITLES.get(metric, metric)} - {sweep.distribution_label}")
    for i, a in enumerate(tl):
        for j, b in enumerate(tu):
            v = values.get((float(a), float(b)))
            fill = "#dddddd" if v is None else _color(v, lo, hi)
            x = left + i * cw
            y = bottom - (j + 1) * ch
            out.append(
                f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(cw)}" height="{_f(ch)}" fill="{fill}">'
                f"<title>tau_l={a:.4f} tau_u={b:.4f}: "
                f"{'undefined' if v is None else _label(v, metric)}</title></rect>"
            )
    out.append(f'<rect x="{_f(left)}" y="{_f(top)}" width="{_f(right - left)}" '
               f'height="{_f(bottom - top)}" fill="none" stroke="#333333"/>')
    step_x = max(1, len(tl) // 6)
    for i in range(0, len(tl), step_x):
        out.append(_text(left + (i + 0.5) * cw, bottom + 20, f"{tl[i]:.2f}"))
    step_y = max(1, len(tu) // 6)
    for j in range(0, len(tu), step_y):
        out.append(_text(left - 8, bottom - (j + 0.5) * ch + 4, f"{tu[j]:.2f}", "end"))
    out.append(_text((left + right) / 2, bottom + 48, "lower threshold tau_l"))
    out.append(_text(24, (top + bottom) / 2, "upper threshold tau_u", extra=
                     f' transform="rotate(-90 24 {_f((top + bottom) / 2)})"'))
    # colour bar
    bx, bw = 840.0, 24.0
    bh = (bottom - top) / len(PALETTE)
    for k, colour in enumerate(PALETTE):
        out.append(f'<rect x="{_f(bx)}" y="{_f(bottom - (k + 1) * bh)}" width="{_f(bw)}" '
                   f'height="{_f(bh)}" fill="{colour}"/>')
    out.append(_text(bx + bw + 6, bottom, _label(lo, metric), "start"))
    out.append(_text(bx + bw + 6, top + 10, _label(hi, metric), "start"))
    out.append("</svg>")
    return "\n".join(out) + "\n"


class _Axes:
    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        self.left, self.top, self.right, self.bottom = 90.0, 60.0, 900.0, 640.0
        self.x0, self.x1 = 0.0, max(max(xs, default=1.0), 1e-9)
        ylo, yhi = min(ys, default=0.0), max(ys, default=1.0)
        pad = 0.05 * (yhi - ylo) if yhi > ylo else 0.05
        self.y0, self.y1 = ylo - pad, yhi + pad

    def x(self, v: float) -> float:
        return self.left + (v - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def y(self, v: float) -> float:
        return self.bottom - (v - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)

    def frame(self, metric: str) -> list[str]:
        out = [f'<rect x="{_f(self.left)}" y="{_f(self.top)}" width="{_f(self.right - self.left)}" '
               f'height="{_f(self.bottom - self.top)}" fill="none" stroke="#333333"/>']
        for v in np.linspace(self.x0, self.x1, 6):
            out.append(_text(self.x(v), self.bottom + 20, f"{100 * v:.0f}%"))
        for v in np.linspace(self.y0, self.y1, 6):
            out.append(_text(self.left - 8, self.y(v) + 4, _label(v, metric), "end"))
        out.append(_text((self.left + self.right) / 2, self.bottom + 48, "Human review load (%)"))
        out.append(_text(24, (self.top + self.bottom) / 2, METRIC_TITLES.get(metric, metric),
                         extra=f' transform="rotate(-90 24 {_f((self.top + self.bottom) / 2)})"'))
        return out


def _polyline(ax: _Axes, frontier: Sequence[FrontierPoint], colour: str) -> str:
    pts = " ".join(f"{_f(ax.x(fp.review_fraction))},{_f(ax.y(fp.metric_value))}" for fp in frontier)
    return f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="2.5"/>'


def scatter_frontier_svg(
    sweep: SweepResult,
    frontier: Sequence[FrontierPoint],
    metric: str,
    knees: Sequence[FrontierPoint] = (),
) -> str:
    """All operating points in grey, the Pareto frontier as a polyline, knees annotated."""
    cloud = [(p.review_fraction, point_metric(p, metric)) for p in sweep.points]
    cloud = [(x, y) for x, y in cloud if y is not None]
    ax = _Axes([x for x, _ in cloud], [y for _, y in cloud])
    out = _open(f"Pareto frontier of {metric} vs. human review load - {sweep.distribution_label}")
    out += ax.frame(metric)
    for x, y in cloud:
        out.append(f'<circle cx="{_f(ax.x(x))}" cy="{_f(ax.y(y))}" r="2.5" fill="#aaaaaa"/>')
    if frontier:
        out.append(_polyline(ax, frontier, "#000000"))
    for fp in frontier:
        out.append(f'<circle cx="{_f(ax.x(fp.review_fraction))}" cy="{_f(ax.y(fp.metric_value))}" '
                   f'r="3.5" fill="#ffffff" stroke="#000000"/>')
    for fp in knees:
        t = fp.point.thresholds
        out.append(_text(ax.x(fp.review_fraction) + 8, ax.y(fp.metric_value) + 16,
                         f"({t.tau_l:.2f}, {t.tau_u:.2f})", "start"))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def compare_svg(series: Sequence[tuple[str, Sequence[FrontierPoint]]], metric: str) -> str:
    """Overlaid frontiers on shared axes, one colour per distribution label."""
    xs = [fp.review_fraction for _, fr in series for fp in fr]
    ys = [fp.metric_value for _, fr in series for fp in fr]
    ax = _Axes(xs, ys)
    out = _open(f"Pareto frontiers of {metric} across score regimes")
    out += ax.frame(metric)
    for k, (label, frontier) in enumerate(series):
        colour = SERIES_COLORS[k % len(SERIES_COLORS)]
        if frontier:
            out.append(_polyline(ax, frontier, colour))
        y = ax.bottom - 20 - 22 * (len(series) - 1 - k)
        out.append(f'<line x1="{_f(ax.right - 230)}" y1="{_f(y - 4)}" x2="{_f(ax.right - 200)}" '
                   f'y2="{_f(y - 4)}" stroke="{colour}" stroke-width="3"/>')
        out.append(_text(ax.right - 192, y, label, "start"))
    out.append("</svg>")
    return "\n".join(out) + "\n"
