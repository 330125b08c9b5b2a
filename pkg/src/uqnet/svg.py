"""Minimal SVG figure emitter: quartile boxes and overlaid histograms.

No plotting dependency; the CSV data behind every figure is emitted
alongside, so these are convenience renderings only. Output is fully
deterministic (fixed canvas, fixed formatting).
"""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 480, 320
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 58, 16, 34, 42
COLORS = ("#3b6fb6", "#c24b3a")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]


def _y_axis(lines: list[str], lo: float, hi: float, label: str) -> None:
    span = hi - lo or 1.0
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    lines.append(f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" '
                 f'y2="{HEIGHT - MARGIN_B}" stroke="black"/>')
    for i in range(5):
        v = lo + span * i / 4
        y = HEIGHT - MARGIN_B - plot_h * i / 4
        lines.append(f'<line x1="{MARGIN_L - 4}" y1="{_fmt(y)}" x2="{MARGIN_L}" '
                     f'y2="{_fmt(y)}" stroke="black"/>')
        lines.append(f'<text x="{MARGIN_L - 7}" y="{_fmt(y + 4)}" text-anchor="end" '
                     f'font-size="10">{_fmt(v)}</text>')
    lines.append(f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" font-size="11" '
                 f'transform="rotate(-90 14 {HEIGHT / 2})">{label}</text>')


def boxplot_svg(groups: list[tuple[str, tuple[float, float, float, float, float]]],
                title: str, ylabel: str = "uncertainty") -> str:
    """Box-and-whisker chart; each group is (label, (min, q1, median, q3, max))."""
    hi = max((q[4] for _, q in groups), default=1.0) or 1.0
    hi *= 1.05
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    plot_w = WIDTH - MARGIN_L - MARGIN_R

    def ypix(v: float) -> float:
        return HEIGHT - MARGIN_B - plot_h * (v / hi)

    lines = _header(title)
    _y_axis(lines, 0.0, hi, ylabel)
    lines.append(f'<line x1="{MARGIN_L}" y1="{HEIGHT - MARGIN_B}" x2="{WIDTH - MARGIN_R}" '
                 f'y2="{HEIGHT - MARGIN_B}" stroke="black"/>')

    slot = plot_w / max(len(groups), 1)
    box_w = min(70.0, slot * 0.4)
    for i, (label, (qmin, q1, med, q3, qmax)) in enumerate(groups):
        cx = MARGIN_L + slot * (i + 0.5)
        color = COLORS[i % len(COLORS)]
        lines.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(ypix(qmin))}" x2="{_fmt(cx)}" '
                     f'y2="{_fmt(ypix(qmax))}" stroke="black"/>')
        for v in (qmin, qmax):
            lines.append(f'<line x1="{_fmt(cx - box_w / 4)}" y1="{_fmt(ypix(v))}" '
                         f'x2="{_fmt(cx + box_w / 4)}" y2="{_fmt(ypix(v))}" stroke="black"/>')
        lines.append(f'<rect x="{_fmt(cx - box_w / 2)}" y="{_fmt(ypix(q3))}" '
                     f'width="{_fmt(box_w)}" height="{_fmt(max(ypix(q1) - ypix(q3), 0.5))}" '
                     f'fill="{color}" fill-opacity="0.55" stroke="black"/>')
        lines.append(f'<line x1="{_fmt(cx - box_w / 2)}" y1="{_fmt(ypix(med))}" '
                     f'x2="{_fmt(cx + box_w / 2)}" y2="{_fmt(ypix(med))}" '
                     f'stroke="black" stroke-width="2"/>')
        lines.append(f'<text x="{_fmt(cx)}" y="{HEIGHT - MARGIN_B + 16}" text-anchor="middle" '
                     f'font-size="11">{label}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def histogram_svg(edges: np.ndarray, series: list[tuple[str, np.ndarray]],
                  title: str, xlabel: str = "uncertainty") -> str:
    """Overlaid relative-frequency bars on shared bin edges."""
    edges = np.asarray(edges, dtype=np.float64)
    hi = max((float(np.max(f)) for _, f in series if len(f)), default=1.0) or 1.0
    hi *= 1.05
    lo_x, hi_x = float(edges[0]), float(edges[-1])
    span_x = hi_x - lo_x or 1.0
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    plot_w = WIDTH - MARGIN_L - MARGIN_R

    def xpix(v: float) -> float:
        return MARGIN_L + plot_w * (v - lo_x) / span_x

    def ypix(v: float) -> float:
        return HEIGHT - MARGIN_B - plot_h * (v / hi)

    lines = _header(title)
    _y_axis(lines, 0.0, hi, "relative frequency")
    lines.append(f'<line x1="{MARGIN_L}" y1="{HEIGHT - MARGIN_B}" x2="{WIDTH - MARGIN_R}" '
                 f'y2="{HEIGHT - MARGIN_B}" stroke="black"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo_x + span_x * frac
        lines.append(f'<text x="{_fmt(xpix(v))}" y="{HEIGHT - MARGIN_B + 14}" '
                     f'text-anchor="middle" font-size="10">{_fmt(v)}</text>')
    lines.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 8}" text-anchor="middle" '
                 f'font-size="11">{xlabel}</text>')

    for i, (label, freqs) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        for b, f in enumerate(np.asarray(freqs, dtype=np.float64)):
            if f <= 0:
                continue
            x0, x1 = xpix(float(edges[b])), xpix(float(edges[b + 1]))
            lines.append(f'<rect x="{_fmt(x0)}" y="{_fmt(ypix(f))}" '
                         f'width="{_fmt(max(x1 - x0 - 0.5, 0.5))}" '
                         f'height="{_fmt(HEIGHT - MARGIN_B - ypix(f))}" '
                         f'fill="{color}" fill-opacity="0.55"/>')
        ly = MARGIN_T + 14 + 14 * i
        lines.append(f'<rect x="{WIDTH - MARGIN_R - 90}" y="{ly - 9}" width="10" height="10" '
                     f'fill="{color}" fill-opacity="0.55"/>')
        lines.append(f'<text x="{WIDTH - MARGIN_R - 76}" y="{ly}" font-size="11">{label}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
