"""Minimal static SVG emission for density curves, histograms, and scatter
plots. Fixed 800x400 viewBox, no external dependencies."""

from __future__ import annotations

from typing import Sequence

import numpy as np

WIDTH = 800
HEIGHT = 400
MARGIN = 45

# qualitative palette, cycled per series
SERIES_COLORS = (
    "#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#e67e22", "#16a085",
    "#7f8c8d", "#2c3e50",
)


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span == 0:
        span = 1.0
    return out_lo + (np.asarray(values, dtype=float) - lo) / span * (out_hi - out_lo)


def _document(body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _axes() -> str:
    return (
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#333" stroke-width="1"/>'
    )


def line_chart(series: Sequence[tuple[str, np.ndarray, np.ndarray]], title: str = "") -> str:
    """One polyline per (label, x, y) series on a shared scale."""
    if not series:
        raise ValueError("line_chart: no series")
    x_lo = min(float(np.min(x)) for _, x, _ in series)
    x_hi = max(float(np.max(x)) for _, x, _ in series)
    y_hi = max(float(np.max(y)) for _, _, y in series)

    body = [_axes()]
    if title:
        body.append(
            f'<text x="{WIDTH / 2}" y="25" text-anchor="middle" '
            f'font-size="15">{title}</text>'
        )
    for i, (label, x, y) in enumerate(series):
        color = SERIES_COLORS[i % len(SERIES_COLORS)]
        px = _scale(x, x_lo, x_hi, MARGIN, WIDTH - MARGIN)
        py = _scale(y, 0.0, y_hi, HEIGHT - MARGIN, MARGIN)
        points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        body.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{points}"><title>{label}</title></polyline>'
        )
        body.append(
            f'<text x="{WIDTH - MARGIN + 4}" y="{MARGIN + 16 * i + 12}" '
            f'font-size="11" fill="{color}">{label}</text>'
        )
    return _document(body)


def bar_chart(groups: Sequence[str], frequencies: Sequence[np.ndarray], title: str = "") -> str:
    """Grouped bars: one bar per (cluster, group), clusters along the x axis."""
    if not groups:
        raise ValueError("bar_chart: no groups")
    freq = np.asarray(frequencies, dtype=float)
    n_groups, k = freq.shape
    y_hi = float(freq.max()) or 1.0

    plot_w = WIDTH - 2 * MARGIN
    slot = plot_w / k
    bar_w = slot * 0.8 / n_groups

    body = [_axes()]
    if title:
        body.append(
            f'<text x="{WIDTH / 2}" y="25" text-anchor="middle" '
            f'font-size="15">{title}</text>'
        )
    for gi, group in enumerate(groups):
        color = SERIES_COLORS[gi % len(SERIES_COLORS)]
        for c in range(k):
            h = freq[gi, c] / y_hi * (HEIGHT - 2 * MARGIN)
            x = MARGIN + c * slot + slot * 0.1 + gi * bar_w
            y = HEIGHT - MARGIN - h
            body.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
                f'height="{h:.2f}" fill="{color}"/>'
            )
        body.append(
            f'<text x="{WIDTH - MARGIN + 4}" y="{MARGIN + 16 * gi + 12}" '
            f'font-size="11" fill="{color}">{group}</text>'
        )
    for c in range(k):
        body.append(
            f'<text x="{MARGIN + (c + 0.5) * slot:.2f}" y="{HEIGHT - MARGIN + 16}" '
            f'text-anchor="middle" font-size="10">{c}</text>'
        )
    return _document(body)


def scatter_chart(points: Sequence[tuple[str, float, float]], title: str = "") -> str:
    """Labeled 2-D scatter; each point carries a text anchor."""
    if not points:
        raise ValueError("scatter_chart: no points")
    xs = np.array([p[1] for p in points])
    ys = np.array([p[2] for p in points])
    pad_x = (xs.max() - xs.min()) * 0.1 or 1.0
    pad_y = (ys.max() - ys.min()) * 0.1 or 1.0
    px = _scale(xs, xs.min() - pad_x, xs.max() + pad_x, MARGIN, WIDTH - MARGIN)
    py = _scale(ys, ys.min() - pad_y, ys.max() + pad_y, HEIGHT - MARGIN, MARGIN)

    body = [_axes()]
    if title:
        body.append(
            f'<text x="{WIDTH / 2}" y="25" text-anchor="middle" '
            f'font-size="15">{title}</text>'
        )
    for i, (label, _, _) in enumerate(points):
        color = SERIES_COLORS[i % len(SERIES_COLORS)]
        body.append(
            f'<circle cx="{px[i]:.2f}" cy="{py[i]:.2f}" r="5" fill="{color}"/>'
        )
        body.append(
            f'<text x="{px[i] + 8:.2f}" y="{py[i] + 4:.2f}" '
            f'font-size="12" text-anchor="start">{label}</text>'
        )
    return _document(body)
