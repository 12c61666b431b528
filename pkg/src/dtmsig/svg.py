"""Dependency-free SVG line plots (fixed 800x600 viewBox)."""
from __future__ import annotations

from html import escape

import numpy as np

WIDTH, HEIGHT = 800, 600
_MARGIN = 60
PALETTE = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666")


def _colour_for(label, labels):
    ordered = sorted(set(labels))
    return PALETTE[ordered.index(label) % len(PALETTE)]


def line_plot(curves, labels=None, title=""):
    """Render ``curves`` (a list of ``(x, y)`` arrays) as polylines.

    Curves sharing a label share a colour.
    """
    if labels is None:
        labels = [str(i) for i in range(len(curves))]
    xs = np.concatenate([np.asarray(c[0], float) for c in curves])
    ys = np.concatenate([np.asarray(c[1], float) for c in curves])
    ys = ys[np.isfinite(ys)]
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = 0.0, float(ys.max()) if len(ys) else 1.0
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0
    pw, ph = WIDTH - 2 * _MARGIN, HEIGHT - 2 * _MARGIN

    def sx(x):
        return _MARGIN + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return HEIGHT - _MARGIN - (y - y0) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{HEIGHT - _MARGIN}" x2="{WIDTH - _MARGIN}" y2="{HEIGHT - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{HEIGHT - _MARGIN}" stroke="black"/>',
        f'<text x="{_MARGIN}" y="{HEIGHT - _MARGIN + 20}" font-size="12">{x0:.4g}</text>',
        f'<text x="{WIDTH - _MARGIN}" y="{HEIGHT - _MARGIN + 20}" font-size="12" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{_MARGIN - 5}" y="{_MARGIN}" font-size="12" text-anchor="end">{y1:.4g}</text>',
    ]
    if title:
        parts.append(f'<text x="{WIDTH / 2}" y="{_MARGIN / 2}" font-size="16" text-anchor="middle">{escape(title)}</text>')
    for (x, y), lab in zip(curves, labels):
        x = np.asarray(x, float)
        y = np.clip(np.asarray(y, float), y0, y1)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y) if np.isfinite(b))
        parts.append(
            f'<polyline fill="none" stroke="{_colour_for(lab, labels)}" stroke-width="1.5" points="{pts}">'
            f"<title>{escape(str(lab))}</title></polyline>"
        )
    legend = sorted(set(labels))
    for i, lab in enumerate(legend[:20]):
        y = _MARGIN + 16 * i
        parts.append(f'<text x="{WIDTH - _MARGIN}" y="{y}" font-size="12" text-anchor="end" '
                     f'fill="{_colour_for(lab, labels)}">{escape(str(lab))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def density_plot(estimates, labels=None, title="DTM density estimates"):
    if labels is None:
        labels = [e.source_id or str(i) for i, e in enumerate(estimates)]
    return line_plot([(e.grid, e.values) for e in estimates], labels, title)


def clt_plot(result, grid_size=400):
    """KDE of the plug-in and oracle statistics against the normal limit."""
    from .kde import GAUSSIAN, kde_estimate

    sigma2 = result.target_variance
    s = np.sqrt(sigma2)
    grid = np.linspace(-4 * s, 4 * s, grid_size)
    normal = np.exp(-grid**2 / (2 * sigma2)) / np.sqrt(2 * np.pi * sigma2)
    curves = [(grid, normal)]
    names = ["normal limit"]
    for name, stats in (("plug-in", result.plugin_stats), ("oracle", result.oracle_stats)):
        # wide truncated-gaussian smoothing for display only
        h = 3.0 * 1.06 * np.std(stats, ddof=1) * len(stats) ** -0.2
        est = kde_estimate(stats, GAUSSIAN, h, grid)
        curves.append((grid, est.values))
        names.append(name)
    return line_plot(curves, names, title=f"pointwise CLT at y={result.experiment.y}, n={result.experiment.n}")
