"""Static SVG rendering of performance curves.

The output is assembled by hand so identical inputs give identical bytes.
"""

import math
from xml.sax.saxutils import escape

from .metrics import read_curves_csv

WIDTH, HEIGHT = 720, 440
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 200, 30, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _fmt(x):
    return f"{x:.2f}"


def _span(lo, hi):
    if hi > lo:
        return lo, hi
    pad = abs(lo) * 0.1 or 1.0
    return lo - pad, hi + pad


def render_svg(curves, log_y=False, title=None):
    if not curves:
        raise ValueError("nothing to plot")
    xs = [p.tick for c in curves for p in c.points]
    ys = [p.distortion for c in curves for p in c.points]
    if log_y:
        if min(ys) <= 0:
            raise ValueError("log scale needs positive distortions")
        ys = [math.log10(y) for y in ys]
    x0, x1 = _span(min(xs), max(xs))
    y0, y1 = _span(min(ys), max(ys))
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x):
        return MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w

    def sy(y):
        y = math.log10(y) if log_y else y
        return MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{MARGIN_LEFT}" y="{MARGIN_TOP - 10}">{escape(title)}</text>')
    for k in range(5):
        fx = x0 + (x1 - x0) * k / 4
        fy = y0 + (y1 - y0) * k / 4
        px = MARGIN_LEFT + plot_w * k / 4
        py = MARGIN_TOP + plot_h * (1 - k / 4)
        label = f"{10 ** fy:.3g}" if log_y else f"{fy:.3g}"
        out.append(f'<text x="{_fmt(px)}" y="{HEIGHT - MARGIN_BOTTOM + 18}" '
                   f'text-anchor="middle">{fx:.6g}</text>')
        out.append(f'<text x="{MARGIN_LEFT - 6}" y="{_fmt(py + 4)}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{MARGIN_LEFT + plot_w / 2:.2f}" y="{HEIGHT - 12}" '
               'text-anchor="middle">tick</text>')
    out.append(f'<text x="16" y="{MARGIN_TOP + plot_h / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN_TOP + plot_h / 2:.2f})">'
               f'{"distortion (log)" if log_y else "distortion"}</text>')

    for i, c in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        pts = [(sx(p.tick), sy(p.distortion)) for p in c.points]
        if len(pts) == 1:
            out.append(f'<circle class="marker" cx="{_fmt(pts[0][0])}" cy="{_fmt(pts[0][1])}" '
                       f'r="3" fill="{color}"/>')
        else:
            coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
            out.append(f'<polyline class="curve" fill="none" stroke="{color}" '
                       f'stroke-width="1.5" points="{coords}"/>')
        ly = MARGIN_TOP + 14 + 18 * i
        lx = WIDTH - MARGIN_RIGHT + 12
        out.append(f'<g class="legend"><line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>'
                   f'<text x="{lx + 26}" y="{ly}">{escape(c.label)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_curves(csv_paths, output_path, log_y=False, title=None):
    """Render every curve found in ``csv_paths`` into one SVG file."""
    if not csv_paths:
        raise ValueError("plot_curves needs at least one curve file")
    curves = []
    for path in csv_paths:
        curves.extend(read_curves_csv(path))
    svg = render_svg(curves, log_y=log_y, title=title)
    with open(output_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return output_path
