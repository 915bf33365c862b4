"""Minimal SVG charts (line plots and scatter-with-hull) without plotting libraries.

Output is deterministic: fixed 800x500 viewBox, no timestamps or ids.
"""

from __future__ import annotations

import math

__all__ = ["line_chart", "scatter_front", "lower_left_hull"]

WIDTH, HEIGHT = 800, 500
LEFT, RIGHT, TOP, BOTTOM = 90, 160, 50, 70
COLORS = ["#000000", "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"]


def _esc(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def _range(values):
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi == lo:
        pad = abs(hi) * 0.05 or 1.0
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _tick(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.2e}"
    return f"{v:.3g}"


class _Frame:
    def __init__(self, title, xlabel, ylabel, xr, yr):
        self.xr, self.yr = xr, yr
        self.pw = WIDTH - LEFT - RIGHT
        self.ph = HEIGHT - TOP - BOTTOM
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
            f'<text x="{LEFT + self.pw / 2:.1f}" y="28" text-anchor="middle" font-size="16" '
            f'font-family="sans-serif">{_esc(title)}</text>',
        ]
        for k in range(6):
            fx, fy = xr[0] + (xr[1] - xr[0]) * k / 5, yr[0] + (yr[1] - yr[0]) * k / 5
            px, py = self.x(fx), self.y(fy)
            self.parts.append(f'<line x1="{LEFT}" y1="{py:.2f}" x2="{LEFT + self.pw}" y2="{py:.2f}" stroke="#e0e0e0"/>')
            self.parts.append(f'<text x="{LEFT - 6}" y="{py + 4:.2f}" text-anchor="end" font-size="11" '
                              f'font-family="sans-serif">{_tick(fy)}</text>')
            self.parts.append(f'<text x="{px:.2f}" y="{TOP + self.ph + 18}" text-anchor="middle" font-size="11" '
                              f'font-family="sans-serif">{_tick(fx)}</text>')
        self.parts.append(f'<rect x="{LEFT}" y="{TOP}" width="{self.pw}" height="{self.ph}" fill="none" stroke="#000000"/>')
        self.parts.append(f'<text x="{LEFT + self.pw / 2:.1f}" y="{HEIGHT - 20}" text-anchor="middle" '
                          f'font-size="13" font-family="sans-serif">{_esc(xlabel)}</text>')
        self.parts.append(f'<text x="20" y="{TOP + self.ph / 2:.1f}" text-anchor="middle" font-size="13" '
                          f'font-family="sans-serif" transform="rotate(-90 20 {TOP + self.ph / 2:.1f})">{_esc(ylabel)}</text>')
        self.legend = []

    def x(self, v):
        return LEFT + (v - self.xr[0]) / (self.xr[1] - self.xr[0]) * self.pw

    def y(self, v):
        return TOP + self.ph - (v - self.yr[0]) / (self.yr[1] - self.yr[0]) * self.ph

    def add_legend(self, label, color, marker=False):
        k = len(self.legend)
        ly = TOP + 10 + 20 * k
        lx = LEFT + self.pw + 12
        if marker:
            sym = f'<circle cx="{lx + 10}" cy="{ly}" r="4" fill="{color}"/>'
        else:
            sym = f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
        self.legend.append(sym + f'<text x="{lx + 26}" y="{ly + 4}" font-size="12" '
                                 f'font-family="sans-serif">{_esc(label)}</text>')

    def render(self):
        return "\n".join(self.parts + self.legend + ["</svg>"]) + "\n"


def line_chart(series, title, xlabel, ylabel, markers=None, vline=None):
    """Render named ``(xs, ys)`` series as polylines.

    ``markers`` lists series names drawn as points instead of lines;
    ``vline`` draws a dashed vertical separator (e.g. end of training).
    """
    markers = set(markers or ())
    xs = [x for _, (sx, _) in series for x in sx]
    ys = [y for _, (_, sy) in series for y in sy]
    fr = _Frame(title, xlabel, ylabel, _range(xs), _range(ys))
    for k, (name, (sx, sy)) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = [(fr.x(a), fr.y(b)) for a, b in zip(sx, sy) if math.isfinite(b)]
        if name in markers:
            for px, py in pts:
                fr.parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{color}"/>')
        else:
            path = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
            fr.parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        fr.add_legend(name, color, marker=name in markers)
    if vline is not None:
        px = fr.x(vline)
        fr.parts.append(f'<line x1="{px:.2f}" y1="{TOP}" x2="{px:.2f}" y2="{TOP + fr.ph}" '
                        f'stroke="#888888" stroke-dasharray="5,4"/>')
    return fr.render()


def lower_left_hull(points):
    """Lower-left convex hull of ``(x, y)`` points (the supported part of a front)."""
    pts = sorted(set(points))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    # keep the decreasing part only
    out = []
    for p in hull:
        if not out or p[1] < out[-1][1]:
            out.append(p)
    return out


def scatter_front(all_points, front_points, title, xlabel="MSE_F", ylabel="MSE_U", labels=None):
    """Scatter of evaluated outcomes with the front highlighted and its hull drawn.

    Points are ``(x, y) = (mse_f, mse_u)``; ``labels`` maps a point to text.
    """
    xs = [p[0] for p in all_points]
    ys = [p[1] for p in all_points]
    fr = _Frame(title, xlabel, ylabel, _range(xs), _range(ys))
    hull = lower_left_hull(front_points)
    if len(hull) > 1:
        path = " ".join(f"{fr.x(a):.2f},{fr.y(b):.2f}" for a, b in hull)
        fr.parts.append(f'<polyline points="{path}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
    front = set(front_points)
    for p in all_points:
        color = "#ff7f0e" if p in front else "#1f77b4"
        fr.parts.append(f'<circle cx="{fr.x(p[0]):.2f}" cy="{fr.y(p[1]):.2f}" r="4" fill="{color}"/>')
        if labels and p in labels:
            fr.parts.append(f'<text x="{fr.x(p[0]) + 6:.2f}" y="{fr.y(p[1]) - 6:.2f}" font-size="10" '
                            f'font-family="sans-serif">{_esc(labels[p])}</text>')
    fr.add_legend("nondominated", "#ff7f0e", marker=True)
    fr.add_legend("dominated", "#1f77b4", marker=True)
    fr.add_legend("hull", "#1f77b4")
    return fr.render()
