"""Minimal SVG line charts of sweep results (no plotting backend needed)."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from .errors import ConfigError

WIDTH, HEIGHT = 800, 600
MARGIN = {"left": 80, "right": 140, "top": 50, "bottom": 70}
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

METRICS = {
    "dm": ("success_dm", "P(d_m < threshold)"),
    "w": ("success_w", "P(||w_hat - w*|| < threshold)"),
}


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + k * step for k in range(count)]


def render_svg(result, metric: str = "dm", title: str | None = None) -> str:
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {sorted(METRICS)}, got {metric!r}")
    if not result.rows:
        raise ConfigError("nothing to plot: sweep result has no rows")
    attr, ylabel = METRICS[metric]

    series: dict[int, list[tuple[float, float]]] = {}
    for r in sorted(result.rows, key=lambda r: (r.m, r.C)):
        series.setdefault(r.m, []).append((r.C, getattr(r, attr)))

    xs = [r.C for r in result.rows]
    x_lo, x_hi = min(xs), max(xs)
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        if x_hi == x_lo:
            return MARGIN["left"] + plot_w / 2
        return MARGIN["left"] + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return MARGIN["top"] + (1.0 - y) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    x0, y0 = MARGIN["left"], MARGIN["top"] + plot_h
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + plot_w}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{MARGIN["top"]}" x2="{x0}" y2="{y0}" stroke="black"/>')
    for t in _ticks(x_lo, x_hi):
        out.append(f'<line x1="{px(t):.2f}" y1="{y0}" x2="{px(t):.2f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{y0 + 20}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(0.0, 1.0):
        out.append(f'<line x1="{x0 - 5}" y1="{py(t):.2f}" x2="{x0}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{t:.2f}</text>')
    out.append(f'<text x="{x0 + plot_w / 2:.2f}" y="{HEIGHT - 20}" text-anchor="middle">total cost C</text>')
    out.append(
        f'<text x="20" y="{MARGIN["top"] + plot_h / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {MARGIN["top"] + plot_h / 2:.2f})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="25" text-anchor="middle" font-size="16">{escape(title)}</text>')

    for k, (m, pts) in enumerate(sorted(series.items())):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        if len(pts) > 1:
            out.append(f'<polyline class="series" data-m="{m}" fill="none" stroke="{color}" '
                       f'stroke-width="2" points="{coords}"/>')
        for x, y in pts:
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        ly = MARGIN["top"] + 20 * k + 10
        lx = WIDTH - MARGIN["right"] + 20
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">m = {m}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(result, path, metric: str = "dm", title: str | None = None) -> None:
    text = render_svg(result, metric, title)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc}") from exc
