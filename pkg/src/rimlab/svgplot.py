"""Tiny self-contained SVG charts (no plotting dependencies).

Only what the experiment figures need: polyline/step charts with linear or
log axes, fixed deterministic formatting so identical data yields
byte-identical markup.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

__all__ = ["line_chart"]

_PALETTE = ("#2266aa", "#cc4422", "#228844", "#886600", "#663388", "#006677")
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 56, 16, 28, 44


def _transform(vals, lo, hi, out_lo, out_hi, log: bool):
    if log:
        lo, hi = math.log10(lo), math.log10(hi)
        vals = [math.log10(v) for v in vals]
    span = (hi - lo) or 1.0
    return [out_lo + (v - lo) / span * (out_hi - out_lo) for v in vals]


def _ticks(lo, hi, log: bool, n=5):
    if log:
        lo_e, hi_e = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        step = max(1, (hi_e - lo_e) // n)
        return [10.0 ** e for e in range(int(lo_e), int(hi_e) + 1, int(step))]
    step = (hi - lo) / n or 1.0
    return [lo + i * step for i in range(n + 1)]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1000 or abs(v) < 0.01:
        return f"{v:.2e}"
    return f"{v:.4g}"


def line_chart(series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
               title: str = "", xlabel: str = "", ylabel: str = "",
               width: int = 720, height: int = 400,
               logx: bool = False, logy: bool = False,
               x_range: Optional[tuple[float, float]] = None,
               y_range: Optional[tuple[float, float]] = None) -> str:
    """Polyline chart of (name, xs, ys) series as a standalone SVG string."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    if logx:
        xs_all = [x for x in xs_all if x > 0] or [1.0]
    if logy:
        ys_all = [y for y in ys_all if y > 0] or [1.0]
    x_lo, x_hi = x_range or (min(xs_all), max(xs_all))
    y_lo, y_hi = y_range or (min(ys_all), max(ys_all))
    if x_lo == x_hi:
        x_hi = x_lo + 1.0
    if y_lo == y_hi:
        y_hi = y_lo + 1.0
    px_lo, px_hi = _MARGIN_L, width - _MARGIN_R
    py_lo, py_hi = height - _MARGIN_B, _MARGIN_T

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{px_lo}" y="{py_hi}" width="{px_hi - px_lo}" '
           f'height="{py_lo - py_hi}" fill="none" stroke="#333"/>']
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="13">{title}</text>')

    for tx in _ticks(x_lo, x_hi, logx):
        if not x_lo <= tx <= x_hi:
            continue
        (px,) = _transform([tx], x_lo, x_hi, px_lo, px_hi, logx)
        out.append(f'<line x1="{px:.1f}" y1="{py_lo}" x2="{px:.1f}" y2="{py_lo + 4}" stroke="#333"/>')
        out.append(f'<text x="{px:.1f}" y="{py_lo + 16}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="10">{_fmt(tx)}</text>')
    for ty in _ticks(y_lo, y_hi, logy):
        if not y_lo <= ty <= y_hi:
            continue
        (py,) = _transform([ty], y_lo, y_hi, py_lo, py_hi, logy)
        out.append(f'<line x1="{px_lo - 4}" y1="{py:.1f}" x2="{px_lo}" y2="{py:.1f}" stroke="#333"/>')
        out.append(f'<text x="{px_lo - 6}" y="{py + 3:.1f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="10">{_fmt(ty)}</text>')
    if xlabel:
        out.append(f'<text x="{(px_lo + px_hi) / 2:.1f}" y="{height - 8}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{(py_lo + py_hi) / 2:.1f}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11" '
                   f'transform="rotate(-90 14 {(py_lo + py_hi) / 2:.1f})">{ylabel}</text>')

    for si, (name, xs, ys) in enumerate(series):
        color = _PALETTE[si % len(_PALETTE)]
        pts = [(x, y) for x, y in zip(xs, ys)
               if (not logx or x > 0) and (not logy or y > 0)]
        if not pts:
            continue
        pxs = _transform([p[0] for p in pts], x_lo, x_hi, px_lo, px_hi, logx)
        pys = _transform([p[1] for p in pts], y_lo, y_hi, py_lo, py_hi, logy)
        coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in zip(pxs, pys))
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.2"/>')
        if name:
            ly = _MARGIN_T + 14 * si + 10
            out.append(f'<line x1="{px_hi - 110}" y1="{ly - 4}" x2="{px_hi - 90}" y2="{ly - 4}" '
                       f'stroke="{color}" stroke-width="1.2"/>')
            out.append(f'<text x="{px_hi - 86}" y="{ly}" font-family="sans-serif" '
                       f'font-size="10">{name}</text>')
    out.append("</svg>")
    return "\n".join(out)
