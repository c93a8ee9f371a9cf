"""Performance gain plot: balanced-accuracy gain (x) against ASDD (y).

Points toward the lower right are preferable: more performance gained for
less change in model behavior. Output is plain SVG written without any
plotting library, so identical input tables give identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .config import BASELINE

METHOD_STYLE = {
    "random_under": ("#1f77b4", "circle"),
    "near_miss": ("#d62728", "square"),
    "random_over": ("#2ca02c", "triangle"),
    "smote": ("#9467bd", "diamond"),
    "borderline_smote": ("#ff7f0e", "triangle-down"),
    "smote_tomek": ("#8c564b", "cross"),
}
_FALLBACK = [("#17becf", "circle"), ("#7f7f7f", "square"), ("#bcbd22", "diamond")]

PANEL_W, PANEL_H = 360, 300
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 36, 52
LEGEND_W = 170


@dataclass(frozen=True)
class GainRow:
    dataset: str
    model: str
    method: str
    gain: float
    asdd: float


def performance_gain_table(results, kind: str) -> list[GainRow]:
    """Long-form (dataset, model, method, gain, asdd) rows; baseline and failed cells dropped."""
    if kind not in ("pdp", "ale"):
        raise ValueError(f"kind must be 'pdp' or 'ale', got {kind!r}")
    rows = []
    for c in results:
        if c.method == BASELINE or c.failed:
            continue
        value = c.asdd_pdp if kind == "pdp" else c.asdd_ale
        rows.append(GainRow(c.dataset, c.family, c.method, float(c.gain), float(value)))
    return rows


def _nice_step(span: float, target: int = 5) -> float:
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


def _axis(lo: float, hi: float):
    if hi - lo <= 0:
        lo, hi = lo - 0.5, hi + 0.5
    step = _nice_step(hi - lo)
    start = math.floor(lo / step) * step
    stop = math.ceil(hi / step) * step
    ticks = []
    t = start
    while t <= stop + step * 1e-9:
        ticks.append(round(t, 12))
        t += step
    return start, stop, ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.6g}" if v != 0 else "0"


def _marker(shape: str, x: float, y: float, color: str, cls: str, attrs: str = "") -> str:
    r = 4.5
    if shape == "circle":
        return f'<circle class="{cls}" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{r}" fill="{color}"{attrs}/>'
    if shape == "square":
        return (f'<rect class="{cls}" x="{_fmt(x - r)}" y="{_fmt(y - r)}" width="{2 * r}" height="{2 * r}" '
                f'fill="{color}"{attrs}/>')
    if shape == "triangle":
        pts = [(x, y - r * 1.2), (x - r * 1.1, y + r * 0.8), (x + r * 1.1, y + r * 0.8)]
    elif shape == "triangle-down":
        pts = [(x, y + r * 1.2), (x - r * 1.1, y - r * 0.8), (x + r * 1.1, y - r * 0.8)]
    elif shape == "diamond":
        pts = [(x, y - r * 1.3), (x + r, y), (x, y + r * 1.3), (x - r, y)]
    else:
        w = r * 0.45
        pts = [(x - w, y - r), (x + w, y - r), (x + w, y - w), (x + r, y - w), (x + r, y + w), (x + w, y + w),
               (x + w, y + r), (x - w, y + r), (x - w, y + w), (x - r, y + w), (x - r, y - w), (x - w, y - w)]
    p = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
    return f'<polygon class="{cls}" points="{p}" fill="{color}"{attrs}/>'


def _styles(methods):
    styles, extra = {}, 0
    for m in methods:
        if m in METHOD_STYLE:
            styles[m] = METHOD_STYLE[m]
        else:
            styles[m] = _FALLBACK[extra % len(_FALLBACK)]
            extra += 1
    return styles


def render_gain_plot(table, facet: str = "model", out=None, kind: str = "pdp") -> str:
    """Render ``table`` as an SVG scatter with one panel per ``facet`` level.

    Each point element carries ``data-gain``/``data-asdd`` attributes holding
    the exact row values. Returns the SVG text and writes it to ``out`` when
    given.
    """
    rows = list(table)
    if not rows:
        raise ValueError("cannot render a performance gain plot from an empty table")
    if facet not in ("model", "dataset"):
        raise ValueError(f"facet must be 'model' or 'dataset', got {facet!r}")
    levels = sorted({getattr(r, facet) for r in rows})
    order = list(METHOD_STYLE)
    methods = sorted({r.method for r in rows}, key=lambda m: (order.index(m) if m in order else len(order), m))
    styles = _styles(methods)

    gains = [r.gain for r in rows if math.isfinite(r.gain)] + [0.0]
    values = [r.asdd for r in rows if math.isfinite(r.asdd)] + [0.0]
    x_lo, x_hi, x_ticks = _axis(min(gains), max(gains))
    y_lo, y_hi, y_ticks = _axis(0.0, max(values))

    width = MARGIN_L + len(levels) * (PANEL_W + MARGIN_L) + LEGEND_W
    height = MARGIN_T + PANEL_H + MARGIN_B
    y_label = f"ASDD ({kind.upper()})"
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
    ]
    for p, level in enumerate(levels):
        ox = MARGIN_L + p * (PANEL_W + MARGIN_L)
        oy = MARGIN_T

        def sx(v, ox=ox):
            return ox + (v - x_lo) / (x_hi - x_lo) * PANEL_W

        def sy(v, oy=oy):
            return oy + PANEL_H - (v - y_lo) / (y_hi - y_lo) * PANEL_H

        parts.append(f'<g class="panel" data-{facet}="{escape(level)}">')
        parts.append(f'<text class="panel-title" x="{_fmt(ox + PANEL_W / 2)}" y="{oy - 12}" '
                     f'text-anchor="middle" font-size="13">{escape(level)}</text>')
        parts.append(f'<rect x="{ox}" y="{oy}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#444"/>')
        for t in x_ticks:
            x = sx(t)
            parts.append(f'<line class="grid" x1="{_fmt(x)}" y1="{oy}" x2="{_fmt(x)}" y2="{oy + PANEL_H}" stroke="#eee"/>')
            parts.append(f'<text class="tick" x="{_fmt(x)}" y="{oy + PANEL_H + 14}" text-anchor="middle">{_tick_label(t)}</text>')
        for t in y_ticks:
            y = sy(t)
            parts.append(f'<line class="grid" x1="{ox}" y1="{_fmt(y)}" x2="{ox + PANEL_W}" y2="{_fmt(y)}" stroke="#eee"/>')
            parts.append(f'<text class="tick" x="{ox - 6}" y="{_fmt(y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
        zx = sx(0.0)
        parts.append(f'<line class="zero-line" x1="{_fmt(zx)}" y1="{oy}" x2="{_fmt(zx)}" y2="{oy + PANEL_H}" '
                     f'stroke="#333" stroke-dasharray="4 3"/>')
        parts.append(f'<text class="axis-label" x="{_fmt(ox + PANEL_W / 2)}" y="{oy + PANEL_H + 34}" '
                     f'text-anchor="middle">Balanced accuracy gain</text>')
        parts.append(f'<text class="axis-label" transform="translate({ox - 44},{_fmt(oy + PANEL_H / 2)}) rotate(-90)" '
                     f'text-anchor="middle">{y_label}</text>')
        for r in rows:
            if getattr(r, facet) != level:
                continue
            color, shape = styles[r.method]
            attrs = (f' data-dataset="{escape(r.dataset)}" data-model="{escape(r.model)}" '
                     f'data-method="{escape(r.method)}" data-gain="{r.gain!r}" data-asdd="{r.asdd!r}"')
            gx = r.gain if math.isfinite(r.gain) else 0.0
            gy = r.asdd if math.isfinite(r.asdd) else 0.0
            parts.append(_marker(shape, sx(gx), sy(gy), color, "point", attrs))
        parts.append("</g>")

    lx = MARGIN_L + len(levels) * (PANEL_W + MARGIN_L) - MARGIN_L / 2
    parts.append('<g class="legend">')
    parts.append(f'<text x="{_fmt(lx)}" y="{MARGIN_T}" font-size="12">method</text>')
    for i, m in enumerate(methods):
        color, shape = styles[m]
        y = MARGIN_T + 18 + 18 * i
        parts.append(_marker(shape, lx + 6, y, color, "legend-marker"))
        parts.append(f'<text x="{_fmt(lx + 18)}" y="{_fmt(y + 4)}">{escape(m)}</text>')
    parts.append("</g>")
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if out is not None:
        Path(out).write_text(svg, encoding="utf-8")
    return svg
