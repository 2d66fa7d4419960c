"""CSV tables with a metadata comment line, and minimal static SVG line charts."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

from . import __version__


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(v)


def csv_text(header: Sequence[str], rows, seed: Optional[int] = None, note: str = "") -> str:
    """CSV body preceded by ``# lmsampling <version> seed=<seed>``."""
    buf = io.StringIO()
    meta = f"# lmsampling {__version__} seed={'none' if seed is None else seed}"
    if note:
        meta += f" {note}"
    buf.write(meta + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_text(path, text: str) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
    return p


def read_csv_column(path, column: Optional[str] = None) -> list:
    """Numeric values of one column (default: the last) of a CSV written by :func:`csv_text`.

    Plain one-number-per-line files are accepted too.
    """
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: no data")
    first = lines[0].split(",")
    try:
        float(first[-1])
        header, body = None, lines
    except ValueError:
        header, body = first, lines[1:]
    idx = -1
    if column is not None:
        if header is None or column not in header:
            raise ValueError(f"{path}: no column {column!r}")
        idx = header.index(column)
    return [float(ln.split(",")[idx]) for ln in body]


# --------------------------------------------------------------------------
# SVG
# --------------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    xs: Sequence[float]
    ys: Sequence[float]
    markers: bool = False
    line: bool = True


@dataclass
class Panel:
    title: str
    series: list = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


def _panel_svg(panel: Panel, ox, oy, w, h):
    pts = [(x, y) for s in panel.series for x, y in zip(s.xs, s.ys)
           if math.isfinite(x) and math.isfinite(y)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    ml, mr, mt, mb = 55, 10, 25, 40
    pw, ph = w - ml - mr, h - mt - mb

    def X(x):
        return ox + ml + (x - x0) / (x1 - x0) * pw

    def Y(y):
        return oy + mt + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<rect x="{ox + ml}" y="{oy + mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
           f'<text x="{ox + ml + pw / 2}" y="{oy + 16}" text-anchor="middle" font-size="13">{escape(panel.title)}</text>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{X(t):.2f}" y1="{oy + mt + ph}" x2="{X(t):.2f}" y2="{oy + mt + ph + 4}" stroke="#333"/>')
        out.append(f'<text x="{X(t):.2f}" y="{oy + mt + ph + 16}" text-anchor="middle" font-size="10">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{ox + ml - 4}" y1="{Y(t):.2f}" x2="{ox + ml}" y2="{Y(t):.2f}" stroke="#333"/>')
        out.append(f'<text x="{ox + ml - 6}" y="{Y(t) + 3:.2f}" text-anchor="end" font-size="10">{t:g}</text>')
    if panel.xlabel:
        out.append(f'<text x="{ox + ml + pw / 2}" y="{oy + h - 6}" text-anchor="middle" font-size="11">{escape(panel.xlabel)}</text>')
    if panel.ylabel:
        cy = oy + mt + ph / 2
        out.append(f'<text x="{ox + 12}" y="{cy}" text-anchor="middle" font-size="11" '
                   f'transform="rotate(-90 {ox + 12} {cy})">{escape(panel.ylabel)}</text>')
    for i, s in enumerate(panel.series):
        col = PALETTE[i % len(PALETTE)]
        xy = [(X(x), Y(y)) for x, y in zip(s.xs, s.ys) if math.isfinite(x) and math.isfinite(y)]
        if s.line and len(xy) > 1:
            d = " ".join(f"{a:.2f},{b:.2f}" for a, b in xy)
            out.append(f'<polyline points="{d}" fill="none" stroke="{col}" stroke-width="1.3"/>')
        if s.markers:
            out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="none" stroke="{col}"/>' for a, b in xy)
        ly = oy + mt + 14 + 14 * i
        out.append(f'<text x="{ox + ml + pw - 6}" y="{ly}" text-anchor="end" font-size="10" fill="{col}">{escape(s.label)}</text>')
    return out


def svg_text(panels: Sequence[Panel], width: int = 360, height: int = 280) -> str:
    W = width * len(panels)
    body = []
    for i, p in enumerate(panels):
        body.extend(_panel_svg(p, i * width, 0, width, height))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" '
            f'viewBox="0 0 {W} {height}" font-family="sans-serif">\n'
            f'<rect width="{W}" height="{height}" fill="white"/>\n' + "\n".join(body) + "\n</svg>\n")
