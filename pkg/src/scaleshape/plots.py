"""Minimal self-contained SVG line plots for the experiment tables."""

from __future__ import annotations

import math

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
            "#17becf", "#e377c2")

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_e = math.floor(math.log10(lo))
        hi_e = math.ceil(math.log10(hi))
        step = max(1, (hi_e - lo_e) // 8)
        return [10.0**e for e in range(lo_e, hi_e + 1, step)]
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / 6
    mag = 10 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * span:
        out.append(v)
        v += step
    return out


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


def line_plot_svg(
    path: str,
    series: dict[str, list[tuple[float, float]]],
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    xlog: bool = False,
    ylog: bool = False,
) -> None:
    """Write a simple multi-series line plot; log axes drop nonpositive points."""
    pts_all = []
    clean: dict[str, list[tuple[float, float]]] = {}
    for name, pts in series.items():
        kept = [
            (x, y)
            for x, y in pts
            if math.isfinite(x) and math.isfinite(y)
            and (not xlog or x > 0) and (not ylog or y > 0)
        ]
        clean[name] = kept
        pts_all.extend(kept)
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="14">{title}</text>',
    ]
    if pts_all:
        xs = [p[0] for p in pts_all]
        ys = [p[1] for p in pts_all]
        xlo, xhi = min(xs), max(xs)
        ylo, yhi = min(ys), max(ys)
        if xlo == xhi:
            xlo, xhi = xlo * 0.9 if xlo else -1.0, xhi * 1.1 if xhi else 1.0
        if ylo == yhi:
            ylo, yhi = ylo * 0.9 if ylo else -1.0, yhi * 1.1 if yhi else 1.0

        def sx(x: float) -> float:
            if xlog:
                f = (math.log10(x) - math.log10(xlo)) / (math.log10(xhi) - math.log10(xlo))
            else:
                f = (x - xlo) / (xhi - xlo)
            return _ML + f * (_W - _ML - _MR)

        def sy(y: float) -> float:
            if ylog:
                f = (math.log10(y) - math.log10(ylo)) / (math.log10(yhi) - math.log10(ylo))
            else:
                f = (y - ylo) / (yhi - ylo)
            return _H - _MB - f * (_H - _MT - _MB)

        for tx in _ticks(xlo, xhi, xlog):
            if tx < xlo or tx > xhi:
                continue
            px = sx(tx)
            body.append(
                f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" y2="{_MT}" '
                'stroke="#ddd" stroke-width="1"/>'
            )
            body.append(
                f'<text x="{px:.1f}" y="{_H - _MB + 16}" text-anchor="middle">{_fmt(tx)}</text>'
            )
        for ty in _ticks(ylo, yhi, ylog):
            if ty < ylo or ty > yhi:
                continue
            py = sy(ty)
            body.append(
                f'<line x1="{_ML}" y1="{py:.1f}" x2="{_W - _MR}" y2="{py:.1f}" '
                'stroke="#ddd" stroke-width="1"/>'
            )
            body.append(
                f'<text x="{_ML - 6}" y="{py + 4:.1f}" text-anchor="end">{_fmt(ty)}</text>'
            )
        for i, (name, pts) in enumerate(clean.items()):
            if not pts:
                continue
            color = _PALETTE[i % len(_PALETTE)]
            d = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
            body.append(
                f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.6"/>'
            )
            ly = _MT + 14 + 14 * i
            body.append(
                f'<line x1="{_W - _MR - 150}" y1="{ly - 4}" x2="{_W - _MR - 128}" '
                f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
            )
            body.append(f'<text x="{_W - _MR - 122}" y="{ly}">{name}</text>')
    body.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="#333"/>'
    )
    body.append(
        f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>'
    )
    body.append(
        f'<text x="16" y="{_H / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_H / 2})">{ylabel}</text>'
    )
    body.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(body) + "\n")
