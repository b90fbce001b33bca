"""Minimal self-contained SVG line plots (no plotting dependency).

Just enough for the figure-style outputs: axes, ticks, polylines with a
small palette, optional log y-axis, legend. Non-finite points split a line
into segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

PALETTE = ("#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#7f8c8d")


@dataclass
class Series:
    label: str
    x: list
    y: list
    dashed: bool = False
    markers: bool = False


@dataclass
class LinePlot:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)
    logy: bool = False
    width: int = 720
    height: int = 480

    def add(self, label, x, y, dashed=False, markers=False):
        self.series.append(Series(label, list(x), list(y), dashed, markers))

    def _ticks(self, lo: float, hi: float, n: int = 6) -> list[float]:
        if hi <= lo:
            hi = lo + 1.0
        span = hi - lo
        step = 10 ** math.floor(math.log10(span / n))
        for mult in (1, 2, 5, 10):
            if span / (step * mult) <= n:
                step *= mult
                break
        first = math.ceil(lo / step) * step
        ticks = []
        t = first
        while t <= hi + 1e-12 * span:
            ticks.append(round(t, 12))
            t += step
        return ticks

    def render(self) -> str:
        ml, mr, mt, mb = 64, 16, 36, 48
        pw, ph = self.width - ml - mr, self.height - mt - mb
        xs, ys = [], []
        for s in self.series:
            for xv, yv in zip(s.x, s.y):
                if math.isfinite(xv) and math.isfinite(yv):
                    if self.logy and yv <= 0:
                        continue
                    xs.append(xv)
                    ys.append(math.log10(yv) if self.logy else yv)
        if not xs:
            xs, ys = [0.0, 1.0], [0.0, 1.0]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y1 = y0 + 1.0
        padx, pady = 0.03 * (x1 - x0), 0.06 * (y1 - y0)
        x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady

        def px(x):
            return ml + (x - x0) / (x1 - x0) * pw

        def py(y):
            return mt + ph - (y - y0) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="12">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
            f'<text x="{self.width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{self.title}</text>',
            f'<text x="{ml + pw / 2:.1f}" y="{self.height - 10}" text-anchor="middle">{self.xlabel}</text>',
            f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{self.ylabel}</text>',
        ]
        for t in self._ticks(x0 + padx, x1 - padx):
            if x0 <= t <= x1:
                out.append(f'<line x1="{px(t):.1f}" y1="{mt + ph}" x2="{px(t):.1f}" y2="{mt + ph + 5}" stroke="#444"/>')
                out.append(f'<text x="{px(t):.1f}" y="{mt + ph + 18}" text-anchor="middle">{t:g}</text>')
        for t in self._ticks(y0 + pady, y1 - pady):
            if y0 <= t <= y1:
                label = f"1e{t:g}" if self.logy else f"{t:g}"
                out.append(f'<line x1="{ml - 5}" y1="{py(t):.1f}" x2="{ml}" y2="{py(t):.1f}" stroke="#444"/>')
                out.append(f'<text x="{ml - 8}" y="{py(t) + 4:.1f}" text-anchor="end">{label}</text>')
        for i, s in enumerate(self.series):
            color = PALETTE[i % len(PALETTE)]
            dash = ' stroke-dasharray="6 4"' if s.dashed else ""
            segments, seg = [], []
            for xv, yv in zip(s.x, s.y):
                good = math.isfinite(xv) and math.isfinite(yv) and not (self.logy and yv <= 0)
                if good:
                    seg.append((px(xv), py(math.log10(yv) if self.logy else yv)))
                elif seg:
                    segments.append(seg)
                    seg = []
            if seg:
                segments.append(seg)
            for seg in segments:
                if len(seg) == 1 or s.markers:
                    for cx, cy in seg:
                        out.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="2.5" fill="{color}"/>')
                if len(seg) > 1 and not s.markers:
                    pts = " ".join(f"{cx:.1f},{cy:.1f}" for cx, cy in seg)
                    out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
            ly = mt + 16 + 16 * i
            out.append(f'<line x1="{ml + pw - 150}" y1="{ly - 4}" x2="{ml + pw - 126}" y2="{ly - 4}" stroke="{color}" stroke-width="2"{dash}/>')
            out.append(f'<text x="{ml + pw - 120}" y="{ly}">{s.label}</text>')
        out.append("</svg>")
        return "\n".join(out)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())
