"""Minimal self-contained SVG emitter: line charts and scatter plots.

Display-only artifacts; no plotting dependency.  Values <= 0 are dropped
on log-scale axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WIDTH, HEIGHT = 720, 480
MARGIN = 56
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"]


@dataclass
class Chart:
    title: str
    x_label: str = "k"
    y_label: str = ""
    log_y: bool = False
    lines: list = field(default_factory=list)    # (label, x, y, dashed)
    points: list = field(default_factory=list)   # (label, x, y)
    hlines: list = field(default_factory=list)   # (label, value)

    def add_line(self, label, x, y, dashed=False):
        self.lines.append((label, np.asarray(x, float), np.asarray(y, float), dashed))

    def add_points(self, label, x, y):
        self.points.append((label, np.asarray(x, float), np.asarray(y, float)))

    def add_hline(self, label, value):
        self.hlines.append((label, float(value)))

    # -- rendering ----------------------------------------------------------

    def _finite_xy(self):
        xs, ys = [], []
        for _, x, y, _ in self.lines:
            m = np.isfinite(x) & np.isfinite(y)
            if self.log_y:
                m &= y > 0
            xs.append(x[m])
            ys.append(y[m])
        for _, x, y in self.points:
            m = np.isfinite(x) & np.isfinite(y)
            if self.log_y:
                m &= y > 0
            xs.append(x[m])
            ys.append(y[m])
        for _, v in self.hlines:
            if math.isfinite(v) and (not self.log_y or v > 0):
                ys.append(np.array([v]))
        xs = np.concatenate(xs) if xs else np.array([0.0, 1.0])
        ys = np.concatenate(ys) if ys else np.array([0.0, 1.0])
        return xs, ys

    def render(self) -> str:
        xs, ys = self._finite_xy()
        x_lo, x_hi = float(xs.min()), float(xs.max())
        if self.log_y:
            ys = np.log10(ys)
        y_lo, y_hi = float(ys.min()), float(ys.max())
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        if y_hi <= y_lo:
            y_hi = y_lo + 1.0
        pad = 0.05 * (y_hi - y_lo)
        y_lo -= pad
        y_hi += pad
        inner_w = WIDTH - 2 * MARGIN
        inner_h = HEIGHT - 2 * MARGIN

        def px(x):
            return MARGIN + (x - x_lo) / (x_hi - x_lo) * inner_w

        def py(y):
            if self.log_y:
                y = math.log10(y) if y > 0 else y_lo
            return HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * inner_h

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="15">{self.title}</text>',
            f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
            f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
            f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
            f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
            f'font-size="12">{self.x_label}</text>',
            f'<text x="16" y="{HEIGHT / 2}" font-size="12" '
            f'transform="rotate(-90 16 {HEIGHT / 2})" text-anchor="middle">'
            f'{self.y_label}{" (log10)" if self.log_y else ""}</text>',
        ]
        # axis ticks
        for i in range(5):
            xv = x_lo + i * (x_hi - x_lo) / 4
            yv = y_lo + i * (y_hi - y_lo) / 4
            parts.append(f'<text x="{px(xv):.1f}" y="{HEIGHT - MARGIN + 16}" '
                         f'text-anchor="middle" font-size="10">{xv:.4g}</text>')
            label = yv if not self.log_y else yv
            parts.append(f'<text x="{MARGIN - 6}" '
                         f'y="{HEIGHT - MARGIN - i * inner_h / 4 + 4:.1f}" '
                         f'text-anchor="end" font-size="10">{label:.4g}</text>')
        color = 0
        legend_y = MARGIN + 4
        for label, x, y, dashed in self.lines:
            m = np.isfinite(x) & np.isfinite(y)
            if self.log_y:
                m &= y > 0
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[m], y[m]))
            dash = ' stroke-dasharray="6 4"' if dashed else ""
            col = PALETTE[color % len(PALETTE)]
            parts.append(f'<polyline points="{pts}" fill="none" '
                         f'stroke="{col}" stroke-width="1.5"{dash}/>')
            parts.append(f'<text x="{WIDTH - MARGIN - 150}" y="{legend_y}" '
                         f'font-size="11" fill="{col}">{label}</text>')
            legend_y += 15
            color += 1
        for label, x, y in self.points:
            col = PALETTE[color % len(PALETTE)]
            m = np.isfinite(x) & np.isfinite(y)
            if self.log_y:
                m &= y > 0
            for a, b in zip(x[m], y[m]):
                parts.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="1.6" '
                             f'fill="{col}" fill-opacity="0.45"/>')
            parts.append(f'<text x="{WIDTH - MARGIN - 150}" y="{legend_y}" '
                         f'font-size="11" fill="{col}">{label}</text>')
            legend_y += 15
            color += 1
        for label, v in self.hlines:
            if self.log_y and v <= 0:
                continue
            col = PALETTE[color % len(PALETTE)]
            parts.append(f'<line x1="{MARGIN}" y1="{py(v):.2f}" '
                         f'x2="{WIDTH - MARGIN}" y2="{py(v):.2f}" '
                         f'stroke="{col}" stroke-dasharray="2 3"/>')
            parts.append(f'<text x="{WIDTH - MARGIN - 150}" y="{legend_y}" '
                         f'font-size="11" fill="{col}">{label}</text>')
            legend_y += 15
            color += 1
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())
