"""Minimal self-contained SVG plots. Each file embeds its data as an XML comment."""

from __future__ import annotations

import math
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_plot", "heatmap", "bar_histogram", "write_svg"]

_W, _H = 640, 400
_M = dict(left=60, right=140, top=40, bottom=50)
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def _data_comment(series: Mapping[str, tuple]) -> str:
    lines = []
    for name, (xs, ys) in series.items():
        pts = " ".join(f"{float(x):g}:{float(y):g}" for x, y in zip(xs, ys))
        lines.append(f"{name} {pts}")
    body = "\n".join(lines).replace("--", "- -")
    return f"<!-- data\n{body}\n-->"


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{(_M["left"] + _W - _M["right"]) / 2}" y="{_H - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{_H / 2}" text-anchor="middle" transform="rotate(-90 15 {_H / 2})">{escape(ylabel)}</text>',
    ]


def _scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _axes(xlo, xhi, ylo, yhi, sx, sy) -> list[str]:
    x0, x1 = _M["left"], _W - _M["right"]
    y0, y1 = _H - _M["bottom"], _M["top"]
    out = [f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
           f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>']
    for v in np.linspace(xlo, xhi, 5):
        out.append(f'<text x="{sx(v):.1f}" y="{y0 + 16}" text-anchor="middle">{v:.4g}</text>')
    for v in np.linspace(ylo, yhi, 5):
        out.append(f'<text x="{x0 - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    return out


def line_plot(series: Mapping[str, tuple[Sequence[float], Sequence[float]]], title: str = "",
              xlabel: str = "", ylabel: str = "", step: bool = False) -> str:
    """Overlay of named ``(x, y)`` series; NaN points break the line."""
    finite = [(np.asarray(x, float), np.asarray(y, float)) for x, y in series.values()]
    xs = np.concatenate([x for x, _ in finite]) if finite else np.array([0.0, 1.0])
    ys = np.concatenate([y[np.isfinite(y)] for _, y in finite]) if finite else np.array([0.0, 1.0])
    xlo, xhi = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
    ylo, yhi = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    sx = _scale(xlo, xhi, _M["left"], _W - _M["right"])
    sy = _scale(ylo, yhi, _H - _M["bottom"], _M["top"])
    out = _frame(title, xlabel, ylabel) + _axes(xlo, xhi, ylo, yhi, sx, sy)
    for k, (name, (x, y)) in enumerate(zip(series, finite)):
        color = _COLORS[k % len(_COLORS)]
        runs, cur = [], []
        for xv, yv in zip(x, y):
            if math.isfinite(yv):
                cur.append((sx(xv), sy(yv)))
            elif cur:
                runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        for pts in runs:
            if step:
                path = []
                for i, (px, py) in enumerate(pts):
                    if i:
                        path.append(f"{px:.1f},{pts[i - 1][1]:.1f}")
                    path.append(f"{px:.1f},{py:.1f}")
            else:
                path = [f"{px:.1f},{py:.1f}" for px, py in pts]
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(path)}"/>')
        ly = _M["top"] + 18 * k
        out.append(f'<rect x="{_W - _M["right"] + 10}" y="{ly}" width="12" height="3" fill="{color}"/>')
        out.append(f'<text x="{_W - _M["right"] + 28}" y="{ly + 5}">{escape(str(name))}</text>')
    out.append(_data_comment({n: (x, y) for n, (x, y) in zip(series, finite)}))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(matrix: np.ndarray, row_labels: Sequence[float], col_labels: Sequence[float],
            title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Grey-scale heatmap of values in [0, 1]; row 0 is drawn at the top."""
    m = np.asarray(matrix, dtype=float)
    nr, nc = m.shape
    x0, y0 = _M["left"], _M["top"]
    cw = (_W - _M["left"] - _M["right"]) / nc
    ch = (_H - _M["top"] - _M["bottom"]) / nr
    out = _frame(title, xlabel, ylabel)
    for i in range(nr):
        for j in range(nc):
            v = min(max(m[i, j], 0.0), 1.0) if math.isfinite(m[i, j]) else 0.0
            shade = int(round(255 * (1 - v)))
            out.append(f'<rect x="{x0 + j * cw:.1f}" y="{y0 + i * ch:.1f}" width="{cw:.1f}" height="{ch:.1f}" '
                       f'fill="rgb({shade},{shade},{shade})"><title>{m[i, j]:.3f}</title></rect>')
        out.append(f'<text x="{x0 - 6}" y="{y0 + (i + 0.5) * ch + 4:.1f}" text-anchor="end">{row_labels[i]:g}</text>')
    for j in range(nc):
        out.append(f'<text x="{x0 + (j + 0.5) * cw:.1f}" y="{y0 + nr * ch + 16:.1f}" text-anchor="middle">{col_labels[j]:g}</text>')
    body = "\n".join(",".join(f"{v:g}" for v in row) for row in m)
    out.append(f"<!-- data\n{body}\n-->")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_histogram(edges: Sequence[float], counts: Sequence[int], title: str = "",
                  xlabel: str = "", ylabel: str = "count", markers: Sequence[float] = ()) -> str:
    """Histogram bars, with optional vertical markers (e.g. true drift times)."""
    edges = np.asarray(edges, dtype=float)
    counts = np.asarray(counts, dtype=float)
    ymax = float(counts.max()) if counts.size and counts.max() > 0 else 1.0
    sx = _scale(edges[0], edges[-1], _M["left"], _W - _M["right"])
    sy = _scale(0.0, ymax, _H - _M["bottom"], _M["top"])
    out = _frame(title, xlabel, ylabel) + _axes(edges[0], edges[-1], 0.0, ymax, sx, sy)
    for a, b, c in zip(edges[:-1], edges[1:], counts):
        if c > 0:
            out.append(f'<rect x="{sx(a):.2f}" y="{sy(c):.2f}" width="{max(sx(b) - sx(a), 0.5):.2f}" '
                       f'height="{sy(0) - sy(c):.2f}" fill="{_COLORS[0]}"/>')
    for g in markers:
        out.append(f'<line x1="{sx(g):.1f}" y1="{sy(0):.1f}" x2="{sx(g):.1f}" y2="{sy(ymax):.1f}" '
                   f'stroke="{_COLORS[1]}" stroke-dasharray="4 3"/>')
    nz = np.nonzero(counts)[0]
    out.append(_data_comment({"counts": (edges[nz], counts[nz])}))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, svg: str) -> None:
    with open(path, "w") as fh:
        fh.write(svg)
