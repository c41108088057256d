"""CSV, JSON and SVG output."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .energy import GridFunction
from .exceptions import ParameterError
from .grid import Grid


def fmt(x: float) -> str:
    """17 significant digits: round-trips every double exactly."""
    return f"{float(x):.17g}"


def write_gridfunction_csv(path, u: GridFunction) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "u"])
        for x, v in zip(u.grid.nodes, u.values):
            wr.writerow([fmt(x), fmt(v)])


def read_gridfunction_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(x, u)`` arrays from a file written by :func:`write_gridfunction_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["x", "u"]:
        raise ParameterError(f"{path}: expected header 'x,u'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ParameterError(f"{path}: malformed row ({exc})") from exc
    if data.size == 0:
        raise ParameterError(f"{path}: no data rows")
    return data[:, 0], data[:, 1]


def gridfunction_from_csv(path, grid: Grid, atol: float = 1e-9) -> GridFunction:
    x, v = read_gridfunction_csv(path)
    if x.size != grid.n_nodes:
        raise ParameterError(f"{path}: {x.size} nodes, grid has {grid.n_nodes}")
    if np.max(np.abs(x - grid.nodes)) > atol * max(1.0, grid.L + grid.length):
        raise ParameterError(f"{path}: node coordinates do not match the grid")
    return GridFunction(grid, v)


def write_rows_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([fmt(c) if isinstance(c, (float, np.floating)) else c for c in row])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, payload: dict) -> None:
    """Deterministic JSON (sorted keys, non-finite values as null)."""
    Path(path).write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# SVG
# --------------------------------------------------------------------------
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def svg_plot(series: list[tuple[str, np.ndarray, np.ndarray]], title: str = "",
             vlines: Optional[list[tuple[str, float]]] = None, width: int = 640,
             height: int = 400, markers: bool = False) -> str:
    """Minimal line plot: one polyline per ``(label, x, y)`` and optional
    labelled vertical markers."""
    vlines = vlines or []
    xs = np.concatenate([np.asarray(s[1], float) for s in series] + [np.array([v for _, v in vlines])])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    xs, ys = xs[np.isfinite(xs)], ys[np.isfinite(ys)]
    x0, x1 = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
    y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 50

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
           'fill="none" stroke="#888"/>',
           f'<text x="{width / 2:.1f}" y="{pad / 2:.1f}" text-anchor="middle" '
           f'font-family="sans-serif" font-size="14">{_esc(title)}</text>',
           f'<text x="{pad}" y="{height - pad / 3:.1f}" font-family="sans-serif" font-size="11">{x0:.4g}</text>',
           f'<text x="{width - pad}" y="{height - pad / 3:.1f}" text-anchor="end" '
           f'font-family="sans-serif" font-size="11">{x1:.4g}</text>',
           f'<text x="{pad - 4}" y="{py(y0):.1f}" text-anchor="end" font-family="sans-serif" '
           f'font-size="11">{y0:.4g}</text>',
           f'<text x="{pad - 4}" y="{py(y1):.1f}" text-anchor="end" font-family="sans-serif" '
           f'font-size="11">{y1:.4g}</text>']
    for k, (label, x, y) in enumerate(series):
        col = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y)
                       if math.isfinite(a) and math.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        if markers:
            out += [f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="{col}"/>'
                    for a, b in zip(x, y) if math.isfinite(a) and math.isfinite(b)]
        out.append(f'<text x="{width - pad - 4}" y="{pad + 16 * (k + 1)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="12" fill="{col}">{_esc(label)}</text>')
    for label, v in vlines:
        out.append(f'<line x1="{px(v):.2f}" y1="{pad}" x2="{px(v):.2f}" y2="{height - pad}" '
                   'stroke="#444" stroke-dasharray="4 3"/>')
        out.append(f'<text x="{px(v) + 4:.2f}" y="{pad + 14}" font-family="sans-serif" '
                   f'font-size="11">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
