"""Deterministic CSV/JSON writers and small hand-rolled SVG renders."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .spaces import GridSpace, SpaceKind


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path, data) -> Path:
    path = Path(path)
    text = json.dumps(_clean(json.loads(json.dumps(data, default=_plain))), indent=2, sort_keys=True)
    path.write_text(text + "\n")
    return path


def write_csv(path, rows, columns) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k)) for k in columns})
    return path


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# svg ------------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _svg(width: int, height: int, body: list) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>"]) + "\n"


def line_chart(series: dict, title: str, xlabel: str = "index", ylabel: str = "", hlines=None) -> str:
    """Polyline chart of named 1-D series; optional dashed horizontal reference lines."""
    w, h, pad = 640, 360, 50
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys] + [np.array(list((hlines or {}).values()), dtype=float)])
    top = float(finite.max()) if finite.size else 1.0
    top = top if top > 0 else 1.0
    n = max(len(y) for y in ys)
    sx = lambda i: pad + (w - 2 * pad) * i / max(1, n - 1)
    sy = lambda v: h - pad - (h - 2 * pad) * v / top
    body = [
        f'<text x="{w / 2:.0f}" y="20" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h - pad}" stroke="black"/>',
        f'<text x="{w / 2:.0f}" y="{h - 12}" text-anchor="middle">{xlabel}</text>',
        f'<text x="12" y="{h / 2:.0f}" transform="rotate(-90 12 {h / 2:.0f})" text-anchor="middle">{ylabel}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end">{top:.4g}</text>',
        f'<text x="{pad - 4}" y="{h - pad + 4}" text-anchor="end">0</text>',
        f'<text x="{w - pad}" y="{h - pad + 14}" text-anchor="end">{n - 1}</text>',
    ]
    for k, (name, v) in enumerate((hlines or {}).items()):
        body.append(
            f'<line x1="{pad}" y1="{sy(v):.2f}" x2="{w - pad}" y2="{sy(v):.2f}" stroke="gray" stroke-dasharray="4 3"/>'
            f'<text x="{w - pad + 2}" y="{sy(v) + 4:.2f}">{name}</text>'
        )
    for k, (name, y) in enumerate(zip(series, ys)):
        pts = " ".join(f"{sx(i):.2f},{sy(v):.2f}" for i, v in enumerate(y) if np.isfinite(v))
        color = _PALETTE[k % len(_PALETTE)]
        body.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        body.append(f'<text x="{pad + 8}" y="{pad + 14 * (k + 1)}" fill="{color}">{name}</text>')
    return _svg(w, h, body)


def _runs(mask: np.ndarray) -> list:
    m = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(m))
    return list(zip(edges[::2], edges[1::2]))


def filmstrip(space: GridSpace, masks, labels=None, title: str = "") -> str:
    """One horizontal bar per set; occupied cells drawn as filled runs."""
    masks = np.atleast_2d(masks)
    w, row, pad = 640, 18, 60
    h = 40 + row * len(masks)
    scale = (w - pad - 20) / space.size
    body = [f'<text x="{w / 2:.0f}" y="18" text-anchor="middle" font-size="13">{title}</text>']
    for r, m in enumerate(masks):
        y = 30 + r * row
        label = labels[r] if labels is not None else str(r)
        body.append(f'<text x="{pad - 6}" y="{y + row - 6}" text-anchor="end">{label}</text>')
        body.append(f'<rect x="{pad}" y="{y + 2}" width="{w - pad - 20}" height="{row - 4}" fill="#eeeeee"/>')
        for a, b in _runs(m):
            body.append(
                f'<rect x="{pad + a * scale:.2f}" y="{y + 2}" width="{max((b - a) * scale, 0.5):.2f}" '
                f'height="{row - 4}" fill="#1f77b4"/>'
            )
    return _svg(w, h, body)


def circle_rings(space: GridSpace, masks, title: str = "") -> str:
    """Concentric annuli, one per set, with occupied arcs filled (circle space only)."""
    if space.kind is not SpaceKind.CIRCLE:
        raise ValueError("circle_rings needs the circle space")
    masks = np.atleast_2d(masks)
    size = 420
    c = size / 2
    width = min(14.0, 150.0 / len(masks))
    body = [f'<text x="{c:.0f}" y="16" text-anchor="middle" font-size="13">{title}</text>']
    for r, m in enumerate(masks):
        rad = 50 + r * width
        body.append(f'<circle cx="{c}" cy="{c}" r="{rad + width / 2:.2f}" fill="none" stroke="#eeeeee" stroke-width="{width - 1:.2f}"/>')
        for a, b in _runs(m):
            t0, t1 = 2 * math.pi * a / space.size, 2 * math.pi * b / space.size
            x0, y0 = c + (rad + width / 2) * math.cos(t0), c - (rad + width / 2) * math.sin(t0)
            x1, y1 = c + (rad + width / 2) * math.cos(t1), c - (rad + width / 2) * math.sin(t1)
            large = 1 if t1 - t0 > math.pi else 0
            body.append(
                f'<path d="M {x0:.2f} {y0:.2f} A {rad + width / 2:.2f} {rad + width / 2:.2f} 0 {large} 0 {x1:.2f} {y1:.2f}" '
                f'fill="none" stroke="#1f77b4" stroke-width="{width - 1:.2f}"/>'
            )
    return _svg(size, size, body)


def heatmap_strip(xs, values, title: str = "", label: str = "") -> str:
    """Colour strip of ``values`` over a 1-D sweep ``xs``; missing values drawn black."""
    xs = np.asarray(xs, dtype=float)
    vals = np.array([np.nan if v is None else v for v in values], dtype=float)
    w, h, pad = 640, 120, 40
    top = np.nanmax(vals) if np.isfinite(vals).any() else 1.0
    cw = (w - 2 * pad) / max(1, len(xs))
    body = [f'<text x="{w / 2:.0f}" y="18" text-anchor="middle" font-size="13">{title}</text>']
    for i, v in enumerate(vals):
        if np.isfinite(v):
            t = v / top if top > 0 else 0.0
            color = f"rgb({int(255 * (1 - t))},{int(120 + 100 * t)},{int(255 * t)})"
        else:
            color = "black"
        body.append(f'<rect x="{pad + i * cw:.2f}" y="30" width="{cw + 0.2:.2f}" height="50" fill="{color}"/>')
    body.append(f'<text x="{pad}" y="96">{xs.min():.4g}</text>')
    body.append(f'<text x="{w - pad}" y="96" text-anchor="end">{xs.max():.4g}</text>')
    body.append(f'<text x="{w / 2:.0f}" y="110" text-anchor="middle">{label} (max {top:.4g}; black = none)</text>')
    return _svg(w, h, body)


def write_svg(path, text: str) -> Path:
    path = Path(path)
    path.write_text(text)
    return path
