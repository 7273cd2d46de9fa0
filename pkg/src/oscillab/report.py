"""Deterministic report writers: RFC-4180 CSV with 17-significant-digit
floats, JSON with stable key order, and a hand-rendered SVG 1.1 log-log
plot.  Reruns of the same scenario must be byte-identical, so nothing here
emits timestamps, ids, or environment-dependent strings."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

PLOT_FLOOR = 1e-16

SVG_WIDTH = 800
SVG_HEIGHT = 600
MARGIN_LEFT = 80
MARGIN_RIGHT = 30
MARGIN_TOP = 40
MARGIN_BOTTOM = 60


def format_float(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, float) and (math.isinf(obj) or math.isnan(obj)):
        return format_float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_sanitize(obj), sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# SVG log-log plot


def _decades(lo: float, hi: float):
    start = math.floor(math.log10(lo))
    stop = math.ceil(math.log10(hi))
    return list(range(start, stop + 1))


class _LogLogFrame:
    def __init__(self, x_range, y_range):
        self.x0 = math.log10(x_range[0])
        self.x1 = math.log10(x_range[1])
        self.y0 = math.log10(y_range[0])
        self.y1 = math.log10(y_range[1])
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x: float) -> float:
        t = (math.log10(x) - self.x0) / (self.x1 - self.x0)
        return MARGIN_LEFT + t * (SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT)

    def py(self, y: float) -> float:
        t = (math.log10(y) - self.y0) / (self.y1 - self.y0)
        return SVG_HEIGHT - MARGIN_BOTTOM - t * (SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)


def emit_plot(samples: Sequence, path, envelope: Sequence | None = None,
              bound: Sequence | None = None, title: str = "",
              x_label: str = "lambda", y_label: str = "|F|",
              floor: float = PLOT_FLOOR) -> None:
    """Log-log SVG with sample markers (circles), optional envelope polyline,
    and optional bound line.  Zero samples are clipped to `floor` and drawn
    with a distinct cross marker.  Layout is deterministic."""
    samples = [(float(x), float(y)) for x, y in samples]
    if not samples:
        raise ValueError("emit_plot requires at least one sample")
    xs = [x for x, _ in samples]
    clipped = [(x, max(y, floor), y <= floor) for x, y in samples]
    ys_pos = [y for _, y, _ in clipped]
    for series in (envelope, bound):
        if series:
            ys_pos.extend(max(float(y), floor) for _, y in series)
    frame = _LogLogFrame((min(xs), max(xs)), (min(ys_pos), max(ys_pos)))

    parts = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">')
    parts.append(f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>')
    if title:
        parts.append(f'<text x="{SVG_WIDTH / 2:.1f}" y="24" text-anchor="middle" '
                     f'font-family="monospace" font-size="15">{title}</text>')

    x_axis_y = SVG_HEIGHT - MARGIN_BOTTOM
    parts.append(f'<line x1="{MARGIN_LEFT}" y1="{x_axis_y}" x2="{SVG_WIDTH - MARGIN_RIGHT}" '
                 f'y2="{x_axis_y}" stroke="black" stroke-width="1"/>')
    parts.append(f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
                 f'y2="{x_axis_y}" stroke="black" stroke-width="1"/>')

    for dec in _decades(10 ** frame.x0, 10 ** frame.x1):
        x = 10.0 ** dec
        if not (10 ** frame.x0 - 1e-12 <= x <= 10 ** frame.x1 + 1e-12):
            continue
        px = frame.px(x)
        parts.append(f'<line x1="{px:.3f}" y1="{x_axis_y}" x2="{px:.3f}" '
                     f'y2="{x_axis_y + 6}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{px:.3f}" y="{x_axis_y + 22}" text-anchor="middle" '
                     f'font-family="monospace" font-size="12">1e{dec}</text>')
    for dec in _decades(10 ** frame.y0, 10 ** frame.y1):
        y = 10.0 ** dec
        if not (10 ** frame.y0 / 1.0001 <= y <= 10 ** frame.y1 * 1.0001):
            continue
        py = frame.py(y)
        parts.append(f'<line x1="{MARGIN_LEFT - 6}" y1="{py:.3f}" x2="{MARGIN_LEFT}" '
                     f'y2="{py:.3f}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{MARGIN_LEFT - 10}" y="{py + 4:.3f}" text-anchor="end" '
                     f'font-family="monospace" font-size="12">1e{dec}</text>')
    parts.append(f'<text x="{(MARGIN_LEFT + SVG_WIDTH - MARGIN_RIGHT) / 2:.1f}" '
                 f'y="{SVG_HEIGHT - 16}" text-anchor="middle" '
                 f'font-family="monospace" font-size="13">{x_label}</text>')
    parts.append(f'<text x="20" y="{(MARGIN_TOP + x_axis_y) / 2:.1f}" text-anchor="middle" '
                 f'font-family="monospace" font-size="13" '
                 f'transform="rotate(-90 20 {(MARGIN_TOP + x_axis_y) / 2:.1f})">{y_label}</text>')

    def polyline(series, color, dashed=False):
        pts = " ".join(f"{frame.px(x):.3f},{frame.py(max(y, floor)):.3f}"
                       for x, y in series if y == y)
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"{dash}/>')

    if envelope:
        polyline(envelope, "#2ca02c")
    if bound:
        polyline(bound, "#d62728", dashed=True)

    for x, y, was_zero in clipped:
        px, py = frame.px(x), frame.py(y)
        if was_zero:
            parts.append(f'<path d="M {px - 3:.3f} {py - 3:.3f} L {px + 3:.3f} {py + 3:.3f} '
                         f'M {px - 3:.3f} {py + 3:.3f} L {px + 3:.3f} {py - 3:.3f}" '
                         f'stroke="#9467bd" stroke-width="1.5" class="zero-marker"/>')
        else:
            parts.append(f'<circle cx="{px:.3f}" cy="{py:.3f}" r="3" fill="#1f77b4" '
                         f'class="sample-marker"/>')
    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
