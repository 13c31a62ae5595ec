"""Minimal deterministic SVG writer for polylines.

Coordinates are formatted with a fixed number of significant digits so the
same geometry always produces the same bytes.
"""
from __future__ import annotations

import numpy as np

RED = "#c0392b"
BLUE = "#2463a8"
BLACK = "#222222"


def _fmt(v, digits):
    return f"{v:.{digits}g}"


def polyline_path(points, digits=7):
    """SVG path data for a sequence of complex points (y axis flipped)."""
    pts = np.asarray(points, dtype=complex)
    if pts.size == 0:
        return ""
    parts = [f"M{_fmt(pts[0].real, digits)},{_fmt(-pts[0].imag, digits)}"]
    parts += [f"L{_fmt(p.real, digits)},{_fmt(-p.imag, digits)}" for p in pts[1:]]
    return " ".join(parts)


def document(paths, bounds, width=800, stroke_width=None, background="white", digits=7):
    """Assemble an SVG document.

    Parameters
    ----------
    paths : list of (points, colour) or (points, colour, stroke_width)
        Polylines as complex arrays in model coordinates.
    bounds : (xmin, xmax, ymin, ymax)
        Model-space window; the y axis points up.
    width : int
        Pixel width; height follows the aspect ratio.
    stroke_width : float, optional
        Default stroke in model units (1/800 of the window width if omitted).
    """
    xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    span_x, span_y = xmax - xmin, ymax - ymin
    height = max(1, int(round(width * span_y / span_x)))
    if stroke_width is None:
        stroke_width = span_x / 800.0
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{_fmt(xmin, digits)} {_fmt(-ymax, digits)} {_fmt(span_x, digits)} {_fmt(span_y, digits)}">',
    ]
    if background:
        lines.append(
            f'<rect x="{_fmt(xmin, digits)}" y="{_fmt(-ymax, digits)}" width="{_fmt(span_x, digits)}" '
            f'height="{_fmt(span_y, digits)}" fill="{background}"/>'
        )
    for item in paths:
        pts, colour = item[0], item[1]
        sw = item[2] if len(item) > 2 else stroke_width
        d = polyline_path(pts, digits)
        if d:
            lines.append(
                f'<path d="{d}" fill="none" stroke="{colour}" stroke-width="{_fmt(sw, digits)}" '
                'stroke-linecap="round" stroke-linejoin="round"/>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def bounds_of(point_sets, pad=0.05):
    allpts = np.concatenate([np.asarray(p, dtype=complex).ravel() for p in point_sets if len(p)])
    xmin, xmax = allpts.real.min(), allpts.real.max()
    ymin, ymax = allpts.imag.min(), allpts.imag.max()
    half = 0.5 * max(xmax - xmin, ymax - ymin) * (1.0 + pad)
    cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
    return cx - half, cx + half, cy - half, cy + half


def write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
