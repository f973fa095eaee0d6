"""Minimal deterministic SVG output for maps, trees and curves.

Numbers are printed with a fixed number of decimals and elements are emitted
in call order, so equal inputs give byte-identical files.
"""
from __future__ import annotations

from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np


def _f(x: float) -> str:
    s = f"{float(x):.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class Canvas:
    """World box ``bounds`` mapped to a ``width`` pixel wide picture, y pointing up."""

    def __init__(self, bounds, width: int = 600, margin: int = 10):
        self.bounds = np.asarray(bounds, dtype=float)[:, :2]
        lo, hi = self.bounds
        self.scale = (width - 2 * margin) / (hi[0] - lo[0])
        self.margin = margin
        self.width = width
        self.height = int(round((hi[1] - lo[1]) * self.scale)) + 2 * margin
        self.items = []

    def _xy(self, p):
        lo, hi = self.bounds
        return (self.margin + (p[0] - lo[0]) * self.scale, self.margin + (hi[1] - p[1]) * self.scale)

    def _pts(self, pts) -> str:
        return " ".join(f"{_f(x)},{_f(y)}" for x, y in (self._xy(p) for p in np.asarray(pts, dtype=float)))

    def polygon(self, pts, fill="none", stroke="black", width=1.0, opacity=1.0):
        self.items.append(f'<polygon points="{self._pts(pts)}" fill="{fill}" stroke="{stroke}" '
                          f'stroke-width="{_f(width)}" fill-opacity="{_f(opacity)}"/>')

    def polyline(self, pts, stroke="black", width=1.0):
        self.items.append(f'<polyline points="{self._pts(pts)}" fill="none" stroke="{stroke}" '
                          f'stroke-width="{_f(width)}"/>')

    def segments(self, a, b, stroke="gray", width=0.5):
        """Many segments ``a[i] -> b[i]`` as one path element."""
        parts = []
        for p, q in zip(np.asarray(a, dtype=float), np.asarray(b, dtype=float)):
            (x0, y0), (x1, y1) = self._xy(p), self._xy(q)
            parts.append(f"M{_f(x0)} {_f(y0)}L{_f(x1)} {_f(y1)}")
        if parts:
            self.items.append(f'<path d="{"".join(parts)}" stroke="{stroke}" stroke-width="{_f(width)}" '
                              f'fill="none"/>')

    def circle(self, p, r_px=3.0, fill="black"):
        x, y = self._xy(p)
        self.items.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(r_px)}" fill="{fill}"/>')

    def text(self, p, s, size=12):
        x, y = self._xy(p)
        self.items.append(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}">{escape(str(s))}</text>')

    def mask(self, mask, origin, resolution, fill="black"):
        """Row-run rectangles for the true cells of a boolean image (row 0 on top)."""
        h, w = mask.shape
        parts = []
        for r in range(h):
            row = np.concatenate([[False], mask[r], [False]])
            edges = np.flatnonzero(row[1:] != row[:-1])
            y = origin[1] + (h - 1 - r) * resolution
            for c0, c1 in zip(edges[0::2], edges[1::2]):
                x0, y0 = self._xy((origin[0] + c0 * resolution, y + resolution))
                x1, _ = self._xy((origin[0] + c1 * resolution, y))
                parts.append(f"M{_f(x0)} {_f(y0)}h{_f(x1 - x0)}v{_f(resolution * self.scale)}h{_f(x0 - x1)}z")
        if parts:
            self.items.append(f'<path d="{"".join(parts)}" fill="{fill}"/>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">')
        frame = f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="white"/>'
        return "\n".join([head, frame, *self.items, "</svg>"]) + "\n"


def shape_outline(shape, n: int = 96) -> np.ndarray:
    """Closed 2-D outline of an analytic shape (vertices for polygons, sampled for ellipses)."""
    from .oracle import EllipsoidShape, PolytopeShape

    if isinstance(shape, PolytopeShape):
        V = shape.vertices[:, :2]
        c = V.mean(axis=0)
        return V[np.argsort(np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]), kind="stable")]
    if isinstance(shape, EllipsoidShape):
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        circle = np.stack([np.cos(t), np.sin(t)], axis=1)
        w, V = np.linalg.eigh(shape.A[:2, :2])
        return shape.center[:2] + circle @ (V / np.sqrt(w)).T
    raise TypeError(f"cannot outline {type(shape).__name__}")


def render_map(bounds, *, shapes: Sequence = (), bitmap=None, polytopes: Iterable = (), regions=None,
               tree=None, path=None, start=None, goal=None, points=None, title: Optional[str] = None) -> str:
    """Obstacles, discovered cross-polytopes, free-space triangles, a tree and a path."""
    cv = Canvas(bounds)
    if bitmap is not None:
        oracle = bitmap
        cv.mask(oracle.obstacle_mask(), oracle.origin, oracle.resolution, fill="#444444")
    for s in shapes:
        cv.polygon(shape_outline(s), fill="#444444", stroke="#222222")
    if regions is not None:
        for tri in regions:
            cv.polygon(tri[:, :2], stroke="#5577cc", width=0.4)
    for C in polytopes:
        V = C.vertices[:, :2]
        order = np.argsort(np.arctan2(V[:, 1] - C.center[1], V[:, 0] - C.center[0]), kind="stable")
        cv.polygon(V[order], fill="#dd6644", stroke="#aa3311", opacity=0.35)
    if tree is not None and tree.n > 1:
        idx = np.arange(1, tree.n)
        cv.segments(tree.nodes[tree.parent[idx]], tree.nodes[idx], stroke="#88aa88", width=0.5)
    if points is not None:
        for p in np.asarray(points):
            cv.circle(p, 1.2, fill="#cc2222")
    if path is not None:
        cv.polyline(path, stroke="#1133dd", width=2.0)
    if start is not None:
        cv.circle(start, 4.0, fill="#119911")
    if goal is not None:
        cv.circle(goal, 4.0, fill="#dd1111")
    if title:
        lo, hi = cv.bounds
        cv.text((lo[0], hi[1]), title)
    return cv.render()


def render_curve(xs, ys, *, title: str = "", xlabel: str = "", ylabel: str = "", log_y: bool = False) -> str:
    """Line chart of one series with axis extents printed at the corners."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if log_y:
        ys = np.log10(np.maximum(ys, 1e-16))
    x0, x1 = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
    y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0
    pad = 0.1 * (y1 - y0)
    aspect = 0.6 * (x1 - x0) / (y1 - y0 + 2 * pad)
    ys_scaled = (ys - y0 + pad) * aspect
    cv = Canvas([[x0, 0.0], [x1, (y1 - y0 + 2 * pad) * aspect]])
    cv.polyline([[x0, 0.0], [x1, 0.0]], stroke="#999999")
    cv.polyline([[x0, 0.0], [x0, (y1 - y0 + 2 * pad) * aspect]], stroke="#999999")
    if xs.size:
        cv.polyline(np.stack([xs, ys_scaled], axis=1), stroke="#1133dd", width=1.5)
        for p in zip(xs, ys_scaled):
            cv.circle(p, 2.0, fill="#1133dd")
    prefix = "log10 " if log_y else ""
    cv.text((x0, (y1 - y0 + 2 * pad) * aspect), f"{title}  [{prefix}{ylabel}: {y0:.4g} .. {y1:.4g}]")
    cv.text((x0, 0.0), f"{xlabel}: {x0:g} .. {x1:g}", size=10)
    return cv.render()
