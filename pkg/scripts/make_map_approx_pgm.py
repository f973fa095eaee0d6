"""Regenerate scenarios/map_approx.pgm: a 200x150 map with four convex obstacles."""
from pathlib import Path

import numpy as np

from activecoreset.oracle import EllipsoidShape, PolytopeShape
from activecoreset.pgm import write_pgm

W, H = 200, 150
SHAPES = [
    EllipsoidShape.ellipse([50, 105], [32, 22], 0.4),
    PolytopeShape([[120, 95], [175, 110], [165, 140], [118, 135]]),
    EllipsoidShape.ellipse([145, 40], [36, 20], -0.3),
    PolytopeShape([[25, 15], [80, 20], [60, 60], [30, 50]]),
]


def render() -> np.ndarray:
    xs = np.arange(W) + 0.5
    ys = H - 1 - np.arange(H) + 0.5
    pts = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    mask = np.zeros(len(pts), dtype=bool)
    for s in SHAPES:
        mask |= s.contains(pts)
    return np.where(mask.reshape(H, W), 0, 255).astype(np.uint8)


if __name__ == "__main__":
    out = Path(__file__).resolve().parent.parent / "scenarios" / "map_approx.pgm"
    img = render()
    write_pgm(out, img)
    print(f"wrote {out} ({(img == 0).mean():.1%} obstacle)")
