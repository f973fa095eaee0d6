import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from activecoreset import EllipsoidShape, PolytopeShape, WorkspaceMeta, make_analytic_oracle

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


def unit_meta(dim=2, eps=0.01, **kw):
    bounds = np.array([[-3.0] * dim, [3.0] * dim])
    kw.setdefault("inradius_lb", 0.05)
    kw.setdefault("circumradius_ub", 3.0)
    return WorkspaceMeta(dim, bounds, eps, **kw)


def random_convex_polygon(rng, n_min=8, n_max=32, scale=1.0):
    """Hull of points on a jittered ellipse; always has at least 3 vertices."""
    n = int(rng.integers(n_min, n_max + 1))
    t = np.sort(rng.uniform(0, 2 * math.pi, n))
    a, b = rng.uniform(0.5, 1.5, 2) * scale
    rot = rng.uniform(0, math.pi)
    pts = np.stack([a * np.cos(t), b * np.sin(t)], axis=1) * rng.uniform(0.85, 1.0, (n, 1))
    R = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]])
    return PolytopeShape(pts @ R.T + rng.uniform(-0.3, 0.3, 2))


def random_polytope_3d(rng, n=20):
    z = rng.standard_normal((n, 3))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return PolytopeShape(z * rng.uniform(0.6, 1.4, 3) * rng.uniform(0.9, 1.0, (n, 1)))


@pytest.fixture
def disk():
    return EllipsoidShape.ball([0.0, 0.0], 1.0)


@pytest.fixture
def disk_oracle(disk):
    return make_analytic_oracle([disk], unit_meta())
