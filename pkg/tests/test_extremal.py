import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from activecoreset import (
    BoxShape,
    ConvergenceError,
    EllipsoidShape,
    PreconditionError,
    farthest,
    make_analytic_oracle,
)
from activecoreset.extremal import build_orthonormal_basis

from conftest import random_convex_polygon, random_polytope_3d, unit_meta

EPS = 0.01


def test_disk_support(disk_oracle):
    r = farthest(disk_oracle, EPS, [1.0, 0.0], [0.0, 0.0], t_max=4.0)
    assert abs(r.support_value - 1.0) <= EPS
    assert np.linalg.norm(r.point - [1.0, 0.0]) <= 0.2
    assert disk_oracle.query(r.point)


def test_box_face():
    o = make_analytic_oracle([BoxShape([0, 0], [1, 1])], unit_meta())
    r = farthest(o, EPS, [0.0, 1.0], [0.5, 0.5], t_max=4.0)
    assert abs(r.support_value - 1.0) <= EPS


def test_ellipse_support():
    o = make_analytic_oracle([EllipsoidShape.from_axes([0, 0], [2.0, 1.0])], unit_meta())
    r = farthest(o, EPS, [1.0, 0.0], [0.0, 0.0], t_max=6.0)
    assert abs(r.support_value - 2.0) <= EPS
    u = np.array([1.0, 1.0]) / math.sqrt(2)
    r = farthest(o, EPS, u, [0.0, 0.0], t_max=6.0)
    assert abs(r.support_value - math.sqrt(2.5)) <= 2 * EPS


def test_seed_outside(disk_oracle):
    with pytest.raises(PreconditionError):
        farthest(disk_oracle, EPS, [1.0, 0.0], [5.0, 0.0], t_max=4.0)


def test_sweep_cap_reports_best_iterate():
    o = make_analytic_oracle([EllipsoidShape.ellipse([0, 0], [2.0, 0.2], 0.6)], unit_meta())
    u = np.array([0.0, 1.0])
    with pytest.raises(ConvergenceError) as info:
        farthest(o, 1e-4, u, [0.0, 0.0], t_max=6.0, max_sweeps=1, radial=False)
    assert info.value.best is not None and info.value.gap >= 0.5e-4
    r = farthest(o, 1e-4, u, [0.0, 0.0], t_max=6.0, max_sweeps=1, radial=False, strict=False)
    assert r.iterations == 1


@pytest.mark.parametrize("u,d", [([0.0, 1.0], 2), ([1.0, 0.0, 0.0], 3)])
def test_basis_completes_direction(u, d):
    B = build_orthonormal_basis(np.array(u), d)
    np.testing.assert_allclose(B @ B.T, np.eye(d), atol=1e-10)
    np.testing.assert_allclose(B[-1], u)


@given(st.integers(0, 10_000))
def test_basis_random_direction(seed):
    u = np.random.default_rng(seed).standard_normal(5)
    u /= np.linalg.norm(u)
    B = build_orthonormal_basis(u, 5)
    np.testing.assert_allclose(B @ B.T, np.eye(5), atol=1e-10)
    np.testing.assert_allclose(B[-1], u, atol=1e-12)


def test_basis_rejects_non_unit():
    with pytest.raises(ValueError):
        build_orthonormal_basis(np.array([1.0, 1.0]))


@given(st.integers(0, 10_000), st.floats(0, 2 * math.pi))
def test_polygon_support_matches_vertices(seed, theta):
    rng = np.random.default_rng(seed)
    shape = random_convex_polygon(rng)
    o = make_analytic_oracle([shape], unit_meta())
    u = np.array([math.cos(theta), math.sin(theta)])
    p = shape.vertices.mean(axis=0)
    r = farthest(o, EPS, u, p, t_max=6.0)
    exact = float(np.max(shape.vertices @ u))
    assert r.support_value <= exact + 1e-9
    assert exact - r.support_value <= EPS
    assert o.query(r.point)


@pytest.mark.parametrize("seed", range(6))
def test_polytope_3d_support(seed):
    rng = np.random.default_rng(seed)
    shape = random_polytope_3d(rng)
    o = make_analytic_oracle([shape], unit_meta(3))
    for _ in range(4):
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        r = farthest(o, EPS, u, np.zeros(3), t_max=6.0)
        assert float(np.max(shape.vertices @ u)) - r.support_value <= EPS


def test_monotone_ascent_across_sweep_caps():
    """More sweeps never give a lower support value."""
    o = make_analytic_oracle([EllipsoidShape.ellipse([0, 0], [2.0, 0.3], 0.4)], unit_meta())
    u = np.array([0.0, 1.0])
    vals = [farthest(o, 1e-3, u, [0.5, 0.1], t_max=6.0, max_sweeps=k, strict=False, radial=False).support_value
            for k in range(1, 6)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_query_budget_regression():
    """Queries grow like d^2 log(d R / (r eps)); the constant is fitted on this suite."""
    rng = np.random.default_rng(7)
    ratios = []
    for d, make in ((2, random_convex_polygon), (3, random_polytope_3d)):
        for _ in range(4):
            shape = make(rng)
            o = make_analytic_oracle([shape], unit_meta(d))
            u = rng.standard_normal(d)
            u /= np.linalg.norm(u)
            r = farthest(o, EPS, u, np.asarray(shape.vertices).mean(axis=0), t_max=6.0)
            ratios.append(r.queries_used / (d * d * math.log(d * 3.0 / (0.05 * EPS))))
    assert max(ratios) <= 60.0
