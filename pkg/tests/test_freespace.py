import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from activecoreset import (
    CrossPolytope,
    Ellipsoid,
    FreeSpaceExhaustedError,
    SamplerState,
    batch_free_space,
    cross_polytope_bound,
    gjk_distance,
    gjk_intersects,
    remove_polytope,
    sample,
    sample_many,
    triangulate_bounds,
)
from activecoreset.freespace import TriangulatedFreeSpace, removed_volume


def diamond(center, r):
    return CrossPolytope(np.asarray(center, dtype=float), np.eye(len(center)) * r)


def random_polytope(rng, d, lo=0.0, hi=4.0):
    A = rng.standard_normal((d, d))
    E = Ellipsoid(rng.uniform(lo, hi, d), A @ A.T / 0.3 + np.eye(d) * 4.0)
    return cross_polytope_bound(E)


# -- GJK --------------------------------------------------------------------


def test_gjk_shared_edge():
    assert gjk_intersects([[0, 0], [1, 0], [0, 1]], [[1, 0], [0, 1], [1, 1]])


def test_gjk_separated_squares():
    a = np.array(list(itertools.product([0, 1], [0, 1])), dtype=float)
    hit, dist = gjk_distance(a, a + 3.0)
    assert not hit and math.isclose(dist, 2 * math.sqrt(2), rel_tol=1e-9)


def test_gjk_point_in_triangle():
    assert gjk_intersects([[0.2, 0.2]], [[0, 0], [1, 0], [0, 1]])


@given(st.integers(0, 100_000))
def test_gjk_agrees_with_lp(seed):
    from scipy.optimize import linprog

    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 4))
    A = rng.standard_normal((d + 1, d))
    B = rng.standard_normal((d + 1, d)) + rng.uniform(-3, 3, d)
    # conv(A) and conv(B) meet iff some convex weights agree
    n, m = len(A), len(B)
    Aeq = np.zeros((d + 2, n + m))
    Aeq[:d, :n] = A.T
    Aeq[:d, n:] = -B.T
    Aeq[d, :n] = 1
    Aeq[d + 1, n:] = 1
    res = linprog(np.zeros(n + m), A_eq=Aeq, b_eq=np.r_[np.zeros(d), 1, 1], bounds=[(0, None)] * (n + m),
                  method="highs")
    hit, dist = gjk_distance(A, B)
    if res.status == 0:
        assert hit or dist < 1e-7
    else:
        assert not hit or dist < 1e-7


# -- triangulation ----------------------------------------------------------


def test_unit_square():
    fs = triangulate_bounds([[0, 0], [1, 1]])
    assert len(fs) == 2 and math.isclose(fs.total_volume, 1.0)


def test_box_2x3():
    assert math.isclose(triangulate_bounds([[0, 0], [2, 3]]).total_volume, 6.0)


def test_unit_cube():
    fs = triangulate_bounds([[0, 0, 0], [1, 1, 1]])
    assert 5 <= len(fs) <= 6
    vols = [abs(np.linalg.det(s[1:] - s[0])) / 6 for s in fs.simplices]
    assert math.isclose(sum(vols), 1.0)


def test_square_minus_diamond():
    fs = triangulate_bounds([[0, 0], [4, 4]])
    remove_polytope(fs, diamond([2, 2], 1.0))
    assert math.isclose(fs.total_volume, 14.0, rel_tol=1e-9)


def test_polytope_outside_leaves_fs_alone():
    fs = triangulate_bounds([[0, 0], [4, 4]])
    before = {i: r.simplex.copy() for i, r in fs.regions.items()}
    remove_polytope(fs, diamond([10, 10], 1.0))
    assert set(fs.regions) == set(before)
    assert math.isclose(fs.total_volume, 16.0)


def test_removal_order_commutes():
    a, b = diamond([1, 1], 0.5), diamond([3, 2.5], 0.8)
    f1 = triangulate_bounds([[0, 0], [4, 4]])
    remove_polytope(remove_polytope(f1, a), b)
    f2 = triangulate_bounds([[0, 0], [4, 4]])
    remove_polytope(remove_polytope(f2, b), a)
    assert math.isclose(f1.total_volume, f2.total_volume, rel_tol=1e-9)


def test_unaffected_ids_survive_and_ids_are_fresh():
    fs = triangulate_bounds([[0, 0], [4, 4]])
    remove_polytope(fs, diamond([1, 1], 0.3))
    keep = {i: fs.regions[i].simplex.copy() for i in fs.regions}
    seen = set(fs.regions)
    C = diamond([3.2, 3.2], 0.3)
    from activecoreset.freespace import affected_regions

    hit = set(affected_regions(fs, C))
    remove_polytope(fs, C)
    for i in set(keep) - hit:
        np.testing.assert_array_equal(fs.regions[i].simplex, keep[i])
    new = set(fs.regions) - set(keep)
    assert new and min(new) > max(seen)


def test_exhaustion():
    fs = triangulate_bounds([[0, 0], [1, 1]])
    with pytest.raises(FreeSpaceExhaustedError):
        remove_polytope(fs, diamond([0.5, 0.5], 2.0))
    empty = TriangulatedFreeSpace(np.array([[0.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(FreeSpaceExhaustedError):
        sample(empty, SamplerState(0))


def _check_structure(fs, polys, rng):
    S = fs.simplices
    # volume bookkeeping
    np.testing.assert_allclose(fs.volumes, [abs(np.linalg.det(s[1:] - s[0])) / math.factorial(fs.dim) for s in S])
    assert np.all(fs.volumes > 0)
    # disjoint interiors: a point strictly inside one region lies in no other
    for s in S:
        c = s.mean(axis=0)
        assert fs.contains(c[None], tol=-1e-9).sum() == 1
    # no region reaches into a removed polytope
    for C in polys:
        for s in S:
            pts = s.mean(axis=0) + 0.999 * (s - s.mean(axis=0))
            assert not C.contains_strictly(pts, tol=1e-7).any()
        cents = rng.random((200, fs.dim + 1))
        cents /= cents.sum(axis=1, keepdims=True)
        assert not C.contains_strictly(np.einsum("nk,rkd->rnd", cents, S).reshape(-1, fs.dim), 1e-7).any()


def test_structure_2d():
    rng = np.random.default_rng(0)
    fs = triangulate_bounds([[0, 0], [4, 4]])
    polys = [random_polytope(rng, 2) for _ in range(4)]
    for C in polys:
        remove_polytope(fs, C)
    _check_structure(fs, polys, rng)


def test_structure_3d():
    rng = np.random.default_rng(1)
    fs = triangulate_bounds([[0, 0, 0], [4, 4, 4]])
    polys = [random_polytope(rng, 3) for _ in range(2)]
    for C in polys:
        remove_polytope(fs, C)
    _check_structure(fs, polys, rng)


def test_constrained_delaunay_empty_circumcircles():
    """Away from the removed polygon's edges no vertex sits inside a circumcircle."""
    fs = triangulate_bounds([[0, 0], [4, 4]])
    remove_polytope(fs, diamond([2, 2], 1.0))
    S = fs.simplices
    verts = np.unique(S.reshape(-1, 2), axis=0)
    C = fs.removed[0]
    for s in S:
        a, b, c = s
        M = 2 * np.array([b - a, c - a])
        centre = np.linalg.solve(M, [b @ b - a @ a, c @ c - a @ a])
        r2 = float((a - centre) @ (a - centre))
        inside = np.sum((verts - centre) ** 2, axis=1) < r2 * (1 - 1e-9)
        for v in verts[inside]:
            # a visible vertex inside the circle would violate the (constrained) Delaunay property;
            # the only permitted ones are hidden behind the hole
            mid = 0.5 * (v + s.mean(axis=0))
            assert C.contains_strictly(mid[None], 0.0)[0] or _segment_hits(C, v, s.mean(axis=0))


def _segment_hits(C, a, b):
    t = np.linspace(0, 1, 200)[:, None]
    return bool(C.contains_strictly(a + t * (b - a), 1e-9).any())


@pytest.mark.parametrize("d", [2, 3])
def test_volume_conservation(d):
    rng = np.random.default_rng(10 + d)
    bounds = np.array([[0.0] * d, [4.0] * d])
    polys = []
    fs = triangulate_bounds(bounds)
    for _ in range(3):
        C = random_polytope(rng, d, 0.5, 3.5)
        polys.append(C)
        remove_polytope(fs, C)
    # union of the clipped polytopes, by Monte Carlo on a fine grid in 2-D and exact pairwise sums when disjoint
    pts = rng.uniform(0, 4, (400_000, d))
    covered = np.zeros(len(pts), dtype=bool)
    for C in polys:
        covered |= C.contains(pts)
    union = covered.mean() * 4.0**d
    assert abs(fs.total_volume + union - 4.0**d) <= 4.0**d * 4e-3
    if not any(gjk_intersects(a.vertices, b.vertices) for a, b in itertools.combinations(polys, 2)):
        exact = sum(removed_volume(bounds, C) for C in polys)
        assert math.isclose(fs.total_volume + exact, 4.0**d, rel_tol=1e-6)


@pytest.mark.parametrize("d,count", [(2, 6), (3, 3)])
def test_incremental_equals_batch(d, count):
    rng = np.random.default_rng(d)
    bounds = np.array([[0.0] * d, [4.0] * d])
    polys = [random_polytope(rng, d, 0.3, 3.7) for _ in range(count)]
    inc = triangulate_bounds(bounds)
    for C in polys:
        remove_polytope(inc, C)
    bat = batch_free_space(bounds, polys)
    assert math.isclose(inc.total_volume, bat.total_volume, rel_tol=1e-6)
    n = 200 if d == 2 else 30
    axes = [(np.arange(n) + 0.5) * 4.0 / n for _ in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    # grid points exactly on a polytope edge may go either way
    border = np.zeros(len(grid), dtype=bool)
    for C in polys:
        border |= np.abs(C.l1_coords(grid) - 1.0) < 1e-9
    a, b = inc.contains(grid, 1e-9), bat.contains(grid, 1e-9)
    assert np.array_equal(a[~border], b[~border])


# -- sampling ---------------------------------------------------------------


def _two_regions():
    fs = TriangulatedFreeSpace(np.array([[0.0, 0.0], [3.0, 2.0]]))
    fs._add(np.array([[0, 0], [3, 0], [0, 2]], dtype=float))   # area 3
    fs._add(np.array([[3, 0], [3, 2], [2, 2]], dtype=float))   # area 1
    fs.version += 1
    return fs


def test_selection_frequencies():
    fs = _two_regions()
    state = SamplerState(0)
    from activecoreset.freespace import region_indices

    idx = region_indices(fs, state, 10_000)
    share = np.bincount(idx, minlength=2) / 10_000
    assert abs(share[0] - 0.75) <= 0.02 and abs(share[1] - 0.25) <= 0.02


def test_single_region_samples_stay_inside():
    fs = triangulate_bounds([[0, 0], [1, 1]])
    fs.regions.pop(min(fs.regions))
    fs.version += 1
    pts = sample_many(fs, SamplerState(1), 2000)
    assert fs.contains(pts).all()


def test_no_samples_in_removed_polytope():
    fs = triangulate_bounds([[0, 0], [4, 4]])
    C = diamond([2, 2], 1.3)
    remove_polytope(fs, C)
    pts = sample_many(fs, SamplerState(2), 100_000)
    assert not C.contains_strictly(pts, 0.0).any()


def test_uniform_inside_simplex_chi2():
    s = np.array([[0.0, 0.0], [2.0, 0.5], [0.3, 1.7]])
    fs = TriangulatedFreeSpace(np.array([[0.0, 0.0], [2.0, 2.0]]))
    fs._add(s)
    fs.version += 1
    pts = sample_many(fs, SamplerState(3), 50_000)
    lam = np.linalg.solve(np.array([s[1] - s[0], s[2] - s[0]]).T, (pts - s[0]).T).T
    l1, l2 = lam[:, 0], lam[:, 1]
    # the 4x4 barycentric subdivision: 16 congruent sub-triangles of equal area
    i, j = np.floor(4 * l1).astype(int), np.floor(4 * l2).astype(int)
    upper = (4 * l1 - i) + (4 * l2 - j) > 1
    cell = (i * 4 + j) * 2 + upper
    valid = [(a * 4 + b) * 2 + u for a in range(4) for b in range(4) for u in (0, 1) if a + b + u <= 3]
    counts = np.array([np.sum(cell == v) for v in valid])
    assert counts.sum() == len(pts) and len(valid) == 16
    assert chisquare(counts).pvalue > 0.01


def test_sampler_deterministic():
    fs = _two_regions()
    a = sample_many(fs, SamplerState(9), 100)
    b = sample_many(fs, SamplerState(9), 100)
    np.testing.assert_array_equal(a, b)


@given(st.integers(0, 10_000))
def test_volumes_sum(seed):
    rng = np.random.default_rng(seed)
    fs = triangulate_bounds([[0, 0], [4, 4]])
    C = random_polytope(rng, 2)
    try:
        remove_polytope(fs, C)
    except FreeSpaceExhaustedError:
        return
    assert math.isclose(fs.total_volume, float(sum(r.volume for r in fs.regions.values())), rel_tol=1e-9)
    assert math.isclose(fs.total_volume + removed_volume(fs.bounds, C), 16.0, rel_tol=1e-6)
