"""Triangulated free space: simplices tiling the workspace minus removed polytopes.

Removal is local. Only simplices that GJK reports as touching the polytope
are rebuilt; in the plane their union minus the polytope is re-triangulated
by constrained Delaunay (shapely / GEOS), in 3-D each tetrahedron is cut into
convex pieces by the polytope's facet planes and each piece is Delaunay
triangulated.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import shapely
from scipy.spatial import ConvexHull, Delaunay, QhullError
from shapely.geometry import Polygon
from shapely.ops import unary_union

from . import kernels
from .errors import FreeSpaceExhaustedError
from .gjk import gjk_intersects
from .mvee import CrossPolytope
from .oracle import simplex_volume

# simplices below this fraction of the workspace volume are numerical dust
_DUST = 1e-13


@dataclass(frozen=True)
class Region:
    id: int
    simplex: np.ndarray

    @property
    def volume(self) -> float:
        return simplex_volume(self.simplex[1:] - self.simplex[0])


@dataclass
class TriangulatedFreeSpace:
    bounds: np.ndarray
    regions: Dict[int, Region] = field(default_factory=dict)
    removed: List[CrossPolytope] = field(default_factory=list)
    next_id: int = 0
    version: int = 0

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float)
        self._cache = None

    @property
    def dim(self) -> int:
        return self.bounds.shape[1]

    @property
    def bounds_volume(self) -> float:
        return float(np.prod(self.bounds[1] - self.bounds[0]))

    def _arrays(self):
        if self._cache is None or self._cache[0] != self.version:
            ids = np.array(sorted(self.regions), dtype=np.int64)
            simplices = np.array([self.regions[i].simplex for i in ids]).reshape(len(ids), self.dim + 1, self.dim)
            vols = np.array([self.regions[i].volume for i in ids])
            self._cache = (self.version, ids, simplices, vols)
        return self._cache[1:]

    @property
    def ids(self) -> np.ndarray:
        return self._arrays()[0]

    @property
    def simplices(self) -> np.ndarray:
        return self._arrays()[1]

    @property
    def volumes(self) -> np.ndarray:
        return self._arrays()[2]

    @property
    def total_volume(self) -> float:
        return float(self.volumes.sum())

    def __len__(self):
        return len(self.regions)

    def _add(self, simplex) -> Optional[int]:
        simplex = np.asarray(simplex, dtype=float)
        if simplex_volume(simplex[1:] - simplex[0]) <= _DUST * self.bounds_volume:
            return None
        rid = self.next_id
        self.next_id += 1
        self.regions[rid] = Region(rid, simplex)
        return rid

    def contains(self, pts, tol: float = 1e-12) -> np.ndarray:
        """Whether each point lies in some region (closed simplices)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        S = self.simplices
        out = np.zeros(len(pts), dtype=bool)
        if len(S) == 0:
            return out
        T = np.transpose(S[:, 1:] - S[:, :1], (0, 2, 1))
        Tinv = np.linalg.inv(T)
        for k in range(0, len(pts), 2048):
            P = pts[k:k + 2048]
            rel = P[None, :, :] - S[:, None, 0, :]
            lam = np.einsum("rij,rpj->rpi", Tinv, rel)
            lam0 = 1.0 - lam.sum(axis=2)
            ok = (lam >= -tol).all(axis=2) & (lam0 >= -tol)
            out[k:k + 2048] = ok.any(axis=0)
        return out

    def copy(self) -> "TriangulatedFreeSpace":
        fs = TriangulatedFreeSpace(self.bounds.copy(), dict(self.regions), list(self.removed), self.next_id, self.version)
        return fs

    def to_json(self) -> str:
        return json.dumps([self.regions[i].simplex.tolist() for i in sorted(self.regions)])


def triangulate_bounds(bounds) -> TriangulatedFreeSpace:
    """Delaunay triangulation of an axis-aligned box (2 triangles, or 6 tetrahedra)."""
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds
    if bounds.shape[0] != 2 or np.any(hi <= lo):
        raise ValueError("bounds must be a nonempty (2, d) box")
    d = lo.size
    if d not in (2, 3):
        raise ValueError("free-space triangulation supports d = 2 or 3")
    fs = TriangulatedFreeSpace(bounds)
    corners = np.array(list(itertools.product(*zip(lo, hi))), dtype=float)
    if d == 2:
        # corners are (lo,lo),(lo,hi),(hi,lo),(hi,hi)
        fs._add(corners[[0, 2, 3]])
        fs._add(corners[[0, 3, 1]])
    else:
        # Kuhn split along the main diagonal: one tetrahedron per axis order
        for perm in itertools.permutations(range(3)):
            pts = [lo.copy()]
            cur = lo.copy()
            for ax in perm:
                cur = cur.copy()
                cur[ax] = hi[ax]
                pts.append(cur)
            fs._add(np.array(pts))
    fs.version += 1
    return fs


# ---------------------------------------------------------------------------
# removal
# ---------------------------------------------------------------------------


def _clip_halfspace(V, a, b, tol=1e-12):
    """Vertices of ``conv(V) ∩ {a x <= b}`` (possibly with extra non-extreme points)."""
    s = V @ a - b
    keep = V[s <= tol]
    if len(keep) == 0:
        return keep
    if len(keep) == len(V):
        return V
    inside = np.where(s <= tol)[0]
    outside = np.where(s > tol)[0]
    si, so = s[inside][:, None], s[outside][None, :]
    t = si / (si - so)
    P = V[inside][:, None, :] + t[..., None] * (V[outside][None, :, :] - V[inside][:, None, :])
    return np.vstack([keep, P.reshape(-1, V.shape[1])])


def _prune(V, scale):
    """Hull vertices of ``V``; ``None`` when the hull is flat."""
    if len(V) <= V.shape[1]:
        return None
    try:
        hull = ConvexHull(V)
    except QhullError:
        return None
    if hull.volume <= _DUST * scale:
        return None
    return V[hull.vertices]


def _subtract_3d(simplex, A, b, scale):
    """Convex pieces of ``simplex \\ {A x <= b}``: piece k lies beyond facet k and inside facets < k."""
    pieces = []
    V = simplex
    for k in range(len(A)):
        P = _clip_halfspace(V, -A[k], -b[k])
        if len(P):
            P = _prune(P, scale)
            if P is not None:
                pieces.append(P)
        V = _clip_halfspace(V, A[k], b[k])
        if len(V) == 0:
            break
        V = _prune(V, scale)
        if V is None:
            break
    out = []
    for P in pieces:
        try:
            tri = Delaunay(P)
        except QhullError:
            continue
        out.extend(P[s] for s in tri.simplices)
    return out


def _subtract_2d(simplices, C: CrossPolytope, dust):
    union = unary_union([Polygon(s) for s in simplices])
    hole = Polygon(C.vertices[_ring_order(C)])
    rest = union.difference(hole)
    if rest.is_empty:
        return []
    tris = shapely.constrained_delaunay_triangles(rest)
    out = []
    for g in tris.geoms:
        if g.area > dust:
            out.append(np.array(g.exterior.coords[:3]))
    return out


def _ring_order(C: CrossPolytope):
    V = C.vertices - C.center
    return np.argsort(np.arctan2(V[:, 1], V[:, 0]))


def affected_regions(fs: TriangulatedFreeSpace, C: CrossPolytope) -> List[int]:
    """Ids of regions whose simplex meets ``conv(C)`` (GJK distance 0)."""
    S = fs.simplices
    ids = fs.ids
    if len(ids) == 0:
        return []
    V = C.vertices
    # bounding-box prefilter before the exact GJK test
    lo, hi = V.min(axis=0), V.max(axis=0)
    near = np.all(S.max(axis=1) >= lo - 1e-12, axis=1) & np.all(S.min(axis=1) <= hi + 1e-12, axis=1)
    return [int(i) for i, s in zip(ids[near], S[near]) if gjk_intersects(s, V)]


def remove_polytope(fs: TriangulatedFreeSpace, C: CrossPolytope, *, local: bool = True) -> TriangulatedFreeSpace:
    """Subtract ``conv(C)`` from the free space, in place; returns ``fs``.

    With ``local=False`` every region is rebuilt (the batch reference).
    """
    hit = affected_regions(fs, C) if local else [int(i) for i in fs.ids]
    fs.removed.append(C)
    if not hit:
        return fs
    old = [fs.regions[i].simplex for i in hit]
    scale = fs.bounds_volume
    if fs.dim == 2:
        new = _subtract_2d(old, C, _DUST * scale)
    else:
        A, b = C.halfspaces()
        new = []
        for s in old:
            if local or gjk_intersects(s, C.vertices):
                new.extend(_subtract_3d(s, A, b, scale))
            else:
                new.append(s)
    for i in hit:
        del fs.regions[i]
    for s in new:
        fs._add(s)
    fs.version += 1
    if not fs.regions or fs.total_volume <= _DUST * scale:
        raise FreeSpaceExhaustedError("removing the polytope leaves no free space")
    return fs


def batch_free_space(bounds, polytopes) -> TriangulatedFreeSpace:
    """Free space built in one pass: the box minus all polytopes, triangulated once."""
    fs = triangulate_bounds(bounds)
    if fs.dim == 2:
        box = shapely.box(*fs.bounds[0], *fs.bounds[1])
        holes = unary_union([Polygon(C.vertices[_ring_order(C)]) for C in polytopes]) if polytopes else None
        rest = box.difference(holes) if holes is not None else box
        out = TriangulatedFreeSpace(fs.bounds, removed=list(polytopes))
        if not rest.is_empty:
            for g in shapely.constrained_delaunay_triangles(rest).geoms:
                out._add(np.array(g.exterior.coords[:3]))
        out.version += 1
        if not out.regions:
            raise FreeSpaceExhaustedError("polytopes cover the whole workspace")
        return out
    for C in polytopes:
        remove_polytope(fs, C, local=False)
    return fs


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


class SamplerState:
    """Per-caller rng plus the cumulative volume table of one free-space version."""

    def __init__(self, seed=None):
        self.rng = np.random.default_rng(seed)
        self._version = None
        self.cumulative = None

    def table(self, fs: TriangulatedFreeSpace) -> np.ndarray:
        if self._version != (id(fs), fs.version):
            self.cumulative = np.cumsum(fs.volumes)
            self._version = (id(fs), fs.version)
        return self.cumulative


def region_indices(fs: TriangulatedFreeSpace, state: SamplerState, n: int) -> np.ndarray:
    """Positions (into ``fs.ids``) of ``n`` volume-proportional region draws."""
    cum = state.table(fs)
    if len(cum) == 0 or cum[-1] <= 0:
        raise FreeSpaceExhaustedError("no free space to sample from")
    r = state.rng.random(n) * cum[-1]
    return np.minimum(np.searchsorted(cum, r, side="right"), len(cum) - 1)


def uniform_barycentric(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Uniform points of the standard d-simplex: gaps of sorted uniforms."""
    u = np.sort(rng.random((n, d)), axis=1)
    edges = np.concatenate([np.zeros((n, 1)), u, np.ones((n, 1))], axis=1)
    return np.diff(edges, axis=1)


def sample_many(fs: TriangulatedFreeSpace, state: SamplerState, n: int) -> np.ndarray:
    idx = region_indices(fs, state, n)
    bary = uniform_barycentric(state.rng, n, fs.dim)
    return kernels.simplex_points(fs.simplices, idx, bary)


def sample(fs: TriangulatedFreeSpace, state: SamplerState) -> np.ndarray:
    return sample_many(fs, state, 1)[0]


def removed_volume(bounds, C: CrossPolytope) -> float:
    """Volume of ``conv(C)`` clipped to the box (diagnostic)."""
    bounds = np.asarray(bounds, dtype=float)
    V = C.vertices
    d = V.shape[1]
    for ax in range(d):
        e = np.zeros(d)
        e[ax] = 1.0
        V = _clip_halfspace(V, e, bounds[1, ax])
        if len(V) == 0:
            return 0.0
        V = _clip_halfspace(V, -e, -bounds[0, ax])
        if len(V) == 0:
            return 0.0
    try:
        return float(ConvexHull(V).volume)
    except QhullError:
        return 0.0
