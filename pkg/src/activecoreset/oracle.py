"""Membership oracles over R^d.

An oracle answers a single bit per point: is it inside some obstacle? Every
algorithm in the package touches obstacle geometry only through ``query`` and
``query_many``, and each answered point is counted in :class:`OracleStats`.
"""
from __future__ import annotations

import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull

from . import kernels
from .errors import DegenerateHullError, PreconditionError
from .pgm import read_pgm

_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class WorkspaceMeta:
    """Static description of the state space and the obstacle-size assumptions.

    ``eps`` is the approximation parameter (also the separation parameter and
    the lower bound on an obstacle's inner ball). ``precision`` optionally
    decouples the absolute ray-search tolerance from ``eps``; ``None`` lets each
    discovery pick a tolerance relative to the obstacle's own extent.
    ``min_gap`` is the smallest distance between two obstacles, if known; ray
    searches then never stride further than that.
    """

    dim: int
    bounds: np.ndarray
    eps: float
    inradius_lb: float
    circumradius_ub: float
    precision: Optional[float] = None
    min_gap: Optional[float] = None

    def __post_init__(self):
        bounds = np.asarray(self.bounds, dtype=float)
        object.__setattr__(self, "bounds", bounds)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if bounds.shape != (2, self.dim):
            raise ValueError(f"bounds must have shape (2, {self.dim}), got {bounds.shape}")
        if np.any(bounds[1] <= bounds[0]):
            raise ValueError("bounds must be a nonempty box (lo < hi on every axis)")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.inradius_lb < self.eps:
            raise ValueError("inradius_lb must be >= eps")
        if self.inradius_lb > self.circumradius_ub:
            raise ValueError("inradius_lb must be <= circumradius_ub")
        if self.precision is not None and self.precision <= 0:
            raise ValueError("precision must be positive")
        if self.min_gap is not None and self.min_gap <= 0:
            raise ValueError("min_gap must be positive")

    @property
    def max_step(self) -> Optional[float]:
        """Ray-search stride cap, a little under ``min_gap``."""
        return None if self.min_gap is None else 0.9 * self.min_gap

    @property
    def t_max(self) -> float:
        """Longest chord any single obstacle can have."""
        return 2.0 * self.circumradius_ub

    @property
    def volume(self) -> float:
        return float(np.prod(self.bounds[1] - self.bounds[0]))

    def in_bounds(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.bounds[0]) and np.all(p <= self.bounds[1]))


@dataclass
class OracleStats:
    total_queries: int = 0
    queries_true: int = 0

    def copy(self) -> "OracleStats":
        return OracleStats(self.total_queries, self.queries_true)

    def __sub__(self, other: "OracleStats") -> "OracleStats":
        return OracleStats(self.total_queries - other.total_queries, self.queries_true - other.queries_true)


class MembershipOracle(ABC):
    """Binary membership function with exact query accounting.

    Subclasses implement ``_contains`` on an ``(n, d)`` array. Instances are
    immutable after construction; the counters are guarded by a lock so
    concurrent queries produce exact totals once quiescent.
    """

    def __init__(self, dim: int):
        self.dim = int(dim)
        self._lock = threading.Lock()
        self._total = 0
        self._true = 0

    @abstractmethod
    def _contains(self, pts: np.ndarray) -> np.ndarray:
        ...

    def query(self, p) -> bool:
        pts = np.asarray(p, dtype=float).reshape(1, self.dim)
        hit = bool(self._contains(pts)[0])
        with self._lock:
            self._total += 1
            self._true += hit
        return hit

    def query_many(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        hits = np.asarray(self._contains(pts), dtype=bool)
        with self._lock:
            self._total += hits.size
            self._true += int(hits.sum())
        return hits

    def peek_many(self, pts) -> np.ndarray:
        """Ground-truth lookup that bypasses the counters (evaluation only)."""
        return np.asarray(self._contains(np.asarray(pts, dtype=float).reshape(-1, self.dim)), dtype=bool)

    def stats(self) -> OracleStats:
        with self._lock:
            return OracleStats(self._total, self._true)

    def reset_stats(self) -> None:
        with self._lock:
            self._total = 0
            self._true = 0


class RecordingOracle(MembershipOracle):
    """Counts its own queries and keeps every point that answered true.

    Each kept point is tagged with its query ordinal (0-based, in asking
    order), so the hits seen within any window of the query stream can be
    recovered afterwards.
    """

    def __init__(self, inner: MembershipOracle):
        super().__init__(inner.dim)
        self.inner = inner
        self._pts = []
        self._at = []

    def _contains(self, pts):
        hits = self.inner.peek_many(pts)
        if hits.any():
            with self._lock:
                self._pts.append(pts[hits].copy())
                self._at.append(self._total + np.flatnonzero(hits))
        return hits

    def peek_many(self, pts):
        return self.inner.peek_many(pts)

    def hits(self, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
        """True points among queries ``start <= ordinal < stop``."""
        with self._lock:
            if not self._pts:
                return np.empty((0, self.dim))
            pts = np.concatenate(self._pts)
            at = np.concatenate(self._at)
        keep = at >= start
        if stop is not None:
            keep &= at < stop
        return pts[keep]


# ---------------------------------------------------------------------------
# Convex shape descriptors
# ---------------------------------------------------------------------------


class ConvexShape(ABC):
    dim: int

    @abstractmethod
    def contains(self, pts: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def support(self, u) -> float:
        """max over the shape of <x, u>."""

    @abstractmethod
    def boundary_samples(self, n: int, rng: np.random.Generator) -> np.ndarray:
        ...

    @abstractmethod
    def to_dict(self) -> dict:
        ...

    @property
    @abstractmethod
    def volume(self) -> float:
        ...

    def width(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return self.support(u) + self.support(-u)


class EllipsoidShape(ConvexShape):
    """Closed set ``{x : (x-c)^T A (x-c) <= 1}``."""

    def __init__(self, center, A):
        self.center = np.asarray(center, dtype=float).ravel()
        self.A = np.asarray(A, dtype=float)
        self.dim = self.center.size
        if self.A.shape != (self.dim, self.dim):
            raise ValueError("shape matrix does not match center dimension")
        if not np.allclose(self.A, self.A.T):
            raise ValueError("shape matrix must be symmetric")
        if np.linalg.eigvalsh(self.A).min() <= 0:
            raise ValueError("shape matrix must be positive definite")
        self._Ainv = np.linalg.inv(self.A)

    @classmethod
    def ball(cls, center, radius):
        center = np.asarray(center, dtype=float).ravel()
        return cls(center, np.eye(center.size) / radius**2)

    @classmethod
    def from_axes(cls, center, radii, rotation=None):
        """Axis-aligned radii rotated by ``rotation`` (columns are the axes)."""
        radii = np.asarray(radii, dtype=float)
        R = np.eye(radii.size) if rotation is None else np.asarray(rotation, dtype=float)
        return cls(center, R @ np.diag(1.0 / radii**2) @ R.T)

    @classmethod
    def ellipse(cls, center, radii, angle=0.0):
        c, s = math.cos(angle), math.sin(angle)
        return cls.from_axes(center, radii, np.array([[c, -s], [s, c]]))

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return kernels.quadform(self.center, self.A, pts) <= 1.0 + _BOUNDARY_TOL

    def support(self, u):
        u = np.asarray(u, dtype=float)
        return float(self.center @ u + math.sqrt(u @ self._Ainv @ u))

    def boundary_samples(self, n, rng):
        z = rng.standard_normal((n, self.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        w, V = np.linalg.eigh(self._Ainv)
        root = V @ np.diag(np.sqrt(w)) @ V.T
        return self.center + z @ root.T

    @property
    def volume(self):
        return unit_ball_volume(self.dim) / math.sqrt(np.linalg.det(self.A))

    def to_dict(self):
        return {"type": "ellipsoid", "center": self.center.tolist(), "matrix": self.A.tolist()}


class PolytopeShape(ConvexShape):
    """Convex hull of a vertex list, stored as halfspaces ``A x <= b``."""

    def __init__(self, vertices):
        V = np.asarray(vertices, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        self.dim = V.shape[1]
        if V.shape[0] < self.dim + 1 or np.linalg.matrix_rank(V[1:] - V[0], tol=1e-12) < self.dim:
            raise DegenerateHullError(
                f"polytope needs at least {self.dim + 1} affinely independent vertices"
            )
        if self.dim == 1:
            lo, hi = V.min(), V.max()
            self.vertices = np.array([[lo], [hi]])
            self.A = np.array([[-1.0], [1.0]])
            self.b = np.array([-lo, hi])
            self._volume = hi - lo
            self._facets = None
        else:
            hull = ConvexHull(V)
            self.vertices = V[hull.vertices]
            self.A = hull.equations[:, :-1].copy()
            self.b = -hull.equations[:, -1]
            self._volume = float(hull.volume)
            self._facets = V[hull.simplices]
        self._scale = float(np.abs(self.vertices).max()) + 1.0

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return kernels.halfspace_contains(self.A, self.b, pts, _BOUNDARY_TOL * self._scale)

    def support(self, u):
        return float(np.max(self.vertices @ np.asarray(u, dtype=float)))

    def boundary_samples(self, n, rng):
        if self.dim == 1:
            return self.vertices[rng.integers(0, 2, n)]
        F = self._facets
        if self.dim == 2:
            sizes = np.linalg.norm(F[:, 1] - F[:, 0], axis=1)
        else:
            sizes = np.array([simplex_volume(f[1:] - f[0]) for f in F])
        idx = rng.choice(len(F), size=n, p=sizes / sizes.sum())
        gaps = np.diff(np.sort(rng.random((n, self.dim - 1)), axis=1), prepend=0.0, append=1.0)
        return np.einsum("ij,ijk->ik", gaps, F[idx])

    @property
    def volume(self):
        return self._volume

    def to_dict(self):
        return {"type": "polytope", "vertices": self.vertices.tolist()}


class BoxShape(PolytopeShape):
    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float).ravel()
        self.hi = np.asarray(hi, dtype=float).ravel()
        corners = np.array(np.meshgrid(*zip(self.lo, self.hi), indexing="ij")).reshape(self.lo.size, -1).T
        super().__init__(corners)

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        tol = _BOUNDARY_TOL * self._scale
        return np.all((pts >= self.lo - tol) & (pts <= self.hi + tol), axis=1)

    def to_dict(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


def shape_from_dict(desc: dict) -> ConvexShape:
    """Build a shape from a JSON-style descriptor.

    Recognised ``type`` values: ``disk``/``ball`` (center, radius), ``ellipse``
    (center, radii, angle in radians), ``ellipsoid`` (center, matrix or radii
    [+ rotation]), ``box`` (lo, hi), ``polygon``/``polytope`` (vertices).
    """
    kind = desc.get("type")
    if kind in ("disk", "ball", "circle", "sphere"):
        return EllipsoidShape.ball(desc["center"], float(desc["radius"]))
    if kind == "ellipse":
        return EllipsoidShape.ellipse(desc["center"], desc["radii"], float(desc.get("angle", 0.0)))
    if kind == "ellipsoid":
        if "matrix" in desc:
            return EllipsoidShape(desc["center"], desc["matrix"])
        return EllipsoidShape.from_axes(desc["center"], desc["radii"], desc.get("rotation"))
    if kind == "box":
        return BoxShape(desc["lo"], desc["hi"])
    if kind in ("polygon", "polytope", "segment"):
        return PolytopeShape(desc["vertices"])
    raise ValueError(f"unknown shape type {kind!r}")


class AnalyticOracle(MembershipOracle):
    def __init__(self, shapes: Sequence[ConvexShape], dim: int):
        super().__init__(dim)
        self.shapes = tuple(shapes)
        for s in self.shapes:
            if s.dim != dim:
                raise ValueError(f"shape of dimension {s.dim} in a {dim}-d workspace")

    def _contains(self, pts):
        out = np.zeros(pts.shape[0], dtype=bool)
        for s in self.shapes:
            out |= s.contains(pts)
        return out


def make_analytic_oracle(shapes, meta: WorkspaceMeta) -> AnalyticOracle:
    built = [s if isinstance(s, ConvexShape) else shape_from_dict(s) for s in shapes]
    return AnalyticOracle(built, meta.dim)


class BitmapOracle(MembershipOracle):
    """Pixel lookup on a grayscale image; dark pixels (``<= threshold``) are obstacles.

    World coordinates map to pixels by ``col = floor((x - x0)/res)`` and
    ``row = height - 1 - floor((y - y0)/res)``, i.e. image row 0 is the top of
    the map. Points outside the image are free.
    """

    def __init__(self, image, origin=(0.0, 0.0), resolution=1.0, threshold=128):
        super().__init__(2)
        self.image = np.ascontiguousarray(image, dtype=np.uint8)
        self.origin = np.asarray(origin, dtype=float)
        self.resolution = float(resolution)
        self.threshold = int(threshold)

    @property
    def shape(self):
        return self.image.shape

    def _contains(self, pts):
        return kernels.bitmap_lookup(self.image, self.origin, self.resolution, pts, self.threshold)

    def obstacle_mask(self) -> np.ndarray:
        return self.image <= self.threshold

    def pixel_centers(self) -> np.ndarray:
        """World coordinates of every pixel centre, shaped ``(h, w, 2)``."""
        h, w = self.image.shape
        xs = self.origin[0] + (np.arange(w) + 0.5) * self.resolution
        ys = self.origin[1] + (h - 1 - np.arange(h) + 0.5) * self.resolution
        X, Y = np.meshgrid(xs, ys)
        return np.stack([X, Y], axis=-1)

    def pixel_of(self, pts) -> np.ndarray:
        """``(row, col)`` of each point; meaningless for points outside the image."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        h = self.image.shape[0]
        cols = np.floor((pts[:, 0] - self.origin[0]) / self.resolution).astype(np.int64)
        rows = h - 1 - np.floor((pts[:, 1] - self.origin[1]) / self.resolution).astype(np.int64)
        return np.stack([rows, cols], axis=1)


def make_bitmap_oracle(map_file, threshold: int = 128, meta: Optional[WorkspaceMeta] = None,
                       origin=None, resolution=None) -> BitmapOracle:
    image = read_pgm(Path(map_file))
    if meta is not None and meta.dim != 2:
        raise PreconditionError("bitmap maps are 2-D only")
    if origin is None:
        origin = meta.bounds[0] if meta is not None else (0.0, 0.0)
    if resolution is None:
        resolution = (meta.bounds[1, 0] - meta.bounds[0, 0]) / image.shape[1] if meta is not None else 1.0
    return BitmapOracle(image, origin, resolution, threshold)


def directional_width(oracle: MembershipOracle, seed, u, eps: float, t_max: float) -> float:
    """Extent of the obstacle containing ``seed`` along ``u``, within ``2 * eps``."""
    from .extremal import farthest

    u = np.asarray(u, dtype=float)
    hi = farthest(oracle, eps, u, seed, t_max=t_max)
    lo = farthest(oracle, eps, -u, seed, t_max=t_max)
    return hi.support_value + lo.support_value


# ---------------------------------------------------------------------------
# small geometric helpers shared across modules
# ---------------------------------------------------------------------------


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def simplex_volume(edges: np.ndarray) -> float:
    """Volume of the simplex spanned by the rows of ``edges`` (k vectors in R^d)."""
    edges = np.atleast_2d(edges)
    k = edges.shape[0]
    if k == edges.shape[1]:
        # sqrt of a Gram determinant turns rounding noise into a visible volume
        return abs(float(np.linalg.det(edges))) / math.factorial(k)
    G = edges @ edges.T
    return math.sqrt(max(np.linalg.det(G), 0.0)) / math.factorial(k)
