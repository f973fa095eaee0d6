"""Minimum-volume enclosing ellipsoids of implicit convex bodies.

The pipeline for one obstacle is

1. :func:`approx_mve_coreset` -- ``2d`` extreme points along greedily chosen
   directions, each orthogonal to the chords found so far;
2. :func:`mve_coreset` -- Khachiyan-style ascent in which the farthest point
   (in the current ellipsoid's norm) is searched through the oracle rather
   than over a finite set;
3. :func:`cross_polytope_bound` -- the ``2d`` tips of the ``sqrt(d)``-expanded
   ellipsoid, whose hull encloses the body.

Ellipsoids are ``{x : ||L (x - c)||^2 <= 1}`` with ``Q = L^T L``.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import kernels
from .errors import (
    ConvergenceError,
    DegenerateHullError,
    DegenerateObstacleError,
    OracleInconsistencyError,
    PreconditionError,
)
from .extremal import farthest
from .oracle import unit_ball_volume
from .ray_search import extreme_along_ray

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ellipsoid:
    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).ravel()
        Q = np.asarray(self.shape, dtype=float)
        if Q.shape != (c.size, c.size):
            raise ValueError("shape matrix does not match center")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-10 * max(1.0, np.abs(Q).max())):
            raise ValueError("shape matrix must be symmetric")
        Q = 0.5 * (Q + Q.T)
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise ValueError("shape matrix must be positive definite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", Q)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def factor(self) -> np.ndarray:
        """Lower-triangular ``L`` with ``Q = L^T L``."""
        J = np.eye(self.dim)[::-1]
        C = np.linalg.cholesky(J @ self.shape @ J)
        return J @ C.T @ J

    @property
    def log_volume(self) -> float:
        _, logdet = np.linalg.slogdet(self.shape)
        return math.log(unit_ball_volume(self.dim)) - 0.5 * logdet

    @property
    def volume(self) -> float:
        return math.exp(self.log_volume)

    def mahalanobis_sq(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return kernels.quadform(self.center, self.shape, pts)

    def mahalanobis(self, pts) -> np.ndarray:
        return np.sqrt(self.mahalanobis_sq(pts))

    def contains(self, pts, tol: float = 1e-9) -> np.ndarray:
        return self.mahalanobis_sq(pts) <= 1.0 + tol

    def semi_axes(self) -> np.ndarray:
        """Rows are the principal semi-axis vectors (eigvec / sqrt(eigval))."""
        w, V = np.linalg.eigh(self.shape)
        return (V / np.sqrt(w)).T

    def scaled(self, factor: float) -> "Ellipsoid":
        """``factor * (E - c) + c``."""
        return Ellipsoid(self.center, self.shape / factor**2)

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "Q": self.shape.tolist()}

    @classmethod
    def from_dict(cls, doc) -> "Ellipsoid":
        return cls(np.asarray(doc["center"]), np.asarray(doc["Q"]))


@dataclass
class CoresetPointSet:
    """Points of one obstacle; ``extremes`` holds every boundary point found on the way."""

    points: np.ndarray
    eps: float
    extremes: np.ndarray = None
    directions: np.ndarray = None

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class CrossPolytope:
    """Hull of ``center +- h_i`` for mutually orthogonal half-diagonals ``h_i``."""

    center: np.ndarray
    half_diagonals: np.ndarray
    inflation: float = 1.0

    @property
    def dim(self) -> int:
        return self.center.size

    def inner_bound(self) -> "CrossPolytope":
        """The ``1 / d^1.5`` shrink of the uninflated polytope; lies inside the body."""
        return CrossPolytope(self.center, self.half_diagonals / (self.inflation * self.dim**1.5))

    @property
    def vertices(self) -> np.ndarray:
        return np.concatenate([self.center + self.half_diagonals, self.center - self.half_diagonals])

    @property
    def frame(self) -> np.ndarray:
        """Rows map ``x - center`` to coordinates whose l1 norm is <= 1 inside."""
        H = self.half_diagonals
        return H / np.einsum("ij,ij->i", H, H)[:, None]

    def l1_coords(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return kernels.l1_frame(pts, self.center, self.frame)

    def contains(self, pts, tol: float = 1e-9) -> np.ndarray:
        return self.l1_coords(pts) <= 1.0 + tol

    def contains_strictly(self, pts, tol: float = 1e-12) -> np.ndarray:
        return self.l1_coords(pts) < 1.0 - tol

    def shrunk(self, factor: float) -> "CrossPolytope":
        return CrossPolytope(self.center, self.half_diagonals * factor, self.inflation * factor)

    @property
    def volume(self) -> float:
        d = self.dim
        return 2.0**d / math.factorial(d) * abs(np.linalg.det(self.half_diagonals))

    def halfspaces(self):
        """``(A, b)`` with the polytope equal to ``{x : A x <= b}``."""
        W = self.frame
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim)))
        A = signs @ W
        return A, 1.0 + A @ self.center

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "vertices": self.vertices.tolist(), "inflation": self.inflation}


@dataclass(frozen=True)
class StepRecord:
    kappa: float
    eps: float
    beta: float
    log_volume: float
    log_det: float
    point: np.ndarray
    queries: int


@dataclass
class StepTrace:
    records: List[StepRecord] = field(default_factory=list)
    threshold: float = 0.0
    cap: int = 0
    converged: bool = False
    final_eps: float = math.inf
    final_log_volume: float = -math.inf
    final_log_det: float = -math.inf
    queries_used: int = 0

    def __len__(self):
        return len(self.records)

    @property
    def log_volumes(self) -> np.ndarray:
        return np.array([r.log_volume for r in self.records] + [self.final_log_volume])

    @property
    def log_dets(self) -> np.ndarray:
        return np.array([r.log_det for r in self.records] + [self.final_log_det])


# ---------------------------------------------------------------------------
# Finite point sets
# ---------------------------------------------------------------------------


def _check_spanning(points):
    n, d = points.shape
    if n < d + 1 or np.linalg.matrix_rank(points - points.mean(axis=0), tol=1e-10 * (1 + np.abs(points).max())) < d:
        raise DegenerateHullError(f"{n} points do not affinely span R^{d}")


def khachiyan_weights(points, tol: float = 1e-6, weights=None, max_iter: int = 200_000):
    """Barycentric weights of the MVEE dual, at relative volume tolerance ``tol``.

    Returns ``(weights, iterations, eps_plus)`` where ``eps_plus`` is the final
    excess ``max kappa / (d + 1) - 1``.
    """
    points = np.ascontiguousarray(points, dtype=float)
    n, d = points.shape
    u = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float).copy()
    tol_eps = 2.0 * math.log1p(tol) / (d + 1)
    return kernels.khachiyan(points, u, tol_eps, max_iter)


def center_and_spread(points, weights):
    """Center ``c`` and ``P = d * Sigma`` of the weighted point set; ``Q = P^{-1}``."""
    d = points.shape[1]
    c = weights @ points
    diff = points - c
    Sigma = (diff * weights[:, None]).T @ diff
    return c, d * Sigma


def mvee_of_points(points, tol: float = 1e-6) -> Ellipsoid:
    """Minimum-volume enclosing ellipsoid of a finite set, within ``1 + tol`` in volume."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    _check_spanning(points)
    u, _, _ = khachiyan_weights(points, tol)
    c, P = center_and_spread(points, u)
    E = Ellipsoid(c, np.linalg.inv(P))
    return E.scaled(math.sqrt(E.mahalanobis_sq(points).max()))


# ---------------------------------------------------------------------------
# Oracle-driven construction
# ---------------------------------------------------------------------------


def _orthogonal_direction(chords, frame):
    """Column of ``frame`` with the largest component orthogonal to ``chords``."""
    d = frame.shape[0]
    if not chords:
        return frame[:, 0]
    B, _ = np.linalg.qr(np.array(chords).T)
    R = frame - B @ (B.T @ frame)
    norms = np.linalg.norm(R, axis=0)
    j = int(np.argmax(norms))
    if norms[j] < 1e-12:
        raise DegenerateHullError("chords already span the space")
    return R[:, j] / norms[j]


def approx_mve_coreset(oracle, eps: float, p, *, t_max: float, first_direction=None,
                       rng: Optional[np.random.Generator] = None, max_step=None) -> CoresetPointSet:
    """Crude coreset: farthest points in ``+-x`` for ``d`` greedy directions.

    Each new direction is orthogonal to the span of the chords ``v - u``
    already found. Directions default to the canonical frame; pass ``rng`` to
    rotate that frame randomly.
    """
    p = np.asarray(p, dtype=float).ravel()
    d = p.size
    if rng is not None:
        frame, _ = np.linalg.qr(rng.standard_normal((d, d)))
    else:
        frame = np.eye(d)
    if first_direction is not None:
        x0 = np.asarray(first_direction, dtype=float)
        frame = np.column_stack([x0 / np.linalg.norm(x0), frame])
    points, chords, dirs = [], [], []
    while len(chords) < d:
        x = _orthogonal_direction(chords, frame)
        hi = farthest(oracle, eps, x, p, t_max=t_max, strict=False, max_step=max_step)
        lo = farthest(oracle, eps, -x, p, t_max=t_max, strict=False, max_step=max_step)
        width = float((hi.point - lo.point) @ x)
        if width < eps:
            raise DegenerateObstacleError(
                f"obstacle width {width:.3g} < eps along direction {np.round(x, 6).tolist()}",
                direction=x, width=width,
            )
        points += [hi.point, lo.point]
        chords.append(lo.point - hi.point)
        dirs.append(x)
    pts = np.array(points)
    return CoresetPointSet(points=pts, eps=eps, extremes=pts.copy(), directions=np.array(dirs))


def _frames(d: int, count: int) -> List[np.ndarray]:
    """Orthogonal frames for the l1 relaxations; the first is the identity."""
    out = [np.eye(d)]
    if d == 2:
        for k in range(1, count):
            a = 0.5 * math.pi * k / count
            out.append(np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]]))
    else:
        rng = np.random.default_rng(12345)
        for _ in range(1, count):
            R, _ = np.linalg.qr(rng.standard_normal((d, d)))
            out.append(R)
    return out


def _sphere_directions(d: int, count: int) -> np.ndarray:
    """``count`` roughly even unit vectors: a circle in 2-D, a Fibonacci sphere in 3-D."""
    k = np.arange(count) + 0.5
    if d == 2:
        a = 2 * math.pi * k / count
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if d == 3:
        z = 1 - 2 * k / count
        a = math.pi * (3 - math.sqrt(5)) * k
        r = np.sqrt(1 - z * z)
        return np.stack([r * np.cos(a), r * np.sin(a), z], axis=1)
    g = np.random.default_rng(54321).standard_normal((count, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def default_rays(d: int) -> int:
    return 48 if d == 2 else 24 * d * d


def _ray_candidates(oracle, E: Ellipsoid, eps: float, p0, count: int, t_max: float, max_step):
    """Exit points of a net of whitened rays from ``p0``, each local maximum refined.

    The Mahalanobis norm of the exit point peaks at vertices poking out of
    ``E``; a coarse net only lands near them, so every net direction that beats
    its neighbours is improved by a compass search on the sphere.
    """
    L, c, d = E.factor, E.center, E.dim
    used = 0

    def exit_at(z, hint=None):
        nonlocal used
        w = np.linalg.solve(L, z)
        r = extreme_along_ray(oracle, p0, w / np.linalg.norm(w), eps, t_max, hint=hint, assume_inside=True,
                              max_step=max_step)
        used += r.queries_used
        return r.point_inside, float(np.linalg.norm(L @ (r.point_inside - c))), r.t_inside

    Z = _sphere_directions(d, count)
    net = [exit_at(z) for z in Z]
    f = np.array([v[1] for v in net])
    k = min(2 * d, count - 1)
    near = np.argsort(-(Z @ Z.T), axis=1)[:, 1:k + 1]
    peaks = [i for i in range(count) if f[i] >= f[near[i]].max()]
    spacing = float(np.arccos(np.clip(np.min(np.max(Z @ Z.T - 2 * np.eye(count), axis=1)), -1, 1)))
    out = [net[i][0] for i in range(count)]
    rng = np.random.default_rng(count)
    for i in peaks:
        z, (q, val, t) = Z[i], net[i]
        h = spacing
        while h > 1e-3:
            B = np.linalg.qr(np.column_stack([z, rng.standard_normal((d, d - 1))]))[0][:, 1:]
            best = None
            for e in np.concatenate([B.T, -B.T]):
                z2 = z * math.cos(h) + e * math.sin(h)
                q2, v2, t2 = exit_at(z2, t)
                if v2 > val and (best is None or v2 > best[2]):
                    best = (z2, q2, v2, t2)
            if best is None:
                h *= 0.5
            else:
                z, q, val, t = best
        out.append(q)
    return out, used


@dataclass(frozen=True)
class MahalanobisResult:
    point: np.ndarray
    l2: float
    l1: float
    queries_used: int
    extremes: np.ndarray


def mahalanobis_search(oracle, E: Ellipsoid, eps: float, p_seed, *, t_max: float,
                       frames: Optional[int] = None, polish: int = 4, known=None, max_step=None,
                       rays: Optional[int] = None, radial: Optional[bool] = None) -> MahalanobisResult:
    """Approximate ``argmax ||L (q - c)||`` over the obstacle containing ``p_seed``.

    The l2 objective is relaxed to ``||R L (q - c)||_1 = max_s s^T R L (q - c)``
    over sign vectors ``s`` (exact enumeration of the ``2^d`` patterns, for each
    of ``frames`` rotations ``R``); each pattern is one call to :func:`farthest`
    along ``normalize(L^T R^T s)``. The l1 winner keeps the ``1/sqrt(d)`` l2
    guarantee. ``rays`` exit points of evenly spread rays from ``p_seed`` in
    the whitened frame add cheap candidates near protruding vertices that
    the few linear searches can miss. ``polish`` extra ascent steps then move
    towards the gradient direction ``Q (q - c)``, which never lowers the l2
    value. ``known`` points (already certified inside) compete as free
    candidates. ``radial`` is handed to :func:`farthest`; by default its
    radial check runs only when there are no rays to cover for a stalled
    ascent.
    """
    d = E.dim
    rays = default_rays(d) if rays is None else int(rays)
    if radial is None:
        radial = rays == 0
    if frames is None:
        frames = 2 if d == 2 else 1
    L = E.factor
    c = E.center
    used = 0
    cands = []
    for R in _frames(d, frames):
        RL = R @ L
        for s in itertools.product((-1.0, 1.0), repeat=d):
            w = RL.T @ np.array(s)
            w /= np.linalg.norm(w)
            r = farthest(oracle, eps, w, p_seed, t_max=t_max, strict=False, max_step=max_step, radial=radial)
            used += r.queries_used
            y = L @ (r.point - c)
            cands.append((float(np.abs(R @ y).sum()), float(np.linalg.norm(y)), tuple(r.point)))
    extremes = [np.array(cd[2]) for cd in cands]
    if rays:
        pts, used_r = _ray_candidates(oracle, E, eps, np.asarray(p_seed, dtype=float), rays, t_max, max_step)
        used += used_r
        for q in pts:
            y = L @ (q - c)
            cands.append((float(np.abs(y).sum()), float(np.linalg.norm(y)), tuple(q)))
    if known is not None and len(known):
        Y = (np.asarray(known) - c) @ L.T
        cands += [(float(np.abs(y).sum()), float(np.linalg.norm(y)), tuple(k)) for y, k in zip(Y, known)]
    # best l1 score first, then the best l2 ones; ties go to the smallest point
    starts = [min(cands, key=lambda t: (-t[0], t[2]))]
    for cd in sorted(cands, key=lambda t: (-t[1], t[2])):
        if len(starts) >= 3:
            break
        if all(cd[2] != st[2] for st in starts):
            starts.append(cd)
    winner = None
    for l1, l2, pt in starts:
        q = np.array(pt)
        for _ in range(polish):
            g = E.shape @ (q - c)
            g /= np.linalg.norm(g)
            r = farthest(oracle, eps, g, p_seed, t_max=t_max, strict=False, max_step=max_step, radial=radial)
            used += r.queries_used
            extremes.append(r.point)
            y = L @ (r.point - c)
            new_l2 = float(np.linalg.norm(y))
            if new_l2 <= l2 * (1.0 + 1e-9):
                break
            q, l2, l1 = r.point, new_l2, float(np.abs(y).sum())
        if winner is None or l2 > winner[1]:
            winner = (l1, l2, q)
    l1, l2, q = winner
    return MahalanobisResult(np.asarray(q), l2, l1, used, np.array(extremes))


def mahalanobis_farthest(oracle, E: Ellipsoid, eps: float, p_seed, *, t_max: float, frames: Optional[int] = None,
                         polish: int = 4, max_step=None) -> np.ndarray:
    return mahalanobis_search(oracle, E, eps, p_seed, t_max=t_max, frames=frames, polish=polish,
                              max_step=max_step).point


def halting_threshold(eps: float, d: int) -> float:
    return (1.0 + eps) ** (2.0 / (d + 1)) - 1.0


def iteration_cap(eps: float, d: int) -> int:
    return max(64, math.ceil(8 * d * (1.0 / eps + math.log(d + 1))))


def mve_coreset(oracle, eps: float, p, *, t_max: float, tol: Optional[float] = None, frames: Optional[int] = None,
                polish: int = 4, inner: bool = True, max_iter: Optional[int] = None,
                first_direction=None, rng=None, max_step: Optional[float] = None, rays: Optional[int] = None):
    """eps-coreset for the MVEE of the obstacle containing ``p``.

    Returns ``(coreset, ellipsoid, trace)``. ``tol`` is the absolute precision
    of the boundary searches; by default it is ``eps * w / (4 d)`` with ``w``
    the smallest width seen by the crude coreset. With ``inner`` the weights
    are re-balanced over the current coreset after every oracle step (further
    Khachiyan steps on the finite set), so the working ellipsoid tracks the
    MVEE of the coreset. The ellipsoid returned is the final working ellipsoid
    rescaled to pass through the outermost coreset point. ``max_step`` caps
    ray-search strides when other obstacles may sit close by.
    """
    p = np.asarray(p, dtype=float).ravel()
    d = p.size
    queries0 = oracle.stats().total_queries
    if not oracle.query(p):
        raise PreconditionError("mve_coreset() needs a seed inside an obstacle")

    seed = approx_mve_coreset(oracle, tol if tol else eps, p, t_max=t_max,
                              first_direction=first_direction, rng=rng, max_step=max_step)
    if tol is None:
        widths = np.abs(np.einsum("ij,ij->i", seed.points[0::2] - seed.points[1::2], seed.directions))
        tol = min(eps, eps * float(widths.min()) / (4 * d))
        if tol < eps:
            # the seed fixes the working ellipsoid, so it must be as sharp as the rest
            seed = approx_mve_coreset(oracle, tol, p, t_max=t_max, first_direction=first_direction,
                                      rng=None if rng is None else np.random.default_rng(rng.integers(2**63)),
                                      max_step=max_step)

    S = [row for row in seed.points]
    extremes = list(seed.extremes)
    threshold = halting_threshold(eps, d)
    inner_eps = 0.5 * threshold
    cap = iteration_cap(eps, d) if max_iter is None else int(max_iter)
    w, _, _ = kernels.khachiyan(np.array(S), np.full(len(S), 1.0 / len(S)), inner_eps, 100_000)
    c, P = center_and_spread(np.array(S), w)
    trace = StepTrace(threshold=threshold, cap=cap)

    for _ in range(cap):
        E = Ellipsoid(c, np.linalg.inv(P))
        log_vol = E.log_volume
        log_det = float(np.linalg.slogdet(P)[1])
        start = c if oracle.query(c) else p
        res = mahalanobis_search(oracle, E, tol, start, t_max=t_max, frames=frames, polish=polish,
                                 known=np.array(extremes), max_step=max_step, rays=rays)
        extremes.extend(res.extremes)
        q = res.point
        m2 = float(E.mahalanobis_sq(q)[0])
        kappa = d * m2 + 1.0
        eps_i = kappa / (d + 1) - 1.0
        trace.final_eps = eps_i
        if eps_i <= threshold:
            trace.converged = True
            break
        beta = eps_i / (kappa - 1.0)
        diff = q - c
        c = c + beta * diff
        P = (1.0 - beta) * P + d * beta * (1.0 - beta) * np.outer(diff, diff)
        w = np.append(w * (1.0 - beta), beta)
        S.append(q)
        trace.records.append(StepRecord(kappa, eps_i, beta, log_vol, log_det, q,
                                        oracle.stats().total_queries - queries0))
        if inner:
            w, _, _ = kernels.khachiyan(np.array(S), w, inner_eps, 100_000)
            c, P = center_and_spread(np.array(S), w)
    else:
        log.info("mve_coreset hit the iteration cap %d with eps_i=%.3g", cap, trace.final_eps)

    pts = np.array(S)
    inside = oracle.query_many(pts)
    if not inside.all():
        raise OracleInconsistencyError(f"coreset point {pts[~inside][0].tolist()} now queries false")
    E = Ellipsoid(c, np.linalg.inv(P))
    trace.final_log_volume = E.log_volume
    trace.final_log_det = float(np.linalg.slogdet(P)[1])
    E = E.scaled(math.sqrt(E.mahalanobis_sq(pts).max()))
    trace.queries_used = oracle.stats().total_queries - queries0
    coreset = CoresetPointSet(points=pts, eps=eps, extremes=np.array(extremes), directions=seed.directions)
    return coreset, E, trace


def cross_polytope_bound(E: Ellipsoid, scale: float = 1.0) -> CrossPolytope:
    """Cross-polytope with tips ``c +- sqrt(d) * scale * a_i`` on the principal axes ``a_i``.

    It contains ``scale * E``. Pass ``scale = 1 + eps`` when ``E`` comes from a
    coreset, so that the body (which may poke slightly out of ``E``) is still
    covered.
    """
    return CrossPolytope(E.center.copy(), math.sqrt(E.dim) * scale * E.semi_axes(), float(scale))
