"""Approximate extreme point of an implicit convex body along a direction.

Coordinate ascent over an orthonormal basis whose last vector is the target
direction ``u``. The objective is the height function: for a point ``y`` in
the hyperplane orthogonal to ``u``, the largest ``t`` with ``y + t u`` inside.
Heights come from :func:`extreme_along_ray`; each coordinate is maximised by
golden-section search, since the height function is concave on a convex body.
"""
from dataclasses import dataclass
import math
from typing import Optional

import numpy as np

from .errors import ConvergenceError, PreconditionError
from .ray_search import extreme_along_ray

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FarthestResult:
    point: np.ndarray
    support_value: float
    queries_used: int
    iterations: int


def build_orthonormal_basis(u, dim=None) -> np.ndarray:
    """Rows ``e_1..e_d`` of an orthonormal basis with ``e_d = u``."""
    u = np.asarray(u, dtype=float).ravel()
    d = u.size if dim is None else int(dim)
    if u.size != d:
        raise ValueError("direction has wrong dimension")
    norm = np.linalg.norm(u)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("direction must be unit-norm")
    u = u / norm
    Q, _ = np.linalg.qr(np.column_stack([u, np.eye(d)]))
    basis = np.empty((d, d))
    basis[: d - 1] = Q[:, 1:d].T
    basis[d - 1] = u
    return basis


def _golden_max(f, lo, hi, tol, ftol=None):
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns the best ``(x, f(x))`` seen.

    Stops once the bracket is below ``tol`` and the secant slopes of the
    neighbouring samples say the peak cannot beat the best sample by more
    than ``ftol`` (default ``tol``). Steep peaks therefore get a narrower
    bracket.
    """
    ftol = tol if ftol is None else ftol
    best_x, best_v = None, -np.inf

    def keep(x, v):
        nonlocal best_x, best_v
        if v > best_v:
            best_x, best_v = x, v

    a, b, fa, fb = lo, hi, None, None
    c = b - _INVPHI * (b - a)
    e = a + _INVPHI * (b - a)
    fc, fe = f(c), f(e)
    keep(c, fc)
    keep(e, fe)
    floor = tol * 1e-3
    while b - a > floor:
        if b - a <= tol:
            slope = 0.0
            if fa is not None:
                slope = max(slope, abs(fc - fa) / (c - a))
            if fb is not None:
                slope = max(slope, abs(fb - fe) / (b - e))
            if slope * (b - a) <= ftol:
                break
        if fc >= fe:
            b, fb, e, fe = e, fe, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
            keep(c, fc)
        else:
            a, fa, c, fc = c, fc, e, fe
            e = a + _INVPHI * (b - a)
            fe = f(e)
            keep(e, fe)
    return best_x, best_v


class _Probe:
    """Vertical ray searches along ``u`` with query accounting and a running hint."""

    def __init__(self, oracle, u, tol, t_max, max_step=None):
        self.oracle, self.u, self.tol, self.t_max = oracle, u, tol, t_max
        self.max_step = max_step
        self.used = 0
        self.hint = None

    def height(self, q):
        r = extreme_along_ray(self.oracle, q, self.u, self.tol, self.t_max, hint=self.hint, assume_inside=True,
                              max_step=self.max_step)
        self.used += r.queries_used
        self.hint = r.t_inside
        return r.t_inside

    def chord(self, q, e):
        fwd = extreme_along_ray(self.oracle, q, e, self.tol, self.t_max, assume_inside=True, max_step=self.max_step)
        bwd = extreme_along_ray(self.oracle, q, -e, self.tol, self.t_max, assume_inside=True, max_step=self.max_step)
        self.used += fwd.queries_used + bwd.queries_used
        return -bwd.t_inside, fwd.t_inside


def _slice_max(probe, q, h_q, e, tol, ftol):
    """Best ``(point, height)`` on the horizontal chord through ``q`` along ``e``."""
    lo, hi = probe.chord(q, e)
    if hi - lo <= tol:
        return q, h_q
    found = {}

    def g(s):
        base = q + s * e
        h = probe.height(base)
        found[s] = (base, h)
        return h

    found[0.0] = (q, h_q)
    s_best, h_best = _seeded_max(lambda s: h_q if s == 0.0 else g(s), 0.0, lo, hi,
                                 max(4.0 * tol, (hi - lo) / 16.0), tol, ftol)
    if h_best <= h_q:
        return q, h_q
    return found[s_best]


def _recentre(probe, q, axes, rounds=2):
    """Move ``q`` to the midpoints of successive axis chords, away from the boundary."""
    for _ in range(rounds):
        for e in axes:
            lo, hi = probe.chord(q, e)
            q = q + 0.5 * (lo + hi) * e
    return q


def _seeded_max(f, x0, lo, hi, step, tol, ftol):
    """Like :func:`_golden_max`, but walks uphill from ``x0`` to find a bracket first.

    Sound for quasi-concave ``f``; cheap when ``x0`` is already close.
    """
    seen = {}

    def g(x):
        if x not in seen:
            seen[x] = f(x)
        return seen[x]

    f0 = g(x0)
    a, b = max(x0 - step, lo), min(x0 + step, hi)
    if g(b) > f0:
        sign, prev, cur = 1.0, x0, b
    elif g(a) > f0:
        sign, prev, cur = -1.0, x0, a
    else:
        prev = cur = None
    if cur is not None:
        end = hi if sign > 0 else lo
        while cur != end:
            nxt = cur + sign * _INVPHI ** -1 * abs(cur - prev)
            nxt = min(nxt, hi) if sign > 0 else max(nxt, lo)
            if g(nxt) < g(cur):
                a, b = sorted((prev, nxt))
                break
            prev, cur = cur, nxt
        else:
            a, b = sorted((prev, end))
    if b - a > tol:
        _golden_max(g, a, b, tol, ftol)
    x = max(seen, key=seen.get)
    return x, seen[x]


def _radial_max(oracle, p, u, free, tol, t_max, reach, max_step=None, start=None, ftol=None):
    """Highest boundary point along ``u`` seen from ``p``, by nested 1-D searches.

    Directions are ``u + sum_i tan(phi_i) e_i``. Superlevel sets of the
    height of the exit point are cones over convex caps, so the height is
    quasi-concave in each angle and its partial maxima stay that way;
    nested one-dimensional searches are then sound where coordinate-wise
    ascent is not. ``start`` is a point to aim the first rays at; without it
    every angle is searched over its full range. Returns ``(point, queries)``.
    """
    used = 0
    hint = [None]
    ftol = tol if ftol is None else ftol
    # bracket noise of the exit points must stay well below the variation of
    # the profile, or flat tops and short exit distances break unimodality
    tol = min(0.25 * tol, max(reach, tol * 1e-3) / 64.0)
    atol = tol / max(reach, tol)
    half = 0.5 * math.pi - 1e-6
    guess = None
    if start is not None:
        w = np.asarray(start, dtype=float) - p
        up = float(w @ u)
        if up > 0:
            guess = [math.atan(float(w @ e) / up) for e in free]

    def exit_point(phis):
        nonlocal used
        w = u + sum(math.tan(ph) * e for ph, e in zip(phis, free))
        w = w / np.linalg.norm(w)
        r = extreme_along_ray(oracle, p, w, tol, t_max, hint=hint[0], assume_inside=True, max_step=max_step)
        used += r.queries_used
        hint[0] = r.t_inside
        return r.point_inside

    def level(prefix):
        found = {}

        def g(ph):
            phis = prefix + (ph,)
            if len(phis) < len(free):
                pt = level(phis)
            else:
                pt = exit_point(phis)
            found[ph] = pt
            return float(pt @ u)

        if guess is None:
            ph, _ = _golden_max(g, -half, half, atol, ftol)
        else:
            x0 = min(max(guess[len(prefix)], -half), half)
            ph, _ = _seeded_max(g, x0, -half, half, max(4.0 * atol, 0.1), atol, ftol)
        return found[ph]

    return level(()), used


def farthest(oracle, eps: float, u, p, *, t_max: float, max_sweeps=None, strict: bool = True,
             max_step=None, radial: Optional[bool] = None) -> FarthestResult:
    """Point of the obstacle containing ``p`` whose projection on ``u`` is maximal, within ``eps``.

    Line searches run at tolerance ``eps / d``. The ascent stops once a full
    sweep over the ``d - 1`` free coordinates gains less than ``eps / 2``;
    after ``16 d`` sweeps a :class:`ConvergenceError` is raised (or, with
    ``strict=False``, the best iterate is returned). ``max_step`` is handed to
    every ray search (see :func:`extreme_along_ray`).

    Coordinate ascent can come to rest on a ridge of a polyhedral body, stall
    in a thin tip after many short zig-zag steps, or be misled by bracket
    noise on a flat top. Its fixed point is therefore checked by a radial
    search (see :func:`_radial_max`) from a recentred copy of ``p``, and the
    better of the two is kept. ``radial=False`` skips the check.
    """
    u = np.asarray(u, dtype=float).ravel()
    u = u / np.linalg.norm(u)
    p = np.asarray(p, dtype=float).ravel()
    d = p.size
    tol = eps / d
    if not oracle.query(p):
        raise PreconditionError("farthest() needs a seed inside an obstacle")

    probe = _Probe(oracle, u, tol, t_max, max_step)
    top = extreme_along_ray(oracle, p, u, tol, t_max, assume_inside=True, max_step=max_step)
    probe.used += 1 + top.queries_used
    base = p
    rise = top.t_inside
    point = top.point_inside
    support = float(point @ u)
    if d == 1:
        return FarthestResult(point, support, probe.used, 0)

    basis = build_orthonormal_basis(u)
    free = [basis[i] for i in range(d - 1)]
    cap = 16 * d if max_sweeps is None else int(max_sweeps)
    sweeps = 0
    while True:
        sweeps += 1
        start = support
        for e in free:
            # slice through the middle of the current vertical chord
            base = base + 0.5 * rise * u
            rise = 0.5 * rise
            probe.hint = rise
            base, rise = _slice_max(probe, base, rise, e, tol, 0.5 * eps)
        point = base + rise * u
        support = float(point @ u)
        gain = support - start
        if gain < eps / 2.0:
            break
        if sweeps >= cap:
            if strict:
                raise ConvergenceError(
                    f"farthest() did not settle after {sweeps} sweeps",
                    best=FarthestResult(point, support, probe.used, sweeps),
                    gap=gain,
                )
            break

    if radial is None or radial:
        centre = _recentre(probe, p, free + [u], rounds=1)
        alt, extra = _radial_max(oracle, centre, u, free, tol, t_max, float(np.linalg.norm(point - centre)), max_step,
                                  start=point, ftol=0.5 * eps)
        probe.used += extra
        if float(alt @ u) > support:
            point = alt
            support = float(point @ u)

    used = probe.used

    # snap back inside; the bracket guarantee bounds this to two retreats
    used += 1
    if not oracle.query(point):
        for _ in range(2):
            point = point - eps * u
            used += 1
            if oracle.query(point):
                break
        support = float(point @ u)
    return FarthestResult(point, support, used, sweeps)
