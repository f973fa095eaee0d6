"""Hot numeric kernels.

Every kernel exists twice: an explicit-loop version compiled with numba
``@njit`` and a vectorised pure-numpy version. The module-level names bind to
the numba version unless ``ACTIVECORESET_DISABLE_NUMBA`` is set to a truthy
value (or numba is not importable). Both versions are kept in ``IMPLS`` so the
test-suite and ``benchmarks/bench_kernels.py`` can compare them directly.
"""
import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

ENV_FLAG = "ACTIVECORESET_DISABLE_NUMBA"
USE_NUMBA = _HAVE_NUMBA and os.environ.get(ENV_FLAG, "").lower() not in ("1", "true", "yes", "on")


def _jit(func):
    if _HAVE_NUMBA:
        return njit(cache=True)(func)
    return func


# ---------------------------------------------------------------------------
# Khachiyan / Todd-Yildirim barycentric ascent for the MVEE of a finite set
# ---------------------------------------------------------------------------


@_jit
def _khachiyan_loop(points, weights, tol_eps, max_iter):
    n, d = points.shape
    D = d + 1
    q = np.ones((n, D))
    q[:, :d] = points
    u = weights.copy()
    kappa = np.empty(n)
    eps_plus = np.inf
    it = 0
    while it < max_iter:
        M = np.zeros((D, D))
        for i in range(n):
            if u[i] > 0.0:
                for a in range(D):
                    for b in range(D):
                        M[a, b] += u[i] * q[i, a] * q[i, b]
        Minv = np.linalg.inv(M)
        kmax = -1.0
        jmax = 0
        kmin = np.inf
        jmin = 0
        for i in range(n):
            k = 0.0
            for a in range(D):
                s = 0.0
                for b in range(D):
                    s += Minv[a, b] * q[i, b]
                k += q[i, a] * s
            kappa[i] = k
            if k > kmax:
                kmax = k
                jmax = i
            if u[i] > 0.0 and k < kmin:
                kmin = k
                jmin = i
        eps_plus = kmax / D - 1.0
        eps_minus = 1.0 - kmin / D
        if eps_plus <= tol_eps:
            break
        drop = False
        if eps_plus >= eps_minus:
            j = jmax
            beta = (kmax - D) / (D * (kmax - 1.0))
        else:
            j = jmin
            beta = (kmin - D) / (D * (kmin - 1.0))
            floor = -u[j] / (1.0 - u[j])
            if beta <= floor:
                beta = floor
                drop = True
        for i in range(n):
            u[i] *= 1.0 - beta
        u[j] += beta
        if drop or u[j] < 0.0:
            # a drop step removes the point; rounding must not leave a ghost weight
            u[j] = 0.0
        it += 1
    return u, it, eps_plus


def _khachiyan_numpy(points, weights, tol_eps, max_iter):
    n, d = points.shape
    D = d + 1
    q = np.hstack([points, np.ones((n, 1))])
    u = weights.copy()
    eps_plus = np.inf
    it = 0
    while it < max_iter:
        M = (q * u[:, None]).T @ q
        kappa = np.einsum("ij,jk,ik->i", q, np.linalg.inv(M), q)
        jmax = int(np.argmax(kappa))
        support = np.flatnonzero(u > 0.0)
        jmin = int(support[np.argmin(kappa[support])])
        kmax, kmin = kappa[jmax], kappa[jmin]
        eps_plus = kmax / D - 1.0
        eps_minus = 1.0 - kmin / D
        if eps_plus <= tol_eps:
            break
        drop = False
        if eps_plus >= eps_minus:
            j = jmax
            beta = (kmax - D) / (D * (kmax - 1.0))
        else:
            j = jmin
            beta = (kmin - D) / (D * (kmin - 1.0))
            floor = -u[j] / (1.0 - u[j])
            if beta <= floor:
                beta, drop = floor, True
        u *= 1.0 - beta
        u[j] += beta
        if drop or u[j] < 0.0:
            u[j] = 0.0
        it += 1
    return u, it, eps_plus


# ---------------------------------------------------------------------------
# Nearest-neighbour scans for the planners
# ---------------------------------------------------------------------------


@_jit
def _nearest_loop(nodes, n, x):
    best = 0
    best_d = np.inf
    d = nodes.shape[1]
    for i in range(n):
        s = 0.0
        for k in range(d):
            t = nodes[i, k] - x[k]
            s += t * t
        if s < best_d:
            best_d = s
            best = i
    return best


def _nearest_numpy(nodes, n, x):
    diff = nodes[:n] - x
    return int(np.argmin(np.einsum("ij,ij->i", diff, diff)))


@_jit
def _radius_loop(nodes, n, x, r2):
    out = np.empty(n, dtype=np.int64)
    m = 0
    d = nodes.shape[1]
    for i in range(n):
        s = 0.0
        for k in range(d):
            t = nodes[i, k] - x[k]
            s += t * t
        if s <= r2:
            out[m] = i
            m += 1
    return out[:m]


def _radius_numpy(nodes, n, x, r2):
    diff = nodes[:n] - x
    return np.flatnonzero(np.einsum("ij,ij->i", diff, diff) <= r2).astype(np.int64)


# ---------------------------------------------------------------------------
# Batch membership tests
# ---------------------------------------------------------------------------


@_jit
def _halfspace_loop(A, b, pts, tol):
    n, d = pts.shape
    m = A.shape[0]
    out = np.ones(n, dtype=np.bool_)
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                s += A[j, k] * pts[i, k]
            if s > b[j] + tol:
                out[i] = False
                break
    return out


def _halfspace_numpy(A, b, pts, tol):
    return np.all(pts @ A.T <= b + tol, axis=1)


@_jit
def _quadform_loop(center, Q, pts):
    n, d = pts.shape
    out = np.empty(n)
    diff = np.empty(d)
    for i in range(n):
        for k in range(d):
            diff[k] = pts[i, k] - center[k]
        s = 0.0
        for a in range(d):
            t = 0.0
            for c in range(d):
                t += Q[a, c] * diff[c]
            s += diff[a] * t
        out[i] = s
    return out


def _quadform_numpy(center, Q, pts):
    diff = pts - center
    return np.einsum("ij,jk,ik->i", diff, Q, diff)


@_jit
def _l1_frame_loop(pts, center, W):
    n, d = pts.shape
    m = W.shape[0]
    out = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(m):
            t = 0.0
            for k in range(d):
                t += W[j, k] * (pts[i, k] - center[k])
            s += abs(t)
        out[i] = s
    return out


def _l1_frame_numpy(pts, center, W):
    return np.abs((pts - center) @ W.T).sum(axis=1)


@_jit
def _bitmap_loop(img, origin, res, pts, threshold):
    h, w = img.shape
    n = pts.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        fx = (pts[i, 0] - origin[0]) / res
        fy = (pts[i, 1] - origin[1]) / res
        if fx < 0.0 or fy < 0.0 or fx >= w or fy >= h:
            continue
        col = int(np.floor(fx))
        row = h - 1 - int(np.floor(fy))
        out[i] = img[row, col] <= threshold
    return out


def _bitmap_numpy(img, origin, res, pts, threshold):
    h, w = img.shape
    fx = (pts[:, 0] - origin[0]) / res
    fy = (pts[:, 1] - origin[1]) / res
    inside = (fx >= 0.0) & (fy >= 0.0) & (fx < w) & (fy < h)
    out = np.zeros(pts.shape[0], dtype=bool)
    cols = np.floor(fx[inside]).astype(np.int64)
    rows = h - 1 - np.floor(fy[inside]).astype(np.int64)
    out[inside] = img[rows, cols] <= threshold
    return out


# ---------------------------------------------------------------------------
# Uniform points in simplices from barycentric gaps
# ---------------------------------------------------------------------------


@_jit
def _simplex_points_loop(simplices, idx, bary):
    k = idx.shape[0]
    m1 = simplices.shape[1]
    d = simplices.shape[2]
    out = np.zeros((k, d))
    for i in range(k):
        s = idx[i]
        for j in range(m1):
            w = bary[i, j]
            for c in range(d):
                out[i, c] += w * simplices[s, j, c]
    return out


def _simplex_points_numpy(simplices, idx, bary):
    return np.einsum("ij,ijk->ik", bary, simplices[idx])


IMPLS = {
    "khachiyan": (_khachiyan_loop, _khachiyan_numpy),
    "nearest": (_nearest_loop, _nearest_numpy),
    "radius_neighbors": (_radius_loop, _radius_numpy),
    "halfspace_contains": (_halfspace_loop, _halfspace_numpy),
    "quadform": (_quadform_loop, _quadform_numpy),
    "l1_frame": (_l1_frame_loop, _l1_frame_numpy),
    "bitmap_lookup": (_bitmap_loop, _bitmap_numpy),
    "simplex_points": (_simplex_points_loop, _simplex_points_numpy),
}


def _pick(name):
    fast, slow = IMPLS[name]
    return fast if USE_NUMBA else slow


khachiyan = _pick("khachiyan")
nearest = _pick("nearest")
radius_neighbors = _pick("radius_neighbors")
halfspace_contains = _pick("halfspace_contains")
quadform = _pick("quadform")
l1_frame = _pick("l1_frame")
bitmap_lookup = _pick("bitmap_lookup")
simplex_points = _pick("simplex_points")
