"""Gilbert-Johnson-Keerthi distance between convex hulls of point sets."""
import itertools

import numpy as np

TOL = 1e-9


def _support(P, v):
    return P[int(np.argmax(P @ v))]


def _closest_on_simplex(W):
    """Closest point to the origin in ``conv(W)`` and the minimal supporting subset."""
    n = len(W)
    best = None
    for k in range(1, n + 1):
        for idx in itertools.combinations(range(n), k):
            S = W[list(idx)]
            if k == 1:
                lam = np.ones(1)
            else:
                # minimise |S^T lam| subject to sum(lam) = 1
                G = S @ S.T
                M = np.zeros((k + 1, k + 1))
                M[:k, :k] = G
                M[:k, k] = 1.0
                M[k, :k] = 1.0
                rhs = np.zeros(k + 1)
                rhs[k] = 1.0
                try:
                    sol = np.linalg.solve(M, rhs)
                except np.linalg.LinAlgError:
                    continue
                lam = sol[:k]
                if np.any(lam < -1e-12):
                    continue
            v = lam @ S
            nv = float(v @ v)
            if best is None or nv < best[0] - 1e-15:
                best = (nv, v, S)
        if best is not None and best[0] <= TOL * TOL:
            break
    return best[1], best[2]


def gjk_distance(A, B, max_iter: int = 64):
    """``(intersects, distance)`` for ``conv(A)`` and ``conv(B)``.

    Sets closer than ``1e-9`` (touching included) count as intersecting.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    v = A[0] - B[0]
    W = np.empty((0, A.shape[1]))
    for _ in range(max_iter):
        nv = float(np.linalg.norm(v))
        if nv <= TOL:
            return True, 0.0
        w = _support(A, -v) - _support(B, v)
        # progress test: the support point cannot get closer than this
        if nv * nv - float(v @ w) <= TOL * max(1.0, nv):
            break
        if any(np.allclose(w, x, rtol=0, atol=1e-14) for x in W):
            break
        W = np.vstack([W, w])
        v, W = _closest_on_simplex(W)
    d = float(np.linalg.norm(v))
    return d <= TOL, d if d > TOL else 0.0


def gjk_intersects(A, B) -> bool:
    return gjk_distance(A, B)[0]
