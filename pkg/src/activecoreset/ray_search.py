"""Boundary location along a ray: exponential growth, then bisection."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PreconditionError, UnboundedObstacleError


@dataclass(frozen=True)
class RaySearchResult:
    t_inside: float
    t_outside: float
    queries_used: int
    point_inside: np.ndarray

    @property
    def width(self) -> float:
        return self.t_outside - self.t_inside


def extreme_along_ray(oracle, p, u, eps: float, t_max: float, *, base: float = 2.0,
                      hint: Optional[float] = None, assume_inside: bool = False,
                      max_step: Optional[float] = None) -> RaySearchResult:
    """Bracket the exit parameter of the ray ``p + t u`` to within ``eps``.

    Probes ``t = eps * base**i`` until the oracle answers false, then bisects
    the last in/out pair. A ``hint`` (a guess of the exit parameter) replaces
    the growth phase by a gallop outward from the guess, which is much cheaper
    when the guess is close. The first exit is accepted; re-entry is ignored.

    ``assume_inside`` skips the membership check of ``p`` when the caller
    already knows the answer (it is then not counted).

    ``max_step`` caps the stride of the outward phase (hints are then
    ignored). If neighbouring obstacles are always more than ``max_step``
    apart, every inside probe is chained to ``p`` and the exit found is the
    exit of the obstacle containing ``p``; without the cap a doubling stride
    can hop over a narrow gap into the next obstacle. The logarithmic query
    bound only holds without the cap.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if max_step is not None:
        if max_step <= 0:
            raise ValueError("max_step must be positive")
        hint = None
    if base <= 1:
        raise ValueError("base must exceed 1")
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    used = 0
    if not assume_inside:
        used += 1
        if not oracle.query(p):
            raise PreconditionError("ray search must start inside an obstacle")

    def probe(t):
        nonlocal used
        used += 1
        return oracle.query(p + t * u)

    t_in = 0.0
    t_out = None
    if hint is not None and eps < hint < t_max:
        if probe(hint):
            t_in = hint
            step = eps
            while True:
                t = t_in + step
                if t >= t_max:
                    t = t_max
                    if probe(t):
                        raise UnboundedObstacleError(f"still inside at t_max={t_max}")
                    t_out = t
                    break
                if probe(t):
                    t_in = t
                    step *= base
                else:
                    t_out = t
                    break
        else:
            t_out = hint
            step = eps
            while True:
                t = t_out - step
                if t <= 0.0:
                    break
                if probe(t):
                    t_in = t
                    break
                t_out = t
                step *= base
    else:
        t = eps
        while True:
            if t >= t_max:
                if probe(t_max):
                    raise UnboundedObstacleError(f"still inside at t_max={t_max}")
                t_out = t_max
                break
            if probe(t):
                t_in = t
                t *= base
                if max_step is not None:
                    t = min(t, t_in + max_step)
            else:
                t_out = t
                break

    while t_out - t_in > eps:
        mid = 0.5 * (t_in + t_out)
        if probe(mid):
            t_in = mid
        else:
            t_out = mid
    return RaySearchResult(t_in, t_out, used, p + t_in * u)
