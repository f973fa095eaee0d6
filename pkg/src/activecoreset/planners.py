"""RRT / RRT* with interchangeable samplers, and obstacle-discovery preprocessing.

A planner only ever calls ``sampler.draw()`` and, when a drawn point turns out
to be inside an obstacle, ``sampler.on_collision(point)``. The uniform
sampler ignores the callback; the free-space sampler can use it to discover
the obstacle on the fly. Everything else is shared code.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import kernels
from .errors import FreeSpaceExhaustedError, PreconditionError
from .freespace import (
    SamplerState,
    TriangulatedFreeSpace,
    remove_polytope,
    sample_many,
    triangulate_bounds,
)
from .mvee import CoresetPointSet, CrossPolytope, Ellipsoid, StepTrace, cross_polytope_bound, mve_coreset
from .oracle import MembershipOracle, OracleStats, WorkspaceMeta

CSV_COLUMNS = ("map", "planner", "sampler", "seed", "time_ms", "iterations",
               "samples_total", "samples_wasted", "path_length", "found")


@dataclass(frozen=True)
class PlannerConfig:
    step_size: float
    max_iterations: int
    goal_tolerance: float
    goal_bias: float = 0.05
    rewire_factor: float = 2.0
    edge_resolution: float = 0.01
    stop_on_goal: bool = True

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if not 0.0 <= self.goal_bias < 1.0:
            raise ValueError("goal_bias must lie in [0, 1)")
        if self.goal_tolerance <= 0:
            raise ValueError("goal_tolerance must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.edge_resolution <= 0:
            raise ValueError("edge_resolution must be positive")

    @property
    def rewire_radius(self) -> float:
        return self.rewire_factor * self.step_size


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

_CHUNK = 256


class UniformSampler:
    """Uniform over the workspace box."""

    name = "uniform"

    def __init__(self, bounds, seed=None):
        self.bounds = np.asarray(bounds, dtype=float)
        self.rng = np.random.default_rng(seed)
        self._buf = np.empty((0, self.bounds.shape[1]))
        self._i = 0

    def draw(self) -> np.ndarray:
        if self._i >= len(self._buf):
            lo, hi = self.bounds
            self._buf = lo + (hi - lo) * self.rng.random((_CHUNK, lo.size))
            self._i = 0
        self._i += 1
        return self._buf[self._i - 1]

    def on_collision(self, point) -> None:
        pass


class FreeSpaceSampler:
    """Volume-proportional region choice, then uniform inside the simplex.

    With a ``discovery`` the sampler runs on the fly: a drawn point that hits
    an obstacle triggers discovery and removal of that obstacle.
    """

    name = "freespace"

    def __init__(self, fs: TriangulatedFreeSpace, seed=None, discovery: Optional["Discovery"] = None):
        self.fs = fs
        self.state = SamplerState(seed)
        self.discovery = discovery
        self.records: List[ObstacleRecord] = []
        self._buf = None
        self._i = 0
        self._version = None

    def draw(self) -> np.ndarray:
        if self._buf is None or self._i >= len(self._buf) or self._version != self.fs.version:
            self._buf = sample_many(self.fs, self.state, _CHUNK)
            self._version = self.fs.version
            self._i = 0
        self._i += 1
        return self._buf[self._i - 1]

    def on_collision(self, point) -> None:
        if self.discovery is None:
            return
        rec = self.discovery.discover(point)
        self.records.append(rec)
        remove_polytope(self.fs, rec.polytope)


# ---------------------------------------------------------------------------
# tree and planners
# ---------------------------------------------------------------------------


class Tree:
    """Nodes with parent links and cost-to-come; ``children`` kept for rewiring."""

    def __init__(self, root, capacity: int = 1024):
        root = np.asarray(root, dtype=float)
        self.dim = root.size
        self.nodes = np.empty((capacity, self.dim))
        self.parent = np.full(capacity, -1, dtype=np.int64)
        self.cost = np.zeros(capacity)
        self.children: List[set] = []
        self.n = 0
        self.add(root, -1)

    def add(self, x, parent: int) -> int:
        if self.n == len(self.nodes):
            grow = len(self.nodes)
            self.nodes = np.concatenate([self.nodes, np.empty((grow, self.dim))])
            self.parent = np.concatenate([self.parent, np.full(grow, -1, dtype=np.int64)])
            self.cost = np.concatenate([self.cost, np.zeros(grow)])
        i = self.n
        self.nodes[i] = x
        self.parent[i] = parent
        self.cost[i] = 0.0 if parent < 0 else self.cost[parent] + float(np.linalg.norm(x - self.nodes[parent]))
        self.children.append(set())
        if parent >= 0:
            self.children[parent].add(i)
        self.n += 1
        return i

    def nearest(self, x) -> int:
        return int(kernels.nearest(self.nodes, self.n, np.asarray(x, dtype=float)))

    def near(self, x, r: float) -> np.ndarray:
        return kernels.radius_neighbors(self.nodes, self.n, np.asarray(x, dtype=float), r * r)

    def reparent(self, i: int, new_parent: int) -> None:
        self.children[self.parent[i]].discard(i)
        self.parent[i] = new_parent
        self.children[new_parent].add(i)
        stack = [i]
        while stack:
            j = stack.pop()
            p = self.parent[j]
            self.cost[j] = self.cost[p] + float(np.linalg.norm(self.nodes[j] - self.nodes[p]))
            stack.extend(self.children[j])

    def path_to(self, i: int) -> np.ndarray:
        out = []
        while i >= 0:
            out.append(self.nodes[i])
            i = int(self.parent[i])
        return np.array(out[::-1])


@dataclass
class PlanResult:
    found: bool
    path: Optional[np.ndarray]
    path_length: float
    wall_time: float
    iterations: int
    samples_total: int
    samples_wasted: int
    queries: int
    nodes: int
    iterations_to_goal: Optional[int] = None
    tree: Optional[Tree] = field(default=None, repr=False, compare=False)

    def csv_row(self, map_name: str, planner: str, sampler: str, seed: int, deterministic: bool = False) -> dict:
        return {
            "map": map_name,
            "planner": planner,
            "sampler": sampler,
            "seed": seed,
            "time_ms": 0.0 if deterministic else round(self.wall_time * 1e3, 3),
            "iterations": self.iterations,
            "samples_total": self.samples_total,
            "samples_wasted": self.samples_wasted,
            "path_length": self.path_length if self.found else math.inf,
            "found": self.found,
        }

    def signature(self) -> tuple:
        """Everything except the wall time, for determinism checks."""
        path = None if self.path is None else self.path.tobytes()
        return (self.found, path, self.path_length, self.iterations, self.samples_total,
                self.samples_wasted, self.queries, self.nodes, self.iterations_to_goal)


def edge_free(oracle: MembershipOracle, a, b, resolution: float) -> bool:
    """Check points spaced at most ``resolution`` apart on the segment, endpoint included."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(1, math.ceil(float(np.linalg.norm(b - a)) / resolution))
    t = np.arange(1, n + 1, dtype=float)[:, None] / n
    return not oracle.query_many(a + t * (b - a)).any()


def _plan(oracle, sampler, start, goal, cfg: PlannerConfig, star: bool, seed) -> PlanResult:
    t0 = time.perf_counter()
    q0 = oracle.stats().total_queries
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if oracle.query(start):
        raise PreconditionError(f"start {start.tolist()} is inside an obstacle")
    if oracle.query(goal):
        raise PreconditionError(f"goal {goal.tolist()} is inside an obstacle")
    rng = np.random.default_rng(seed)
    tree = Tree(start)
    res = cfg.edge_resolution
    total = wasted = 0
    best_goal = -1
    first_hit = None
    it = 0

    def reach_goal(i):
        nonlocal best_goal
        if float(np.linalg.norm(tree.nodes[i] - goal)) > cfg.goal_tolerance:
            return False
        if not np.array_equal(tree.nodes[i], goal):
            if not edge_free(oracle, tree.nodes[i], goal, res):
                return False
            i = tree.add(goal, i)
        if best_goal < 0 or tree.cost[i] < tree.cost[best_goal]:
            best_goal = i
        return True

    done = reach_goal(0)
    if done:
        first_hit = 0
    while not (done and cfg.stop_on_goal) and it < cfg.max_iterations:
        it += 1
        if rng.random() < cfg.goal_bias:
            x = goal
        else:
            x = sampler.draw()
            total += 1
            if oracle.query(x):
                wasted += 1
                sampler.on_collision(x)
                continue
        i = tree.nearest(x)
        near_pt = tree.nodes[i]
        dist = float(np.linalg.norm(x - near_pt))
        if dist == 0.0:
            continue
        new = x if dist <= cfg.step_size else near_pt + (cfg.step_size / dist) * (x - near_pt)
        if not edge_free(oracle, near_pt, new, res):
            continue
        if not star:
            k = tree.add(new, i)
        else:
            nbrs = tree.near(new, cfg.rewire_radius)
            d_nbrs = np.linalg.norm(tree.nodes[nbrs] - new, axis=1)
            via = tree.cost[nbrs] + d_nbrs
            parent, best = i, tree.cost[i] + float(np.linalg.norm(new - near_pt))
            for j in np.argsort(via, kind="stable"):
                if via[j] >= best:
                    break
                if edge_free(oracle, tree.nodes[nbrs[j]], new, res):
                    parent, best = int(nbrs[j]), float(via[j])
                    break
            k = tree.add(new, parent)
            for j, dj in zip(nbrs, d_nbrs):
                if j == parent or j == k:
                    continue
                if tree.cost[k] + dj < tree.cost[j] - 1e-12 and edge_free(oracle, new, tree.nodes[j], res):
                    tree.reparent(int(j), k)
        if reach_goal(k):
            done = True
            if first_hit is None:
                first_hit = it

    found = best_goal >= 0
    path = tree.path_to(best_goal) if found else None
    length = float(np.linalg.norm(np.diff(path, axis=0), axis=1).sum()) if found else math.inf
    return PlanResult(found, path, length, time.perf_counter() - t0, it, total, wasted,
                      oracle.stats().total_queries - q0, tree.n, first_hit, tree)


def rrt(oracle, sampler, start, goal, cfg: PlannerConfig, seed=None) -> PlanResult:
    return _plan(oracle, sampler, start, goal, cfg, False, seed)


def rrt_star(oracle, sampler, start, goal, cfg: PlannerConfig, seed=None) -> PlanResult:
    return _plan(oracle, sampler, start, goal, cfg, True, seed)


PLANNERS = {"rrt": rrt, "rrt_star": rrt_star}


# ---------------------------------------------------------------------------
# discovery and preprocessing
# ---------------------------------------------------------------------------


@dataclass
class ObstacleRecord:
    seed: np.ndarray
    coreset: CoresetPointSet
    ellipsoid: Ellipsoid
    polytope: CrossPolytope
    trace: StepTrace
    queries: int

    def to_dict(self) -> dict:
        return {
            "seed": self.seed.tolist(),
            "coreset": self.coreset.points.tolist(),
            "ellipsoid": self.ellipsoid.to_dict(),
            "cross_polytope": self.polytope.to_dict(),
            "iterations": len(self.trace),
            "converged": self.trace.converged,
            "queries": self.queries,
        }


class Discovery:
    """Seed inside an obstacle -> coreset, ellipsoid and enclosing cross-polytope."""

    def __init__(self, oracle: MembershipOracle, meta: WorkspaceMeta, *, frames=None, polish: int = 4,
                 inflate: bool = True):
        self.oracle = oracle
        self.meta = meta
        self.frames = frames
        self.polish = polish
        self.inflate = inflate

    def discover(self, p) -> ObstacleRecord:
        p = np.asarray(p, dtype=float)
        q0 = self.oracle.stats().total_queries
        m = self.meta
        coreset, E, trace = mve_coreset(self.oracle, m.eps, p, t_max=m.t_max, tol=m.precision,
                                        frames=self.frames, polish=self.polish, max_step=m.max_step)
        C = cross_polytope_bound(E, 1.0 + m.eps if self.inflate else 1.0)
        return ObstacleRecord(p, coreset, E, C, trace, self.oracle.stats().total_queries - q0)


def probe_levels(meta: WorkspaceMeta):
    """Stratified grids: level t holds the centres of a ``2^t`` per axis grid.

    Stops after the first level whose cell side is at most
    ``2 * inradius_lb / sqrt(d)``; every ball of that radius then contains a
    probe.
    """
    lo, hi = meta.bounds
    ext = hi - lo
    target = 2.0 * meta.inradius_lb / math.sqrt(meta.dim)
    t = 0
    while True:
        k = 2**t
        axes = [lo[a] + (np.arange(k) + 0.5) * ext[a] / k for a in range(meta.dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, meta.dim)
        yield t, grid
        if ext.max() / k <= target:
            return
        t += 1


@dataclass
class PreprocessResult:
    free_space: TriangulatedFreeSpace
    polytopes: List[CrossPolytope]
    stats: OracleStats
    obstacles: List[ObstacleRecord]
    probes: int = 0
    levels: int = 0
    exhausted: bool = False

    def __iter__(self):
        return iter((self.free_space, self.polytopes, self.stats))

    @property
    def removed_fraction(self) -> float:
        fs = self.free_space
        return 1.0 - fs.total_volume / fs.bounds_volume


def _inside_any(polytopes, pts) -> np.ndarray:
    out = np.zeros(len(pts), dtype=bool)
    for C in polytopes:
        out |= C.contains(pts, tol=0.0)
    return out


def preprocess(oracle: MembershipOracle, meta: WorkspaceMeta, budget: Optional[int] = None, *,
               discovery: Optional[Discovery] = None,
               on_obstacle: Optional[Callable[[ObstacleRecord], None]] = None) -> PreprocessResult:
    """Probe the workspace coarse-to-fine, discovering and carving out obstacles.

    ``budget`` caps the number of probe queries (discovery queries are not
    probes). Probes inside an already discovered polytope are skipped without
    a query.
    """
    if budget is not None and budget < 1:
        raise ValueError("budget must be >= 1")
    if meta.dim not in (2, 3):
        raise ValueError("preprocessing supports d = 2 or 3")
    discovery = discovery or Discovery(oracle, meta)
    s0 = oracle.stats()
    fs = triangulate_bounds(meta.bounds)
    polys: List[CrossPolytope] = []
    records: List[ObstacleRecord] = []
    probes = 0
    levels = 0
    exhausted = False
    stop = False
    for t, grid in probe_levels(meta):
        levels = t + 1
        skip = _inside_any(polys, grid)
        known = len(polys)
        for p, s in zip(grid, skip):
            if s or (len(polys) > known and _inside_any(polys[known:], p[None])[0]):
                continue
            if budget is not None and probes >= budget:
                stop = True
                break
            probes += 1
            if not oracle.query(p):
                continue
            rec = discovery.discover(p)
            records.append(rec)
            polys.append(rec.polytope)
            if on_obstacle is not None:
                on_obstacle(rec)
            try:
                remove_polytope(fs, rec.polytope)
            except FreeSpaceExhaustedError:
                exhausted = True
                stop = True
                break
        if stop:
            break
    return PreprocessResult(fs, polys, oracle.stats() - s0, records, probes, levels, exhausted)
