"""Experiment runners and the ``activecoreset`` command line.

Subcommands::

    activecoreset preprocess  --scenario s.json [--dump-obstacles] [--dump-triangulation]
    activecoreset plan        --scenario s.json [--sampler uniform|freespace] [--on-the-fly]
    activecoreset bench       --scenario s.json [--jobs N] [--on-the-fly]
    activecoreset mvee-curve  --shape hexagon|disk|square|random-polygon|<json> [--eps E]
    activecoreset map-approx  --scenario bitmap.json

Every subcommand accepts ``--seed``, ``--out`` and ``--deterministic`` (the
latter zeroes wall-clock columns so repeated runs give identical bytes).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .errors import ActiveCoresetError, DegenerateHullError, ScenarioError
from .freespace import TriangulatedFreeSpace, triangulate_bounds
from .mvee import Ellipsoid, mve_coreset, mvee_of_points
from .oracle import (
    AnalyticOracle,
    BitmapOracle,
    ConvexShape,
    EllipsoidShape,
    MembershipOracle,
    PolytopeShape,
    RecordingOracle,
    shape_from_dict,
)
from .pgm import write_pgm
from .planners import (
    CSV_COLUMNS,
    PLANNERS,
    Discovery,
    FreeSpaceSampler,
    PlannerConfig,
    PreprocessResult,
    UniformSampler,
    preprocess,
    rrt,
)
from .scenario import Scenario, load_scenario
from .svg import render_curve, render_map

log = logging.getLogger(__name__)

MEASURES = ("time_ms", "iterations", "samples_total", "samples_wasted", "wasted_pct", "path_length")
SAMPLERS = ("uniform", "freespace")


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _discovery(scenario: Scenario, oracle: MembershipOracle) -> Discovery:
    pre = scenario.preprocess
    return Discovery(oracle, scenario.meta, frames=pre.get("frames"), polish=pre.get("polish", 4),
                     inflate=pre.get("inflate", True))


def run_preprocess(scenario: Scenario, oracle: Optional[MembershipOracle] = None) -> PreprocessResult:
    oracle = oracle or scenario.oracle()
    return preprocess(oracle, scenario.meta, scenario.preprocess.get("budget"),
                      discovery=_discovery(scenario, oracle))


def free_volume_loss(oracle: MembershipOracle, meta, polytopes, per_axis: Optional[int] = None) -> float:
    """Fraction of the workspace that is free but lies inside a removed polytope (grid estimate)."""
    if not polytopes:
        return 0.0
    per_axis = per_axis or (400 if meta.dim == 2 else 60)
    lo, hi = meta.bounds
    axes = [lo[a] + (np.arange(per_axis) + 0.5) * (hi[a] - lo[a]) / per_axis for a in range(meta.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, meta.dim)
    removed = np.zeros(len(pts), dtype=bool)
    for C in polytopes:
        removed |= C.contains(pts)
    if not removed.any():
        return 0.0
    free = ~oracle.peek_many(pts[removed])
    return float(free.sum()) / len(pts)


def preprocess_summary(scenario: Scenario, oracle: MembershipOracle, pre: PreprocessResult) -> dict:
    return {
        "queries": pre.stats.total_queries,
        "queries_true": pre.stats.queries_true,
        "polytopes": len(pre.polytopes),
        "probes": pre.probes,
        "levels": pre.levels,
        "regions": len(pre.free_space),
        "removed_fraction": pre.removed_fraction,
        "free_volume_loss": free_volume_loss(oracle, scenario.meta, pre.polytopes),
        "exhausted": pre.exhausted,
    }


def _write_csv(path: Path, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def read_csv_rows(path) -> List[dict]:
    """Rows of a results CSV with numeric fields converted back."""
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out.append({
                "map": r["map"], "planner": r["planner"], "sampler": r["sampler"], "seed": int(r["seed"]),
                "time_ms": float(r["time_ms"]), "iterations": int(r["iterations"]),
                "samples_total": int(r["samples_total"]), "samples_wasted": int(r["samples_wasted"]),
                "path_length": float(r["path_length"]), "found": r["found"] == "True",
            })
    return out


def _stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return {"n": 0, "mean": None, "std": None, "min": None, "max": None, "median": None}
    return {
        "n": int(v.size),
        "mean": float(v.mean()),
        "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
        "min": float(v.min()),
        "max": float(v.max()),
        "median": float(np.median(v)),
    }


def aggregate_rows(rows: Sequence[dict]) -> Dict[str, dict]:
    """Per ``planner/sampler`` statistics of every measure.

    ``path_length`` is summarised over successful trials only; ``wasted_pct``
    is ``100 * samples_wasted / samples_total`` per trial (0 when nothing was
    sampled).
    """
    groups: Dict[str, List[dict]] = {}
    for r in rows:
        groups.setdefault(f"{r['planner']}/{r['sampler']}", []).append(r)
    out = {}
    for key in sorted(groups):
        g = groups[key]
        entry = {"trials": len(g), "success_rate": sum(bool(r["found"]) for r in g) / len(g)}
        for m in MEASURES:
            if m == "wasted_pct":
                vals = [100.0 * r["samples_wasted"] / r["samples_total"] if r["samples_total"] else 0.0 for r in g]
            elif m == "path_length":
                vals = [r["path_length"] for r in g if r["found"]]
            else:
                vals = [r[m] for r in g]
            entry[m] = _stats(vals)
        out[key] = entry
    return out


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    scenario: str
    rows: List[dict]
    aggregates: Dict[str, dict]
    preprocessing: dict
    failures: List[dict] = field(default_factory=list)
    paths: Dict[str, Optional[np.ndarray]] = field(default_factory=dict, repr=False)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(r)
        return buf.getvalue()


@dataclass(frozen=True)
class _Job:
    scenario: Scenario
    planner: str
    sampler: str
    seed: int
    free_space: Optional[TriangulatedFreeSpace]
    on_the_fly: bool
    deterministic: bool


def _run_trial(job: _Job):
    sc = job.scenario
    oracle = sc.oracle()
    if job.sampler == "uniform":
        sampler = UniformSampler(sc.meta.bounds, job.seed)
    elif job.on_the_fly:
        sampler = FreeSpaceSampler(triangulate_bounds(sc.meta.bounds), job.seed, discovery=_discovery(sc, oracle))
    else:
        sampler = FreeSpaceSampler(job.free_space, job.seed)
    try:
        res = PLANNERS[job.planner](oracle, sampler, sc.start, sc.goal, sc.planner, seed=job.seed)
    except ActiveCoresetError as exc:
        return None, {"planner": job.planner, "sampler": job.sampler, "seed": job.seed,
                      "error": f"{type(exc).__name__}: {exc}"}
    row = res.csv_row(sc.name, job.planner, job.sampler, job.seed, job.deterministic)
    return row, res.path


def run_benchmark(scenario: Scenario, *, out_dir=None, jobs: int = 1, deterministic: bool = False,
                  on_the_fly: bool = False, dump_obstacles: bool = False,
                  dump_triangulation: bool = False) -> ExperimentReport:
    """Every planner with both samplers over ``trials`` seeds; writes CSV, aggregates and a map."""
    oracle = scenario.oracle()
    pre = run_preprocess(scenario, oracle)
    summary = preprocess_summary(scenario, oracle, pre)
    work = [
        _Job(scenario, planner, sampler, scenario.seed + i, pre.free_space, on_the_fly, deterministic)
        for planner in scenario.planners
        for sampler in SAMPLERS
        for i in range(scenario.trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_trial, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        outcomes = [_run_trial(j) for j in work]
    rows, failures, paths = [], [], {}
    for job, (row, extra) in zip(work, outcomes):
        if row is None:
            failures.append(extra)
            continue
        rows.append(row)
        if job.seed == scenario.seed:
            paths[f"{job.planner}/{job.sampler}"] = extra
    report = ExperimentReport(scenario.name, rows, aggregate_rows(rows), summary, failures, paths)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "results.csv", rows)
        doc = {"scenario": scenario.name, "preprocessing": summary, "aggregates": report.aggregates,
               "failures": failures}
        (out / "aggregates.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        _dump(out, scenario, pre, dump_obstacles, dump_triangulation)
        for key, path in paths.items():
            name = key.replace("/", "_")
            (out / f"{name}.svg").write_text(_map_svg(scenario, oracle, pre, path=path, title=key))
    return report


def _dump(out: Path, scenario: Scenario, pre: PreprocessResult, obstacles: bool, triangulation: bool) -> None:
    if obstacles:
        doc = [rec.to_dict() for rec in pre.obstacles]
        (out / "obstacles.json").write_text(json.dumps(doc, indent=2) + "\n")
    if triangulation:
        (out / "triangulation.json").write_text(pre.free_space.to_json() + "\n")


def _map_svg(scenario: Scenario, oracle, pre: Optional[PreprocessResult], *, path=None, tree=None, title=None,
             regions=True) -> str:
    if scenario.meta.dim != 2:
        return render_map(scenario.meta.bounds, title=(title or "") + " (3-D map: projection omitted)")
    shapes = [] if scenario.is_bitmap else [shape_from_dict(s) if isinstance(s, dict) else s
                                            for s in scenario.map["shapes"]]
    bitmap = oracle if isinstance(oracle, BitmapOracle) else None
    return render_map(scenario.meta.bounds, shapes=shapes, bitmap=bitmap,
                      polytopes=pre.polytopes if pre else (),
                      regions=pre.free_space.simplices if (pre and regions) else None,
                      tree=tree, path=path, start=scenario.start, goal=scenario.goal, title=title)


# ---------------------------------------------------------------------------
# MVEE error curve
# ---------------------------------------------------------------------------


def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0)) -> PolytopeShape:
    t = 2 * np.pi * np.arange(n) / n
    return PolytopeShape(np.asarray(center) + radius * np.stack([np.cos(t), np.sin(t)], axis=1))


def random_polygon(seed: int = 0, n: int = 16) -> PolytopeShape:
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, 2 * np.pi, n))
    r = rng.uniform(0.6, 1.0, n)
    return PolytopeShape(np.stack([r * np.cos(t) * 1.4, r * np.sin(t)], axis=1))


def builtin_shape(name: str, seed: int = 0) -> ConvexShape:
    if name == "hexagon":
        return regular_polygon(6)
    if name == "square":
        return regular_polygon(4)
    if name == "disk":
        return EllipsoidShape.ball([0.0, 0.0], 1.0)
    if name == "random-polygon":
        return random_polygon(seed)
    try:
        return shape_from_dict(json.loads(name))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"--shape: not a builtin name or a shape descriptor ({exc})") from None


def reference_mvee(shape: ConvexShape) -> Ellipsoid:
    """Exact (or 1e-10 accurate) minimum-volume ellipsoid of an analytic shape."""
    if isinstance(shape, EllipsoidShape):
        return Ellipsoid(shape.center, shape.A)
    if isinstance(shape, PolytopeShape):
        return mvee_of_points(shape.vertices, tol=1e-10)
    raise TypeError(f"no reference ellipsoid for {type(shape).__name__}")


def _shape_center_and_radius(shape: ConvexShape):
    if isinstance(shape, EllipsoidShape):
        return shape.center, float(np.sqrt(np.linalg.eigvalsh(np.linalg.inv(shape.A)).max()))
    c = shape.vertices.mean(axis=0)
    return c, float(np.linalg.norm(shape.vertices - c, axis=1).max())


@dataclass
class MveeCurve:
    iterations: np.ndarray
    errors: np.ndarray
    final_ratio: float
    queries: int
    coreset_size: int

    def to_dict(self) -> dict:
        return {"iterations": self.iterations.tolist(), "errors": self.errors.tolist(),
                "final_ratio": self.final_ratio, "queries": self.queries, "coreset_size": self.coreset_size}


def run_mvee_curve(shape: ConvexShape, eps: float, *, tol: Optional[float] = None, out_dir=None) -> MveeCurve:
    """Relative volume error ``vol(reference) / vol(mvee(coreset so far)) - 1`` after each step.

    Step 0 is the crude seed coreset. Coresets only grow, so the series is
    nonincreasing up to the finite-set solver tolerance.
    """
    c, radius = _shape_center_and_radius(shape)
    oracle = AnalyticOracle([shape], shape.dim)
    coreset, _, trace = mve_coreset(oracle, eps, c, t_max=4.0 * radius, tol=tol)
    ref = reference_mvee(shape)
    n_seed = len(coreset) - len(trace)
    iters, errs = [], []
    for k in range(len(trace) + 1):
        try:
            E = mvee_of_points(coreset.points[: n_seed + k], tol=1e-10)
        except DegenerateHullError:
            continue
        iters.append(k)
        errs.append(max(math.expm1(ref.log_volume - E.log_volume), 0.0))
    curve = MveeCurve(np.array(iters), np.array(errs), 1.0 + errs[-1], trace.queries_used, len(coreset))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "mvee_curve.json").write_text(json.dumps(curve.to_dict(), indent=2) + "\n")
        (out / "mvee_curve.svg").write_text(
            render_curve(curve.iterations, np.maximum(curve.errors, 1e-16), title=f"MVEE error, eps={eps:g}",
                         xlabel="iteration", ylabel="relative volume error", log_y=True))
    return curve


# ---------------------------------------------------------------------------
# map approximation
# ---------------------------------------------------------------------------


class _BudgetSpent(Exception):
    pass


class _BudgetOracle(RecordingOracle):
    """Recording oracle that stops the caller once ``budget`` queries have been asked."""

    def __init__(self, inner, budget: int):
        super().__init__(inner)
        self.budget = budget

    def _contains(self, pts):
        if self._total >= self.budget:
            raise _BudgetSpent
        return super()._contains(pts)


def _rasterize_hull(points, centers, mask) -> None:
    """Set ``mask`` at every pixel centre inside the hull of ``points``."""
    if len(points) == 0:
        return
    try:
        tri = Delaunay(points)
    except (QhullError, ValueError):  # too few or collinear points; the caller marks them singly
        return
    lo, hi = points.min(axis=0), points.max(axis=0)
    box = np.all((centers >= lo) & (centers <= hi), axis=-1)
    idx = np.flatnonzero(box.ravel())
    inside = tri.find_simplex(centers.reshape(-1, 2)[idx]) >= 0
    mask.ravel()[idx[inside]] = True


def _mark_pixels(oracle: BitmapOracle, pts, mask) -> None:
    if len(pts) == 0:
        return
    rc = oracle.pixel_of(pts)
    h, w = mask.shape
    ok = (rc[:, 0] >= 0) & (rc[:, 0] < h) & (rc[:, 1] >= 0) & (rc[:, 1] < w)
    mask[rc[ok, 0], rc[ok, 1]] = True


@dataclass
class MapApproxReport:
    pixels: int
    table: List[dict]
    reconstructed: Dict[str, np.ndarray] = field(repr=False, default_factory=dict)

    def row(self, method: str) -> dict:
        return next(r for r in self.table if r["method"] == method)


def _sweep(oracle: BitmapOracle, start_px):
    """Breadth-first flood over free pixels from ``start_px``; returns query order and answers."""
    h, w = oracle.shape
    centers = oracle.pixel_centers()
    seen = np.zeros((h, w), dtype=bool)
    order, answers = [], []
    frontier = [tuple(start_px)]
    seen[start_px] = True
    while frontier:
        batch = np.array(frontier)
        hit = oracle.query_many(centers[batch[:, 0], batch[:, 1]])
        order.append(batch)
        answers.append(hit)
        nxt = []
        for (r, c), blocked in zip(frontier, hit):
            if blocked:
                continue
            for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= rr < h and 0 <= cc < w and not seen[rr, cc]:
                    seen[rr, cc] = True
                    nxt.append((rr, cc))
        frontier = nxt
    return np.concatenate(order), np.concatenate(answers)


def run_map_approx(scenario: Scenario, *, out_dir=None, checkpoints: Optional[Sequence[int]] = None,
                   seed: Optional[int] = None) -> MapApproxReport:
    """Pixel agreement of three explorers at fixed query counts and at completion.

    * ``sweep``: breadth-first frontier over free pixels from the start. Until
      it finishes, unvisited pixels count as free; at completion they count
      as obstacle (unreachable).
    * ``rrt``: RRT exploration from the start with uniform samples; a pixel is
      an obstacle once some query inside it answered true. It gets the same
      query budget that ``ours`` needed.
    * ``ours``: preprocessing; each obstacle is the hull of the true points
      seen while discovering it.
    """
    if not scenario.is_bitmap:
        raise ScenarioError("field 'map': map approximation needs a bitmap scenario")
    checkpoints = sorted(checkpoints or scenario.map_approx.get("checkpoints", [5000, 10000]))
    seed = scenario.seed if seed is None else seed
    base: BitmapOracle = scenario.oracle()
    truth = base.obstacle_mask()
    centers = base.pixel_centers()
    n_pix = truth.size

    def agreement(mask):
        return float((mask == truth).mean())

    # ours
    rec = RecordingOracle(base)
    windows = []
    disc = _discovery(scenario, rec)

    class _Windowed(Discovery):
        def discover(self, p):
            a = rec.stats().total_queries - 1  # the probe that hit
            r = disc.discover(p)
            windows.append((a, rec.stats().total_queries))
            return r

    pre = preprocess(rec, scenario.meta, scenario.map_approx.get("budget") or scenario.preprocess.get("budget"),
                     discovery=_Windowed(rec, scenario.meta))
    ours_total = pre.stats.total_queries

    def ours_mask(limit):
        m = np.zeros_like(truth)
        for a, b in windows:
            if a >= limit:
                break
            pts = rec.hits(a, min(b, limit))
            _rasterize_hull(pts, centers, m)
            _mark_pixels(base, pts, m)
        return m

    # sweep
    start_px = tuple(int(v) for v in base.pixel_of(scenario.start)[0])
    order, answers = _sweep(base, start_px)
    sweep_total = len(order)

    def sweep_mask(limit):
        if limit >= sweep_total:
            m = np.ones_like(truth)
            free = order[~answers]
            m[free[:, 0], free[:, 1]] = False
            return m
        m = np.zeros_like(truth)
        o, a = order[:limit], answers[:limit]
        m[o[a, 0], o[a, 1]] = True
        return m

    # rrt exploration at our budget
    budget = max(ours_total, 1)
    bo = _BudgetOracle(base, budget)
    cfg = scenario.planner
    explore = PlannerConfig(step_size=cfg.step_size, max_iterations=10**9, goal_tolerance=cfg.goal_tolerance,
                            goal_bias=0.0, edge_resolution=cfg.edge_resolution, stop_on_goal=False)
    try:
        rrt(bo, UniformSampler(scenario.meta.bounds, seed), scenario.start, scenario.goal, explore, seed=seed)
    except _BudgetSpent:
        pass

    def rrt_mask(limit):
        m = np.zeros_like(truth)
        _mark_pixels(base, bo.hits(0, min(limit, budget)), m)
        return m

    methods = [("sweep", sweep_mask, sweep_total), ("rrt", rrt_mask, budget), ("ours", ours_mask, ours_total)]
    table = []
    masks = {}
    for name, fn, total in methods:
        row = {"method": name, "queries": int(total)}
        for q in checkpoints:
            row[f"agreement@{q}"] = agreement(fn(q))
        masks[name] = fn(total)
        row["agreement"] = agreement(masks[name])
        table.append(row)
    report = MapApproxReport(n_pix, table, masks)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_pgm(out / "reconstructed.pgm", np.where(masks["ours"], 0, 255))
        for name in ("sweep", "rrt"):
            write_pgm(out / f"reconstructed_{name}.pgm", np.where(masks[name], 0, 255))
        doc = {"scenario": scenario.name, "pixels": n_pix, "checkpoints": checkpoints, "table": table}
        (out / "map_approx.json").write_text(json.dumps(doc, indent=2) + "\n")
        (out / "map_approx.svg").write_text(_map_svg(scenario, base, pre, regions=False, title="map approximation"))
    return report


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="scenario JSON file")
    common.add_argument("--seed", type=int, default=None, help="base seed (overrides the scenario)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel trials")
    common.add_argument("--dump-obstacles", action="store_true", help="write obstacles.json")
    common.add_argument("--dump-triangulation", action="store_true", help="write triangulation.json")
    common.add_argument("--on-the-fly", action="store_true", help="discover obstacles while planning")
    common.add_argument("--deterministic", action="store_true", help="zero wall-clock fields")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="activecoreset", description="Obstacle discovery and planner experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("preprocess", parents=[common], help="discover obstacles and triangulate free space")
    plan = sub.add_parser("plan", parents=[common], help="one run per planner")
    plan.add_argument("--sampler", choices=SAMPLERS, default="freespace")
    sub.add_parser("bench", parents=[common], help="all planners x samplers x trials")
    mc = sub.add_parser("mvee-curve", parents=[common], help="MVEE error against iterations")
    mc.add_argument("--shape", default="hexagon", help="hexagon, square, disk, random-polygon or a JSON shape")
    mc.add_argument("--eps", type=float, default=0.001)
    sub.add_parser("map-approx", parents=[common], help="pixel agreement against query count")
    return p


def _need_scenario(args) -> Scenario:
    if args.scenario is None:
        raise ScenarioError("--scenario is required for this command")
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc.seed = args.seed
    return sc


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except ActiveCoresetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    out: Path = args.out
    if args.command == "mvee-curve":
        curve = run_mvee_curve(builtin_shape(args.shape, args.seed or 0), args.eps, out_dir=out)
        print(json.dumps({"final_ratio": curve.final_ratio, "iterations": int(curve.iterations[-1]),
                          "queries": curve.queries, "coreset_size": curve.coreset_size}))
        return 0
    sc = _need_scenario(args)
    if args.command == "preprocess":
        oracle = sc.oracle()
        pre = run_preprocess(sc, oracle)
        out.mkdir(parents=True, exist_ok=True)
        _dump(out, sc, pre, args.dump_obstacles, args.dump_triangulation)
        (out / "preprocess.svg").write_text(_map_svg(sc, oracle, pre, title=f"{sc.name}: preprocessing"))
        print(json.dumps(preprocess_summary(sc, oracle, pre), sort_keys=True))
        return 0
    if args.command == "plan":
        oracle = sc.oracle()
        pre = None
        if args.sampler == "freespace" and not args.on_the_fly:
            pre = run_preprocess(sc, oracle)
        out.mkdir(parents=True, exist_ok=True)
        rows = []
        for name in sc.planners:
            if args.sampler == "uniform":
                sampler = UniformSampler(sc.meta.bounds, sc.seed)
            elif args.on_the_fly:
                sampler = FreeSpaceSampler(triangulate_bounds(sc.meta.bounds), sc.seed, discovery=_discovery(sc, oracle))
            else:
                sampler = FreeSpaceSampler(pre.free_space, sc.seed)
            res = PLANNERS[name](oracle, sampler, sc.start, sc.goal, sc.planner, seed=sc.seed)
            rows.append(res.csv_row(sc.name, name, args.sampler, sc.seed, args.deterministic))
            (out / f"plan_{name}.svg").write_text(
                _map_svg(sc, oracle, pre, path=res.path, tree=res.tree, title=f"{name} / {args.sampler}"))
        if pre is not None:
            _dump(out, sc, pre, args.dump_obstacles, args.dump_triangulation)
        _write_csv(out / "results.csv", rows)
        for r in rows:
            print(json.dumps(r))
        return 0
    if args.command == "bench":
        report = run_benchmark(sc, out_dir=out, jobs=args.jobs, deterministic=args.deterministic,
                               on_the_fly=args.on_the_fly, dump_obstacles=args.dump_obstacles,
                               dump_triangulation=args.dump_triangulation)
        for key, agg in report.aggregates.items():
            it = agg["iterations"]
            pl = agg["path_length"]
            print(f"{key:24s} success {agg['success_rate']:.2f}  iterations {it['mean']:.1f} +- {it['std']:.1f}  "
                  f"wasted {agg['wasted_pct']['mean']:.1f}%  length {pl['mean'] if pl['n'] else float('nan'):.4f}")
        return 0
    if args.command == "map-approx":
        report = run_map_approx(sc, out_dir=out)
        for row in report.table:
            print(json.dumps(row))
        return 0
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
