"""Scenario documents: one JSON file per experiment.

Schema (keys not listed are rejected)::

    {
      "name": "map_c",                        # optional, defaults to the file stem
      "dim": 2,
      "bounds": [[0, 0], [1, 1]],             # optional for bitmaps
      "eps": 0.01,
      "inradius_lb": 0.05,
      "circumradius_ub": 1.0,
      "precision": null,                      # optional absolute ray tolerance
      "min_gap": 0.049,                       # optional
      "map": {"shapes": [{"type": "disk", "center": [0.5, 0.5], "radius": 0.1}]}
          or {"bitmap": "maps/x.pgm", "threshold": 128, "resolution": 1.0, "origin": [0, 0]},
      "start": [0.05, 0.05],
      "goal": [0.95, 0.95],
      "planners": ["rrt", "rrt_star"],
      "trials": 20,
      "seed": 0,
      "planner": {"step_size": 0.05, "max_iterations": 3000, "goal_tolerance": 0.05, ...},
      "preprocess": {"budget": null, "frames": null, "polish": 4, "inflate": true},
      "map_approx": {"checkpoints": [5000, 10000], "budget": 9000}
    }

Bitmap paths are resolved relative to the scenario file.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import MapFileNotFoundError, MapFormatError, ScenarioError
from .oracle import MembershipOracle, WorkspaceMeta, make_analytic_oracle, make_bitmap_oracle, shape_from_dict
from .pgm import read_pgm
from .planners import PLANNERS, PlannerConfig

_TOP_KEYS = {"name", "dim", "bounds", "eps", "inradius_lb", "circumradius_ub", "precision", "min_gap", "map",
             "start", "goal", "planners", "trials", "seed", "planner", "preprocess", "map_approx"}
_PLANNER_KEYS = {"step_size", "max_iterations", "goal_tolerance", "goal_bias", "rewire_factor", "edge_resolution",
                 "stop_on_goal"}
_PREPROCESS_KEYS = {"budget", "frames", "polish", "inflate"}
_MAP_APPROX_KEYS = {"checkpoints", "budget"}


@dataclass
class Scenario:
    name: str
    meta: WorkspaceMeta
    map: Dict[str, Any]
    start: np.ndarray
    goal: np.ndarray
    planners: List[str]
    trials: int
    seed: int
    planner: PlannerConfig
    preprocess: Dict[str, Any] = field(default_factory=dict)
    map_approx: Dict[str, Any] = field(default_factory=dict)
    source: Optional[Path] = None

    @property
    def is_bitmap(self) -> bool:
        return "bitmap" in self.map

    def bitmap_path(self) -> Path:
        return Path(self.map["bitmap"])

    def oracle(self) -> MembershipOracle:
        """A fresh oracle (fresh counters) for this scenario."""
        if self.is_bitmap:
            m = self.map
            return make_bitmap_oracle(self.bitmap_path(), threshold=m.get("threshold", 128), meta=self.meta,
                                      origin=m.get("origin"), resolution=m.get("resolution"))
        return make_analytic_oracle(self.map["shapes"], self.meta)


class _Locator:
    """Best-effort line numbers for keys, for error messages."""

    def __init__(self, text: str):
        self.text = text

    def line_of(self, key: str) -> Optional[int]:
        m = re.search(r'"%s"\s*:' % re.escape(key), self.text)
        return None if m is None else self.text.count("\n", 0, m.start()) + 1


def _fail(loc: _Locator, path: str, msg: str):
    line = loc.line_of(path.split(".")[-1].split("[")[0])
    where = f"field '{path}'" + (f" (line {line})" if line else "")
    raise ScenarioError(f"{where}: {msg}")


def _number(loc, doc, key, path=None, *, positive=False, integer=False, default=None, required=True):
    path = path or key
    if key not in doc or doc[key] is None:
        if required and default is None:
            _fail(loc, path, "is required")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(loc, path, f"expected a number, got {type(v).__name__}")
    if integer and int(v) != v:
        _fail(loc, path, f"expected an integer, got {v}")
    if positive and v <= 0:
        _fail(loc, path, f"must be positive, got {v}")
    return int(v) if integer else float(v)


def _vector(loc, doc, key, dim, path=None):
    path = path or key
    if key not in doc:
        _fail(loc, path, "is required")
    try:
        v = np.asarray(doc[key], dtype=float)
    except (TypeError, ValueError):
        _fail(loc, path, "expected a list of numbers")
    if v.shape != (dim,):
        _fail(loc, path, f"expected {dim} coordinates, got shape {v.shape}")
    return v


def _unknown(loc, doc, allowed, prefix=""):
    extra = sorted(set(doc) - allowed)
    if extra:
        _fail(loc, prefix + extra[0], "unknown key")


def parse_scenario(text: str, source: Optional[Path] = None) -> Scenario:
    """Validate a scenario document; raises :class:`ScenarioError` naming the field and line."""
    loc = _Locator(text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("line 1: scenario must be a JSON object")
    _unknown(loc, doc, _TOP_KEYS)
    base = source.parent if source is not None else Path(".")

    dim = _number(loc, doc, "dim", integer=True, positive=True)
    if dim not in (2, 3):
        _fail(loc, "dim", f"only 2 and 3 are supported, got {dim}")

    mdoc = doc.get("map")
    if not isinstance(mdoc, dict):
        _fail(loc, "map", "expected an object with 'shapes' or 'bitmap'")
    if ("shapes" in mdoc) == ("bitmap" in mdoc):
        _fail(loc, "map", "give exactly one of 'shapes' or 'bitmap'")
    mdoc = dict(mdoc)
    image_shape = None
    if "bitmap" in mdoc:
        if dim != 2:
            _fail(loc, "map.bitmap", "bitmap maps are 2-D only")
        p = Path(mdoc["bitmap"])
        p = p if p.is_absolute() else base / p
        try:
            image_shape = read_pgm(p).shape
        except (MapFileNotFoundError, MapFormatError) as exc:
            _fail(loc, "map.bitmap", str(exc))
        mdoc["bitmap"] = str(p)
        res = _number(loc, mdoc, "resolution", "map.resolution", positive=True, default=1.0)
        origin = np.asarray(mdoc.get("origin", [0.0, 0.0]), dtype=float)
        mdoc["resolution"], mdoc["origin"] = res, origin.tolist()
    else:
        if not isinstance(mdoc["shapes"], list):
            _fail(loc, "map.shapes", "expected a list")
        for i, sd in enumerate(mdoc["shapes"]):
            try:
                shape = shape_from_dict(sd)
            except (KeyError, TypeError, ValueError, AttributeError) as exc:
                _fail(loc, f"map.shapes[{i}]", f"bad shape descriptor ({exc})")
            if shape.dim != dim:
                _fail(loc, f"map.shapes[{i}]", f"shape has dimension {shape.dim}, scenario has {dim}")

    if "bounds" in doc:
        bounds = np.asarray(doc["bounds"], dtype=float)
    elif image_shape is not None:
        h, w = image_shape
        o = np.asarray(mdoc["origin"])
        bounds = np.array([o, o + mdoc["resolution"] * np.array([w, h])])
    else:
        _fail(loc, "bounds", "is required for analytic maps")
    if bounds.shape != (2, dim) or np.any(bounds[1] <= bounds[0]):
        _fail(loc, "bounds", f"expected [[lo...], [hi...]] with lo < hi in {dim} coordinates")

    try:
        meta = WorkspaceMeta(dim, bounds, _number(loc, doc, "eps"), _number(loc, doc, "inradius_lb"),
                             _number(loc, doc, "circumradius_ub"),
                             precision=_number(loc, doc, "precision", required=False),
                             min_gap=_number(loc, doc, "min_gap", required=False))
    except ValueError as exc:
        key = str(exc).split()[0]
        _fail(loc, key if key in _TOP_KEYS else "eps", str(exc))

    start = _vector(loc, doc, "start", dim)
    goal = _vector(loc, doc, "goal", dim)
    for key, v in (("start", start), ("goal", goal)):
        if not meta.in_bounds(v):
            _fail(loc, key, f"{v.tolist()} lies outside the bounds")

    planners = doc.get("planners", ["rrt", "rrt_star"])
    if not isinstance(planners, list) or not planners:
        _fail(loc, "planners", "expected a nonempty list")
    for name in planners:
        if name not in PLANNERS:
            _fail(loc, "planners", f"unknown planner {name!r}; choose from {sorted(PLANNERS)}")

    trials = _number(loc, doc, "trials", integer=True, default=20)
    if trials < 1:
        _fail(loc, "trials", f"must be >= 1, got {trials}")
    seed = _number(loc, doc, "seed", integer=True, default=0, required=False)
    if seed < 0:
        _fail(loc, "seed", "must be >= 0")

    pdoc = doc.get("planner", {})
    if not isinstance(pdoc, dict):
        _fail(loc, "planner", "expected an object")
    _unknown(loc, pdoc, _PLANNER_KEYS, "planner.")
    kwargs = {}
    for key in _PLANNER_KEYS - {"stop_on_goal"}:
        if key in pdoc:
            kwargs[key] = _number(loc, pdoc, key, "planner." + key, integer=(key == "max_iterations"))
    if "stop_on_goal" in pdoc:
        kwargs["stop_on_goal"] = bool(pdoc["stop_on_goal"])
    for key in ("step_size", "max_iterations", "goal_tolerance"):
        if key not in kwargs:
            _fail(loc, "planner." + key, "is required")
    kwargs.setdefault("edge_resolution", meta.eps)
    try:
        cfg = PlannerConfig(**kwargs)
    except ValueError as exc:
        _fail(loc, "planner." + str(exc).split()[0], str(exc))

    pre = doc.get("preprocess", {})
    if not isinstance(pre, dict):
        _fail(loc, "preprocess", "expected an object")
    _unknown(loc, pre, _PREPROCESS_KEYS, "preprocess.")
    if pre.get("budget") is not None and _number(loc, pre, "budget", "preprocess.budget", integer=True) < 1:
        _fail(loc, "preprocess.budget", "must be >= 1")

    ma = doc.get("map_approx", {})
    if not isinstance(ma, dict):
        _fail(loc, "map_approx", "expected an object")
    _unknown(loc, ma, _MAP_APPROX_KEYS, "map_approx.")
    checkpoints = ma.get("checkpoints", [5000, 10000])
    if not isinstance(checkpoints, list) or any(isinstance(c, bool) or not isinstance(c, int) or c < 1
                                                for c in checkpoints):
        _fail(loc, "map_approx.checkpoints", "expected a list of positive integers")

    name = doc.get("name") or (source.stem if source is not None else "scenario")
    return Scenario(str(name), meta, mdoc, start, goal, list(planners), trials, seed, cfg, dict(pre), dict(ma),
                    source)


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    return parse_scenario(path.read_text(), path)
