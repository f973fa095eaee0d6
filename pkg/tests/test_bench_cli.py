import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from activecoreset.bench_cli import (
    aggregate_rows,
    builtin_shape,
    main,
    read_csv_rows,
    run_benchmark,
    run_map_approx,
    run_mvee_curve,
)
from activecoreset.pgm import read_pgm, write_pgm
from activecoreset.planners import probe_levels
from activecoreset.scenario import load_scenario

from conftest import SCENARIOS

GOLDEN_HEADER = "map,planner,sampler,seed,time_ms,iterations,samples_total,samples_wasted,path_length,found"


@pytest.fixture
def small(tmp_path):
    doc = {
        "name": "small",
        "dim": 2,
        "bounds": [[0, 0], [1, 1]],
        "eps": 0.01,
        "inradius_lb": 0.05,
        "circumradius_ub": 1.0,
        "map": {"shapes": [{"type": "disk", "center": [0.5, 0.5], "radius": 0.2},
                           {"type": "box", "lo": [0.1, 0.7], "hi": [0.3, 0.9]}]},
        "start": [0.05, 0.05],
        "goal": [0.95, 0.95],
        "trials": 3,
        "seed": 5,
        "planner": {"step_size": 0.05, "max_iterations": 2000, "goal_tolerance": 0.05},
    }
    p = tmp_path / "small.json"
    p.write_text(json.dumps(doc))
    return p


def _cli(*args):
    return main([str(a) for a in args])


def test_csv_golden_header_and_rows(small, tmp_path):
    assert _cli("bench", "--scenario", small, "--out", tmp_path / "o", "--deterministic") == 0
    lines = (tmp_path / "o" / "results.csv").read_text().splitlines()
    assert lines[0] == GOLDEN_HEADER
    assert len(lines) == 1 + 2 * 2 * 3
    rows = read_csv_rows(tmp_path / "o" / "results.csv")
    assert [r["seed"] for r in rows[:3]] == [5, 6, 7]
    assert {r["sampler"] for r in rows} == {"uniform", "freespace"}
    assert all(r["time_ms"] == 0.0 for r in rows)


def test_single_trial_run_is_byte_identical(small, tmp_path):
    for out in ("a", "b"):
        assert _cli("bench", "--scenario", small, "--out", tmp_path / out, "--deterministic",
                    "--seed", "9") == 0
    for name in ("results.csv", "aggregates.json", "rrt_uniform.svg", "rrt_star_freespace.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parallel_trials_match_serial(small, tmp_path):
    sc = load_scenario(small)
    a = run_benchmark(sc, jobs=1, deterministic=True)
    b = run_benchmark(sc, jobs=2, deterministic=True)
    assert a.csv_text() == b.csv_text()


def test_aggregates_recompute_from_rows(small, tmp_path):
    _cli("bench", "--scenario", small, "--out", tmp_path, "--dump-obstacles", "--dump-triangulation")
    emitted = json.loads((tmp_path / "aggregates.json").read_text())["aggregates"]
    rows = read_csv_rows(tmp_path / "results.csv")
    again = aggregate_rows(rows)
    assert emitted.keys() == again.keys()
    for key, agg in emitted.items():
        group = [r for r in rows if f"{r['planner']}/{r['sampler']}" == key]
        it = np.array([r["iterations"] for r in group], dtype=float)
        assert agg["iterations"]["mean"] == pytest.approx(it.mean(), abs=1e-12)
        assert agg["iterations"]["std"] == pytest.approx(it.std(ddof=1), abs=1e-12)
        for m, s in agg.items():
            if isinstance(s, dict):
                for stat, v in s.items():
                    w = again[key][m][stat]
                    assert (v is None and w is None) or abs(v - w) <= 1e-12
    obstacles = json.loads((tmp_path / "obstacles.json").read_text())
    assert len(obstacles) == 2 and all(len(o["cross_polytope"]["vertices"]) == 4 for o in obstacles)
    tri = json.loads((tmp_path / "triangulation.json").read_text())
    assert all(len(t) == 3 for t in tri)


def test_wasted_percentages(small):
    rep = run_benchmark(load_scenario(small), deterministic=True)
    assert rep.aggregates["rrt/freespace"]["wasted_pct"]["mean"] == 0.0
    assert rep.aggregates["rrt/uniform"]["wasted_pct"]["mean"] > 0.0
    assert rep.failures == []


def test_svgs_are_valid_xml(small, tmp_path):
    _cli("bench", "--scenario", small, "--out", tmp_path, "--deterministic")
    _cli("plan", "--scenario", small, "--out", tmp_path / "p", "--sampler", "freespace")
    _cli("preprocess", "--scenario", small, "--out", tmp_path / "q")
    svgs = list(tmp_path.rglob("*.svg"))
    assert len(svgs) >= 6
    for f in svgs:
        root = ET.fromstring(f.read_text())
        assert root.tag.endswith("svg")


def test_cli_reports_scenario_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 2, "eps": 7}')
    assert _cli("bench", "--scenario", bad, "--out", tmp_path) == 2
    assert "error:" in capsys.readouterr().err
    assert _cli("bench", "--out", tmp_path) == 2


def test_plan_on_the_fly(small, tmp_path, capsys):
    assert _cli("plan", "--scenario", small, "--out", tmp_path, "--on-the-fly", "--deterministic") == 0
    rows = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert {r["planner"] for r in rows} == {"rrt", "rrt_star"}
    assert all(r["found"] for r in rows)


# -- MVEE curve -------------------------------------------------------------


def test_mvee_curve_hexagon(tmp_path):
    curve = run_mvee_curve(builtin_shape("hexagon"), 0.001, out_dir=tmp_path)
    assert curve.final_ratio <= 1 + 1 / 1001
    doc = json.loads((tmp_path / "mvee_curve.json").read_text())
    assert doc["final_ratio"] == curve.final_ratio
    ET.fromstring((tmp_path / "mvee_curve.svg").read_text())


def test_mvee_curve_disk_exact_after_seed():
    curve = run_mvee_curve(builtin_shape("disk"), 0.01)
    assert curve.iterations.tolist() == [0]
    assert curve.errors[0] <= 0.01


def test_mvee_curve_random_polygon_monotone():
    curve = run_mvee_curve(builtin_shape("random-polygon", seed=3), 0.01)
    assert curve.final_ratio <= 1.01
    e = curve.errors
    smooth = np.convolve(e, np.ones(3) / 3, mode="valid") if len(e) >= 3 else e
    assert np.all(np.diff(smooth) <= 1e-9)


def test_mvee_curve_cli(tmp_path, capsys):
    assert _cli("mvee-curve", "--shape", "square", "--eps", "0.01", "--out", tmp_path) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["final_ratio"] <= 1.01
    assert _cli("mvee-curve", "--shape", "blob", "--out", tmp_path) == 2


# -- map approximation ------------------------------------------------------


def _bitmap_scenario(tmp_path, image, **extra):
    write_pgm(tmp_path / "m.pgm", image)
    h, w = image.shape
    doc = {
        "dim": 2, "eps": 0.5, "inradius_lb": 5.0, "circumradius_ub": 40.0, "precision": 4.0, "min_gap": 4.0,
        "map": {"bitmap": "m.pgm"}, "start": [1.5, 1.5], "goal": [w - 1.5, h - 1.5], "trials": 1,
        "planner": {"step_size": 4.0, "max_iterations": 1000, "goal_tolerance": 2.0, "edge_resolution": 1.0},
        "preprocess": {"frames": 1, "polish": 0},
        "map_approx": {"checkpoints": [100, 1000]},
    }
    doc.update(extra)
    (tmp_path / "s.json").write_text(json.dumps(doc))
    return load_scenario(tmp_path / "s.json")


def test_map_approx_empty_map(tmp_path):
    sc = _bitmap_scenario(tmp_path, np.full((40, 60), 255, dtype=np.uint8))
    rep = run_map_approx(sc, out_dir=tmp_path / "out")
    ours = rep.row("ours")
    assert ours["agreement"] == 1.0
    assert ours["queries"] <= sum(len(g) for _, g in probe_levels(sc.meta))
    img = read_pgm(tmp_path / "out" / "reconstructed.pgm")
    assert img.shape == (40, 60) and np.all(img == 255)
    ET.fromstring((tmp_path / "out" / "map_approx.svg").read_text())


def test_map_approx_needs_bitmap(small):
    from activecoreset import ScenarioError

    with pytest.raises(ScenarioError):
        run_map_approx(load_scenario(small))


def test_map_approx_single_disk(tmp_path):
    yy, xx = np.mgrid[0:60, 0:80]
    img = np.where((xx - 40) ** 2 + (yy - 30) ** 2 <= 15**2, 0, 255).astype(np.uint8)
    sc = _bitmap_scenario(tmp_path, img)
    rep = run_map_approx(sc)
    ours, sweep = rep.row("ours"), rep.row("sweep")
    assert ours["queries"] < sweep["queries"]
    assert ours["agreement"] >= 0.99
    assert rep.row("rrt")["agreement"] < ours["agreement"]
