import json

import numpy as np
import pytest

from activecoreset import ScenarioError
from activecoreset.pgm import write_pgm
from activecoreset.scenario import load_scenario, parse_scenario

from conftest import SCENARIOS

BASE = {
    "dim": 2,
    "bounds": [[0, 0], [1, 1]],
    "eps": 0.01,
    "inradius_lb": 0.05,
    "circumradius_ub": 1.0,
    "map": {"shapes": [{"type": "disk", "center": [0.5, 0.5], "radius": 0.1}]},
    "start": [0.05, 0.05],
    "goal": [0.95, 0.95],
    "planner": {"step_size": 0.05, "max_iterations": 100, "goal_tolerance": 0.05},
}


def doc(**over):
    d = json.loads(json.dumps(BASE))
    for k, v in over.items():
        if v is None:
            d.pop(k, None)
        else:
            d[k] = v
    return json.dumps(d, indent=2)


def test_minimal_document_defaults():
    sc = parse_scenario(doc())
    assert sc.name == "scenario" and sc.trials == 20 and sc.seed == 0
    assert sc.planners == ["rrt", "rrt_star"]
    assert sc.planner.edge_resolution == sc.meta.eps
    assert sc.oracle().query([0.5, 0.5])


@pytest.mark.parametrize("name", ["map_c.json", "narrow_passage.json", "map_approx.json", "spheres_3d.json"])
def test_shipped_scenarios_load(name):
    sc = load_scenario(SCENARIOS / name)
    assert sc.name == name[:-5]
    o = sc.oracle()
    assert not o.query(sc.start) and not o.query(sc.goal)


def test_syntax_error_has_line_and_column():
    with pytest.raises(ScenarioError, match=r"line 3, column \d+"):
        parse_scenario('{\n  "dim": 2,\n  "eps": ,\n}')


@pytest.mark.parametrize("over,field", [
    (dict(eps="small"), "eps"),
    (dict(eps=2.0), "eps"),
    (dict(trials=0), "trials"),
    (dict(start=[0.5]), "start"),
    (dict(goal=[5.0, 5.0]), "goal"),
    (dict(planners=["prm"]), "planners"),
    (dict(colour="red"), "colour"),
    (dict(dim=4), "dim"),
    (dict(bounds=[[0, 0], [0, 1]]), "bounds"),
    (dict(bounds=None), "bounds"),
    (dict(planner={"step_size": 0.05}), "planner.max_iterations"),
    (dict(planner={"step_size": 0.05, "max_iterations": 10, "goal_tolerance": 0.1, "speed": 1}), "planner.speed"),
    (dict(map={"shapes": [{"type": "blob"}]}), "map.shapes[0]"),
    (dict(map={}), "map"),
    (dict(map_approx={"checkpoints": [0]}), "map_approx.checkpoints"),
])
def test_errors_name_the_field(over, field):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(doc(**over))
    assert f"field '{field}'" in str(info.value)


def test_error_carries_line_number():
    text = doc(trials=-3)
    line = next(i for i, l in enumerate(text.splitlines(), 1) if '"trials"' in l)
    with pytest.raises(ScenarioError, match=rf"\(line {line}\)"):
        parse_scenario(text)


def test_bitmap_paths_resolve_next_to_the_file(tmp_path):
    (tmp_path / "maps").mkdir()
    write_pgm(tmp_path / "maps" / "m.pgm", np.full((10, 20), 255, dtype=np.uint8))
    d = json.loads(doc(bounds=None, map={"bitmap": "maps/m.pgm", "resolution": 0.5}))
    d["start"], d["goal"] = [1, 1], [9, 4]
    (tmp_path / "s.json").write_text(json.dumps(d))
    sc = load_scenario(tmp_path / "s.json")
    np.testing.assert_allclose(sc.meta.bounds, [[0, 0], [10, 5]])
    assert sc.is_bitmap and sc.name == "s"


def test_missing_bitmap_and_file(tmp_path):
    with pytest.raises(ScenarioError, match="map.bitmap"):
        parse_scenario(doc(bounds=None, map={"bitmap": "nope.pgm"}), tmp_path / "s.json")
    with pytest.raises(ScenarioError, match="not found"):
        load_scenario(tmp_path / "absent.json")
