import json
import math
from pathlib import Path

import numpy as np
import pytest

from cranetraj.config import (
    ConfigError, RunConfig, check_alpha, config_from_dict, config_to_dict, load_config,
    load_solution, save_solution, solution_from_dict, solution_to_dict,
)
from cranetraj.pareto import (
    DOMINATED, ParetoPoint, add_relative, alpha_grid, flag_dominated, read_pareto, write_pareto,
)
from cranetraj.transcription import bundled_spec, initial_guess, solution_from_vector

DEMOS = Path(__file__).resolve().parents[1] / "demos"


def test_bundled_demo_matches_defaults():
    cfg = load_config(DEMOS / "bundled.json")
    default = RunConfig()
    assert cfg.spec(0.5).y_min == default.spec(0.5).y_min
    assert cfg.profile == default.profile
    assert (cfg.params, cfg.grid, cfg.initial, cfg.final) == (
        default.params, default.grid, default.initial, default.final)


def test_round_trip_through_dict():
    cfg = load_config(DEMOS / "bundled.json")
    again = config_from_dict(json.loads(json.dumps(config_to_dict(cfg))))
    assert again == cfg


@pytest.mark.parametrize("doc, message", [
    ({"crane": {"m1": -1}}, "m1"),
    ({"crane": {"mass": 1}}, "unknown keys"),
    ({"grid": {"k": 2.5}}, "integer"),
    ({"bounds": {"l_max": "long"}}, "expected a number"),
    ({"boundary": {"initial": [0, 0, 0.6]}}, "8 or 10"),
    ({"boundary": {"final": [0, 0, "x", 0, 0, 0, 0, 0]}}, r"final\[2\]"),
    ({"profile": "missing.json"}, "cannot read"),
    ({"profile": {"rail_height": 0.75, "stacks": [{"start": 0, "end": 1, "height": 1}]}},
     "exceeds rail height"),
    ({"solver": {"kkt_tolerance": 0}}, "kkt_tolerance"),
    ({"bounds": {"ft_min": 2}}, "ft_min"),
    ({"colour": 1}, "unknown keys"),
])
def test_invalid_documents(doc, message, tmp_path):
    with pytest.raises(ConfigError, match=message):
        config_from_dict(doc, base_dir=tmp_path)


def test_load_reports_json_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "grid": {"k": 50,}\n}')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)


def test_alpha_check():
    check_alpha(0.0)
    check_alpha(1)
    for bad in (-0.1, 1.5, math.nan, "0.5"):
        with pytest.raises(ConfigError, match=r"\[0, 1\]"):
            check_alpha(bad)


def test_solution_file_round_trip(tmp_path):
    spec = bundled_spec(k=12)
    sol = solution_from_vector(spec, initial_guess(spec))
    save_solution(sol, tmp_path / "s.json")
    back = load_solution(tmp_path / "s.json")
    np.testing.assert_array_equal(back.states, sol.states)
    np.testing.assert_array_equal(back.controls, sol.controls)
    assert back.grid == sol.grid and back.params == sol.params
    assert solution_to_dict(back) == solution_to_dict(sol)


def test_malformed_solution():
    doc = solution_to_dict(solution_from_vector(bundled_spec(k=12), initial_guess(bundled_spec(k=12))))
    doc["controls"] = doc["controls"][:-1]
    with pytest.raises(ConfigError, match="controls"):
        solution_from_dict(doc)
    with pytest.raises(ConfigError, match="malformed"):
        solution_from_dict({"alpha": 0.5})


def test_alpha_grid_spacing():
    grid = alpha_grid(0.01, 0.99, 25)
    assert len(grid) == 25 and grid[0] == 0.01 and grid[-1] == 0.99
    logit = np.log(grid / (1 - grid))
    np.testing.assert_allclose(np.diff(logit), np.diff(logit)[0])
    assert alpha_grid(0.01, 0.99, 3)[1] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        alpha_grid(0.5, 0.4, 3)
    with pytest.raises(ValueError):
        alpha_grid(0.1, 0.9, 1)


def test_relative_columns_and_flags():
    pts = [ParetoPoint(0.01, 4.0, 0.3, "converged"), ParetoPoint(0.5, 3.0, 0.4, "converged"),
           ParetoPoint(0.7, 3.5, 0.5, "converged"), ParetoPoint(0.99, 2.5, 0.8, "converged")]
    add_relative(pts)
    flag_dominated(pts)
    assert pts[0].rel_time == 1.0 and pts[-1].rel_energy == 1.0
    assert pts[1].rel_time == pytest.approx(0.75)
    assert [p.status for p in pts] == ["converged", "converged", DOMINATED, "converged"]


def test_pareto_table_round_trip(tmp_path):
    pts = add_relative([ParetoPoint(0.1, 3.0, 0.4, "converged"),
                        ParetoPoint(0.9, 2.0, 0.8, "max_iterations")])
    write_pareto(pts, tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "alpha,tf,energy,rel_time,rel_energy,status"
    back = read_pareto(tmp_path / "p.csv")
    assert [(p.alpha, p.tf, p.energy, p.status) for p in back] == [
        (p.alpha, p.tf, p.energy, p.status) for p in pts]
    (tmp_path / "q.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        read_pareto(tmp_path / "q.csv")
