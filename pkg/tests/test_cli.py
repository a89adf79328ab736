import json

import numpy as np
import pytest

from nncontrol import geometry
from nncontrol.action_sets import ActionSet, planar_trine
from nncontrol.cli import main
from nncontrol.controller import unity_law

LINEAR = json.dumps({"A": [[-1.0]], "B": [[1.0]], "C": [[1.0]], "P": [[1.0]]})


@pytest.fixture
def files(tmp_path):
    uex = tmp_path / "uex.json"
    uex.write_text(planar_trine(0.0, 0.1).to_json())
    corner = tmp_path / "corner.json"
    corner.write_text(ActionSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).to_json())
    law = tmp_path / "law.json"
    law.write_text(unity_law(ActionSet(np.array([[0.0], [1.0], [-1.0]]))).to_json())
    return tmp_path, uex, corner, law


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# -- design -------------------------------------------------------------------

def test_design_from_epsilon(capsys):
    code, out, _ = run(capsys, "design", "--m", 2, "--epsilon", 1, "--gamma", "sigma_ex",
                       "--variant", "centered")
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["design"]["delta"] - 0.125) < 1e-9
    s = ActionSet.from_dict(doc["set"])
    assert abs(geometry.covering_radius(s) - 0.125) < 1e-9


def test_design_shifted_base(capsys, tmp_path):
    out_file = tmp_path / "set.json"
    code, _, _ = run(capsys, "design", "--m", 2, "--delta", 0.1, "--u-star", "1,0", "--out", out_file)
    assert code == 0
    s = ActionSet.from_json(out_file.read_text())
    assert len(s) == 4 and np.allclose(s.base, [1.0, 0.0])
    assert abs(geometry.covering_radius(s) - 0.1) < 1e-9


@pytest.mark.parametrize("argv", [
    ["design", "--m", "0", "--delta", "1"],
    ["design", "--m", "2"],
    ["design", "--m", "2", "--delta", "0.1", "--epsilon", "1"],
    ["design", "--m", "2", "--epsilon", "1"],
    ["design", "--m", "2", "--delta", "0.1", "--u-star", "1,0,0"],
    ["design", "--m", "2", "--delta", "0.1", "--variant", "weird"],
    ["design", "--m", "2", "--delta", "0.1", "--gamma", "nope", "--epsilon", "1"],
])
def test_design_invalid_flags(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main(argv))
    assert exc.value.code == 2


def test_design_rotation_file(capsys, tmp_path):
    rot = tmp_path / "rot.json"
    rot.write_text(json.dumps([[0.0, -1.0], [1.0, 0.0]]))
    assert run(capsys, "design", "--m", 2, "--delta", 0.2, "--rotation", rot)[0] == 0
    rot.write_text(json.dumps([[2.0, 0.0], [0.0, 1.0]]))
    assert run(capsys, "design", "--m", 2, "--delta", 0.2, "--rotation", rot)[0] == 2


# -- check --------------------------------------------------------------------

def test_check_trine_passes(capsys, files):
    _, uex, _, _ = files
    code, out, _ = run(capsys, "check", "--set", uex, "--gamma", "sigma_ex", "--epsilon", 1)
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert abs(doc["proposition1"]["delta"] - 0.1) < 1e-9
    assert abs(doc["proposition1"]["gamma_value"] - 0.8642) < 1e-4


def test_check_corner_set_fails(capsys, files):
    _, _, corner, _ = files
    code, out, _ = run(capsys, "check", "--set", corner)
    assert code == 3
    assert "base not in interior" in json.loads(out)["validation"]["witness"]


def test_check_sector_condition_fails(capsys, files):
    _, uex, _, _ = files
    code, out, _ = run(capsys, "check", "--set", uex, "--sector", "1,1,2")
    doc = json.loads(out)
    assert code == 3
    assert abs(doc["sector"]["sector_value"] - 0.5) < 1e-6


def test_check_mu_reported(capsys, files):
    _, uex, _, _ = files
    code, out, _ = run(capsys, "check", "--set", uex, "--mu")
    assert code == 0 and abs(json.loads(out)["validation"]["mu_min1"] - 0.5) < 1e-6


def test_check_malformed_set(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"dim": 2, "base_index": 0, "actions": [[0, 0], [1, 0]], "color": "red"}))
    assert run(capsys, "check", "--set", p)[0] == 2
    p.write_text("not json")
    assert run(capsys, "check", "--set", p)[0] == 2
    p.write_text(json.dumps({"dim": 2, "base_index": 0, "actions": [[0, 0], [0, 0], [1, 1]]}))
    assert run(capsys, "check", "--set", p)[0] == 2


# -- simulate -----------------------------------------------------------------

def sim_args(law, *extra):
    return ["simulate", "--system", f"linear:{LINEAR}", "--law", law, "--x0", "2",
            "--epsilon", "0.5", "--center", "0", "--t-final", "6", *extra]


def test_simulate_writes_csv_and_report(capsys, files):
    tmp, _, _, law = files
    csv_path, rep = tmp / "t.csv", tmp / "r.json"
    code, _, _ = run(capsys, *sim_args(law, "--csv", csv_path, "--report", rep))
    assert code == 0
    assert csv_path.read_text().splitlines()[0] == "t,x1,y1,u1,H"
    doc = json.loads(rep.read_text())
    assert doc["entry_time"] is not None and doc["tail_action_constant"]


def test_simulate_is_byte_reproducible(capsys, files):
    tmp, _, _, law = files
    outs = []
    for k in range(2):
        c, r = tmp / f"t{k}.csv", tmp / f"r{k}.json"
        run(capsys, *sim_args(law, "--csv", c, "--report", r))
        outs.append((c.read_bytes(), r.read_bytes()))
    assert outs[0] == outs[1]


def test_simulate_sweep_seeded(capsys, files):
    tmp, _, _, law = files
    argv = ["simulate", "--system", f"linear:{LINEAR}", "--law", law, "--epsilon", "0.5",
            "--t-final", "8", "--sweep", "5", "--seed", "7"]
    code, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert code == 0 and a == b
    assert len(json.loads(a)["runs"]) == 5


def test_simulate_nonfinite_exit(capsys, tmp_path, files):
    _, _, _, law = files
    unstable = json.dumps({"A": [[5.0]], "B": [[1.0]], "C": [[1.0]]})
    code, out, _ = run(capsys, "simulate", "--system", f"linear:{unstable}", "--law", law,
                       "--x0", "1e7", "--epsilon", "1", "--t-final", "10", "--dt", "0.01")
    assert code == 4
    assert json.loads(out)["error_time"] > 0


def test_simulate_invalid(capsys, files):
    _, _, _, law = files
    assert run(capsys, *sim_args(law, "--dt", "0"))[0] == 2
    assert run(capsys, "simulate", "--preset", "nope")[0] == 2
    assert run(capsys, "simulate", "--law", law, "--x0", "1,2", "--epsilon", "1")[0] == 2


def test_config_file(capsys, files):
    tmp, _, _, law = files
    cfg = tmp / "cfg.json"
    cfg.write_text(json.dumps({"system": f"linear:{LINEAR}", "law": str(law), "x0": [2.0],
                               "epsilon": 0.5, "t_final": 6.0}))
    assert run(capsys, "simulate", "--config", cfg)[0] == 0
    cfg.write_text(json.dumps({"epsilon": 0.5, "colour": "blue"}))
    assert run(capsys, "simulate", "--config", cfg)[0] == 2


@pytest.mark.slow
def test_preset_example2(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--preset", "reproduce-example2", "--csv", tmp_path / "e2.csv")
    doc = json.loads(out)
    assert code == 0
    assert doc["tail_action_constant"] and doc["h_max_increase"] <= 1e-4
