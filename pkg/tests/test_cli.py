import csv
import json

import numpy as np
import pytest

from hkgame import cli, nash


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_uncontrolled_zachary(tmp_path):
    assert cli.main(["run", "--mode", "uncontrolled", "--out", str(tmp_path)]) == 0
    header, data = _read(tmp_path / "uncontrolled_trajectory.csv")
    assert header == ["t"] + [f"x{j}" for j in range(1, 35)]
    assert data.shape == (201, 35)
    x = data[:, 1:]
    assert np.ptp(x[-1]) <= 0.1 * np.ptp(x[0])
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diag["modes"]["uncontrolled"]["final_spread_ratio"] <= 0.1


def test_all_modes_k2(tmp_path):
    code = cli.main(["run", "--graph", "k2", "--x0", "1,-1", "--tf", "1", "--out", str(tmp_path)])
    assert code == 0
    for mode in ("uncontrolled", "nash", "social"):
        assert (tmp_path / f"{mode}_trajectory.csv").exists()
    _, nash_x = _read(tmp_path / "nash_trajectory.csv")
    assert np.max(np.abs(nash_x[:, 1] + nash_x[:, 2])) <= 1e-9
    header, u = _read(tmp_path / "nash_controls.csv")
    assert header == ["t", "u1", "u2"] and u.shape == (201, 3)
    with open(tmp_path / "plot_data.csv") as fh:
        assert fh.readline().strip() == "mode,t,agent,x,u"
        assert sum(1 for _ in fh) == 3 * 201 * 2


def test_heavier_effort_weight_leaves_wider_spread(tmp_path):
    cheap, dear = tmp_path / "r1", tmp_path / "r20"
    assert cli.main(["run", "--mode", "nash", "--r", "1", "--out", str(cheap)]) == 0
    assert cli.main(["run", "--mode", "nash", "--r", "20", "--out", str(dear)]) == 0
    s1 = json.loads((cheap / "diagnostics.json").read_text())["modes"]["nash"]["final_spread"]
    s20 = json.loads((dear / "diagnostics.json").read_text())["modes"]["nash"]["final_spread"]
    assert s20 > s1


def test_verify_k2(tmp_path):
    assert cli.main(["verify", "--graph", "k2", "--x0", "1,-1", "--tf", "1",
                     "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "verification.json").read_text())
    assert summary["all_passed"]
    assert {c["name"] for c in summary["checks"]} >= {"trajectory_oracle", "pontryagin"}


@pytest.mark.parametrize("args", [
    ["--r", "0"],
    ["--b", "1,0"],
    ["--tf", "-2"],
    ["--samples", "200"],
    ["--x0", "1,2,3"],
    ["--graph", "no/such/file.txt"],
])
def test_config_errors_exit_1(tmp_path, args):
    base = ["run", "--graph", "k2", "--x0", "1,-1", "--out", str(tmp_path)]
    assert cli.main(base + args) == 1


def test_bad_edge_list_exit_1(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("1 2\n3 4\n")
    assert cli.main(["graph-info", "--graph", str(path)]) == 1


def test_singular_boundary_exit_2(tmp_path, monkeypatch):
    monkeypatch.setattr(nash, "SINGULAR_CONDITION", 1.0)
    code = cli.main(["run", "--graph", "k2", "--x0", "1,-1", "--mode", "nash",
                     "--out", str(tmp_path)])
    assert code == 2


def test_verification_failure_exit_3(tmp_path, monkeypatch):
    from hkgame import verification
    real = verification.check_state_residual

    def broken(sol, *a, **kw):
        rep = real(sol, *a, **kw)
        return verification.VerificationReport(rep.name, 1.0, 0.0)

    monkeypatch.setattr(verification, "check_state_residual", broken)
    code = cli.main(["verify", "--graph", "k2", "--x0", "1,-1", "--tf", "1",
                     "--out", str(tmp_path)])
    assert code == 3


def test_spec_file_and_overrides(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"graph": "k2", "x0": [1.0, -1.0], "tf": 2.0, "mode": "social"}))
    assert cli.main(["run", "--spec", str(spec), "--samples", "21", "--out", str(tmp_path)]) == 0
    _, x = _read(tmp_path / "social_trajectory.csv")
    assert x.shape == (21, 3) and x[-1, 0] == 2.0
    spec.write_text(json.dumps({"graph": "k2", "bogus": 1}))
    assert cli.main(["run", "--spec", str(spec), "--out", str(tmp_path)]) == 1


def test_graph_info(capsys):
    assert cli.main(["graph-info"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["n"] == 34 and info["edges"] == 78 and info["degrees"][33] == 17


def test_byte_identical_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["run", "--seed", "4", "--out", str(d)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
