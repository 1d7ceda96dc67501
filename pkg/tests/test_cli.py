import csv
import json
import os

import numpy as np
import pytest

from hodyn.builtins import BUILTINS, get_builtin
from hodyn.cli import main
from hodyn.game import load_game


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_simulate_fig1_dominated_share(tmp_path, capsys):
    rc = main(["simulate", "--builtin", "fig1_dominance", "--order", "2",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    header, data = read_csv(tmp_path / "trajectory.csv")
    assert header == ["t", "x_0_top", "x_0_bottom", "x_1_left", "x_1_right"]
    assert data[-1, 2] < 1e-6
    summary = (tmp_path / "summary.txt").read_text()
    assert "limit.classification=strict-nash" in summary
    spec = json.loads((tmp_path / "spec.json").read_text())
    assert spec["dynamics"]["order"] == 2
    assert "rounds=" not in capsys.readouterr().err


def test_simulate_matching_pennies_equilibrium_constant(tmp_path):
    rc = main(["simulate", "--builtin", "matching_pennies", "--order", "1",
               "--init", "0.5,0.5;0.5,0.5", "--t-end", "5", "--out-dir", str(tmp_path)])
    assert rc == 0
    _, data = read_csv(tmp_path / "trajectory.csv")
    assert np.all(data[:, 1:] == 0.5)


def test_simulate_csv_byte_identical(tmp_path):
    args = ["simulate", "--builtin", "fig3_coordination", "--init", "rest-at:0.6,0.4;0.3,0.7",
            "--t-end", "5"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert a == b


def test_simulate_derivative_columns_and_bias(tmp_path):
    rc = main(["simulate", "--builtin", "fig1_dominance", "--order", "2", "--t-end", "1",
               "--bias-level", "1=0.5,-0.5", "--derivatives", "--out-dir", str(tmp_path)])
    assert rc == 0
    header, data = read_csv(tmp_path / "trajectory.csv")
    # relative-score levels carry one column per non-base action
    assert len(header) == 1 + 4 + 2
    assert header[-2:] == ["d1z_0_bottom", "d1z_1_right"]
    assert data[0, -2] == 0.5
    spec = json.loads((tmp_path / "spec.json").read_text())
    assert spec["initial"]["bias"] == {"1": [0.5, -0.5]}


def test_simulate_game_file_and_lambda(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"players": 2, "actions": [["x", "y"], ["l", "r"]],
                                "payoffs": [[[1, 1], [0, 0]], [[1, 0], [1, 0.9]]]}))
    rc = main(["simulate", "--game", str(path), "--lambda", "2", "--t-end", "2",
               "--out-dir", str(tmp_path / "o")])
    assert rc == 0
    header, _ = read_csv(tmp_path / "o" / "trajectory.csv")
    assert header[1] == "x_0_x"


@pytest.mark.parametrize("argv", [
    ["simulate"],
    ["simulate", "--builtin", "nope"],
    ["simulate", "--builtin", "fig1_dominance", "--init", "0.5,0.6;0.5,0.5"],
    ["simulate", "--builtin", "fig1_dominance", "--lambda", "-1"],
    ["simulate", "--builtin", "fig1_dominance", "--grid-bogus"],
    ["verify", "not-a-theorem"],
    ["simulate", "--builtin", "fig1_dominance", "--order", "6", "--dynamics", "rd"],
])
def test_usage_errors_exit_2(tmp_path, argv):
    try:
        rc = main(argv + ["--out-dir", str(tmp_path)] if argv[0] == "simulate" else argv)
    except SystemExit as exc:
        rc = exc.code
    assert rc == 2


def test_bad_game_file_exit_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    assert main(["simulate", "--game", str(path), "--out-dir", str(tmp_path)]) == 2


def test_numerical_error_exit_3(tmp_path):
    rc = main(["simulate", "--builtin", "fig1_dominance", "--dynamics", "rd", "--t-end", "20",
               "--out-dir", str(tmp_path)])
    assert rc == 3


def test_eliminate_reports(tmp_path, capsys):
    assert main(["eliminate", "--builtin", "fig1_dominance", "--out-dir", str(tmp_path)]) == 0
    text = (tmp_path / "dominance.txt").read_text()
    assert "rounds=2" in text
    assert "survivors player=0 actions=top" in text
    assert "survivors player=1 actions=left" in text
    capsys.readouterr()
    assert main(["eliminate", "--builtin", "matching_pennies"]) == 0
    assert "rounds=0" in capsys.readouterr().out
    assert main(["eliminate", "--builtin", "fig2_outside_option",
                 "--mode", "weak-then-strict"]) == 0
    out = capsys.readouterr().out
    assert "survivors player=0 actions=a0,a1" in out
    assert "survivors player=1 actions=b0,b1" in out


def test_verify_recipes(tmp_path, capsys):
    assert main(["verify", "dom-rate", "--order", "2", "--out-dir", str(tmp_path)]) == 0
    assert "result=pass" in (tmp_path / "verify.txt").read_text()
    assert main(["verify", "non-attraction"]) == 0
    assert main(["verify", "folk-stationarity"]) == 0
    assert main(["verify", "non-attraction", "--order", "2"]) == 2
    capsys.readouterr()


def test_list_builtins_round_trip(tmp_path, capsys):
    assert main(["list-builtins", "--export", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    for name in BUILTINS:
        assert name in out
        assert load_game(tmp_path / f"{name}.json") == get_builtin(name)


def test_sweep_small_grid(tmp_path, monkeypatch):
    monkeypatch.setenv("HODYN_THREADS", "1")
    rc = main(["sweep", "--builtin", "fig1_dominance", "--grid", "2x3", "--t-end", "3",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    files = sorted(p.name for p in tmp_path.glob("run_*.csv"))
    assert files == [f"run_{i:04d}.csv" for i in range(6)]
    summary = (tmp_path / "sweep_summary.txt").read_text()
    assert "runs=6" in summary
    assert "run.0.initial=0.3333333333,0.6666666667,0.25,0.75" in summary


def test_sweep_bad_grid_and_threads(tmp_path, monkeypatch):
    assert main(["sweep", "--builtin", "fig1_dominance", "--grid", "0x3",
                 "--out-dir", str(tmp_path)]) == 2
    monkeypatch.setenv("HODYN_THREADS", "many")
    assert main(["sweep", "--builtin", "fig1_dominance", "--grid", "1x1",
                 "--out-dir", str(tmp_path)]) == 2


@pytest.mark.slow
def test_sweep_coordination_phase_portrait(tmp_path, monkeypatch):
    monkeypatch.setenv("HODYN_THREADS", str(min(4, os.cpu_count() or 1)))
    rc = main(["sweep", "--builtin", "fig3_coordination", "--order", "2",
               "--observable", "identity", "--out-dir", str(tmp_path)])
    assert rc == 0
    assert len(list(tmp_path.glob("run_*.csv"))) == 121
    lines = dict(l.split("=", 1) for l in
                 (tmp_path / "sweep_summary.txt").read_text().splitlines())
    for i in range(121):
        final = np.array(lines[f"run.{i}.final"].split(","), dtype=float)
        cls = lines[f"run.{i}.classification"]
        vertex = cls == "strict-nash"
        # anti-diagonal starts stay on the invariant line p + q = 1
        on_line = abs(final[0] + final[2] - 1) < 1e-9
        assert vertex or on_line, (i, cls, final)
