import csv
import json

import pytest

from gapforge.cli import (CSV_VERSION, GAP_COLUMNS, load_sweep_config, main, run_sweep, sweep_config_from_dict)
from gapforge.instance import load

SWEEP = """
[sweep]
kind = "{kind}"
model = "dsu"
m = 2
k = 3
n_list = [40, 20]
seeds = [2, 0, 1]

[pipeline]
mode = "filter"
"""


def _read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_VERSION
    return list(csv.DictReader(lines[1:]))


def test_gen_then_solve(tmp_path, capsys):
    path = tmp_path / "a.ip"
    assert main(["gen", "--model", "dsu", "--m", "2", "--n", "100", "--k", "3", "--seed", "7", "-o", str(path)]) == 0
    assert load(path).n == 100
    assert main(["solve", str(path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert {"value", "u_star", "n0", "props"} <= set(out)
    assert out["props"]["u_ok"]


def test_gap_row(tmp_path):
    inst = tmp_path / "p.ip"
    out = tmp_path / "row.csv"
    main(["gen", "--model", "packing", "--n", "300", "--beta", "0.1", "-o", str(inst)])
    assert main(["gap", str(inst), "--seed", "1", "-o", str(out)]) == 0
    rows = _read_csv(out)
    assert list(rows[0]) == GAP_COLUMNS
    assert rows[0]["model"] == "packing" and rows[0]["feasible"] == "true"


def test_bnb_command(tmp_path, capsys):
    inst = tmp_path / "s.ip"
    main(["gen", "--model", "packing", "--n", "24", "--beta", "0.1", "--seed", "2", "-o", str(inst)])
    assert main(["bnb", str(inst), "--bound"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "optimal"
    assert out["tree_bound"]["holds"]
    assert main(["bnb", str(inst), "--node-limit", "1"]) == 3


def test_disc_commands(capsys):
    assert main(["disc", "hit", "--columns", "[[2,3,5]]", "--target", "[8]", "--band", "1,3"]) == 0
    assert json.loads(capsys.readouterr().out)["subset"] == [1, 2]
    assert main(["disc", "pmf", "--columns", "[[1,1]]", "--p", "0.5"]) == 0
    assert json.loads(capsys.readouterr().out)["probabilities"] == [0.25, 0.5, 0.25]
    assert main(["disc", "fourier", "--columns", "[[1,1]]", "--p", "0.5", "--target", "[1]"]) == 0
    assert json.loads(capsys.readouterr().out)["probability"] == pytest.approx(0.5)
    assert main(["disc", "approx", "--columns", "[[0.5,0.25,1.0]]", "--target", "[0.75]"]) == 0
    assert json.loads(capsys.readouterr().out)["residual"] == pytest.approx(0.0)


def test_input_errors_exit_2(tmp_path, capsys):
    assert main(["gen", "--model", "packing", "--n", "10", "--beta", "0.3"]) == 2
    bad = tmp_path / "bad.ip"
    bad.write_text("garbage\n")
    assert main(["solve", str(bad)]) == 2
    assert main(["solve", str(tmp_path / "missing.ip")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["gen"])
    assert exc.value.code == 2


def test_budget_exit_3(capsys):
    cols = json.dumps([[50] * 200] * 3)
    assert main(["disc", "hit", "--columns", cols, "--target", "[5000,5000,5000]", "--k", "50"]) == 3
    assert "budget" in capsys.readouterr().err


def test_verify_fourier_suite(capsys):
    assert main(["verify", "--suite", "fourier", "--quick"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["verify", "--suite", "nope"]) == 2


@pytest.mark.parametrize("kind", ["gap", "tree"])
def test_sweep_is_byte_identical(tmp_path, kind):
    cfg = tmp_path / "s.toml"
    cfg.write_text(SWEEP.format(kind=kind))
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(["sweep", "--config", str(cfg), "-o", str(a)]) == 0
    assert main(["sweep", "--config", str(cfg), "-o", str(b)]) == 0
    run_sweep(load_sweep_config(cfg), c, jobs=2)
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    rows = _read_csv(a)
    assert [(int(r["n"]), int(r["seed"])) for r in rows] == [(n, s) for n in (20, 40) for s in (0, 1, 2)]
    side = json.loads((tmp_path / "a.csv.json").read_text())
    assert {r["config_hash"] for r in rows} == {side["config_hash"]}


def test_config_hash_tracks_content():
    base = {"sweep": {"model": "dsu", "n_list": [20]}}
    h1 = sweep_config_from_dict(base).config_hash()
    h2 = sweep_config_from_dict({"sweep": {"model": "dsu", "n_list": [20]}, "pipeline": {"delta_c": 3.0}}).config_hash()
    h3 = sweep_config_from_dict({"sweep": {"model": "dsu", "n_list": [20], "jobs": 4}}).config_hash()
    assert h1 != h2
    assert h1 == h3
    assert len(h1) == 16


def test_bad_sweep_config(tmp_path):
    cfg = tmp_path / "s.toml"
    cfg.write_text('[sweep]\nkind = "other"\n')
    assert main(["sweep", "--config", str(cfg)]) == 2
    cfg.write_text('[sweep]\nwhat = 1\n')
    assert main(["sweep", "--config", str(cfg)]) == 2
    cfg.write_text('[sweep\n')
    assert main(["sweep", "--config", str(cfg)]) == 2
