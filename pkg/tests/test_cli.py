import json
import subprocess
import sys

import numpy as np
import pytest

from bunchlab.cli import main
from bunchlab.errors import ValidationError
from bunchlab.io import matrix_from_dict, matrix_to_dict, read_matrix, read_scan_csv, write_matrix


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_matrix_round_trip(tmp_path):
    a = np.array([[1 + 2j, 0.1], [np.pi, -1e-300j]])
    path = tmp_path / "a.json"
    write_matrix(path, a, {"seed": 3})
    np.testing.assert_array_equal(read_matrix(path), a)
    obj = json.loads(path.read_text())
    assert obj["rows"] == 2 and obj["cols"] == 2 and obj["metadata"] == {"seed": 3}
    assert obj["data"][2] == [np.pi, 0.0]


def test_matrix_format_errors(tmp_path):
    with pytest.raises(ValidationError):
        matrix_from_dict({"rows": 2, "cols": 2, "data": [[1, 0]]})
    with pytest.raises(ValidationError):
        matrix_from_dict({"rows": 1, "cols": 1})
    with pytest.raises(ValidationError):
        matrix_from_dict({"rows": 1, "cols": 1, "data": [["x", 0]]})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError):
        read_matrix(bad)
    assert matrix_to_dict(np.array([1, 2]))["cols"] == 1


def test_drury_command(tmp_path, capsys):
    code, out, _ = run(["drury", "--output", tmp_path / "a"], capsys)
    assert code == 0 and "1.017" in out
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["ratio"] == pytest.approx(1.017, abs=2e-3)
    assert summary["perm_H"] == pytest.approx(1.327e-3, rel=1e-3)
    assert summary["subset"] == [1, 2] and summary["seed"] == 0
    for name in ("drury_M", "drury_A", "drury_U", "drury_H", "drury_F", "v_max"):
        assert (tmp_path / "a" / f"{name}.json").exists()
    run(["drury", "--output", tmp_path / "b"], capsys)
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_scan_command(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code, _, _ = run(["scan", "--drury", "--output", out], capsys)
    assert code == 0
    rows, meta = read_scan_csv(out)
    assert rows.shape == (51, 4)
    i = int(np.argmax(rows[:, 2]))
    assert 1.0 <= rows[i, 0] <= 1.4 and 1.015 <= rows[i, 2] <= 1.025
    assert float(meta["argmax_epsilon"]) == rows[i, 0]
    assert meta["seed"] == "0" and meta["direction"] == "max"
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,p_bunch,ratio,indistinguishability"
    # 17 significant digits round-trip the doubles exactly
    assert float(lines[2].split(",")[1]) == rows[1, 1]


def test_scan_single_point(capsys):
    code, out, _ = run(["scan", "--drury", "--epsilon-max", "0", "--steps", "1"], capsys)
    assert code == 0
    row = out.splitlines()[1].split(",")
    assert float(row[0]) == 0.0
    assert float(row[1]) == pytest.approx(1.327e-3, rel=1e-3)
    assert row[2:] == ["1", "1"]


def test_scan_direction_min(capsys):
    code, out, _ = run(["scan", "--drury", "--direction", "min", "--epsilon-max", "0.5", "--steps", "11"], capsys)
    assert code == 0
    ratios = [float(l.split(",")[2]) for l in out.splitlines()[1:] if not l.startswith("#")]
    assert ratios[0] == 1.0 and all(r < 1 for r in ratios[1:])


def test_scan_custom_and_input(tmp_path, capsys):
    run(["drury", "--output", tmp_path], capsys)
    code, out, _ = run(
        ["scan", "--input", tmp_path / "drury_H.json", "--direction", "custom",
         "--vector", tmp_path / "v_max.json", "--steps", "3"],
        capsys,
    )
    assert code == 0 and len([l for l in out.splitlines() if l[0].isdigit()]) == 3


def test_scan_bad_arguments(tmp_path, capsys):
    assert run(["scan", "--drury", "--epsilon-min", "2", "--epsilon-max", "1"], capsys)[0] == 3
    assert run(["scan"], capsys)[0] == 3
    bad = tmp_path / "bad.json"
    bad.write_text('{"rows": 2, "cols": 2, "data": []}')
    code, _, err = run(["scan", "--input", bad], capsys)
    assert code == 3 and "error" in err
    assert run(["scan", "--input", tmp_path / "missing.json"], capsys)[0] == 2


def test_check_commands(tmp_path, capsys):
    run(["drury", "--output", tmp_path], capsys)
    code, out, _ = run(["check-m2", "--input", tmp_path / "drury_A.json"], capsys)
    assert code == 10
    verdict = json.loads(out)
    assert verdict["ratio"] == pytest.approx(1.017, abs=2e-3) and verdict["violated"]

    write_matrix(tmp_path / "I.json", np.eye(4))
    code, out, _ = run(["check-m2", "--input", tmp_path / "I.json"], capsys)
    assert code == 0 and json.loads(out)["ratio"] == pytest.approx(1.0)

    code, _, _ = run(
        ["check-m1", "--input", tmp_path / "drury_A.json", "--theorem1-epsilon", "0.5",
         "--output", tmp_path / "m1.json"],
        capsys,
    )
    assert code == 10 and json.loads((tmp_path / "m1.json").read_text())["conjecture"] == "M1"

    code, _, _ = run(["check-m1", "--input", tmp_path / "I.json", tmp_path / "I.json"], capsys)
    assert code == 0

    write_matrix(tmp_path / "neg.json", -np.eye(2))
    assert run(["check-m2", "--input", tmp_path / "neg.json"], capsys)[0] == 3
    assert run(["check-m1", "--input", tmp_path / "I.json"], capsys)[0] == 3


def test_oracle_compare(capsys):
    code, out, _ = run(["oracle-compare", "--preset", "hom"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["oracle"] == pytest.approx(0.5) and rep["abs_difference"] < 1e-12
    code, out, _ = run(["oracle-compare", "--preset", "hom-dist"], capsys)
    assert code == 0 and json.loads(out)["permanent_formula"] == pytest.approx(0.25)
    code, out, _ = run(["oracle-compare", "--random", "--seed", "7", "--n", "3"], capsys)
    assert code == 0 and json.loads(out)["abs_difference"] < 1e-10
    assert run(["oracle-compare", "--random", "--n", "5"], capsys)[0] == 4
    assert run(["oracle-compare"], capsys)[0] == 3


def test_oracle_compare_from_files(tmp_path, capsys):
    u = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    write_matrix(tmp_path / "U.json", u)
    write_matrix(tmp_path / "S.json", np.array([[1, 0], [0, 1]]))
    code, out, _ = run(
        ["oracle-compare", "--input", tmp_path / "U.json", "--states", tmp_path / "S.json", "--subset", "1"],
        capsys,
    )
    assert code == 0 and json.loads(out)["oracle"] == pytest.approx(0.25)
    assert json.loads(out)["subset"] == [1]
    code, _, _ = run(
        ["oracle-compare", "--input", tmp_path / "U.json", "--states", tmp_path / "S.json", "--subset", "0"],
        capsys,
    )
    assert code == 3


def test_clements_command(tmp_path, capsys):
    write_matrix(tmp_path / "I.json", np.eye(10))
    code, out, _ = run(["clements", "--input", tmp_path / "I.json"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["round_trip_error"] <= 1e-15 and rep["non_identity_count"] == 0
    code, out, _ = run(["clements", "--drury"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["round_trip_error"] <= 1e-9 and rep["element_count"] <= 45
    code, out, _ = run(["clements", "--random", "6", "--seed", "3"], capsys)
    assert code == 0 and json.loads(out)["round_trip_error"] <= 1e-9
    write_matrix(tmp_path / "N.json", np.array([[1, 1], [0, 1]]))
    assert run(["clements", "--input", tmp_path / "N.json"], capsys)[0] == 3


def test_extend_command(tmp_path, capsys):
    code, out, _ = run(["extend", "--drury", "--identity"], capsys)
    assert code == 0 and json.loads(out)["h_max_difference"] == 0.0
    code, _, _ = run(["extend", "--drury", "--modes", "8", "--scan", "--output", tmp_path], capsys)
    rep = json.loads((tmp_path / "extend_report.json").read_text())
    assert code == 0
    assert len(rep["composite_subset"]) == 8 and rep["n"] == 8
    assert rep["h_max_difference"] <= 1e-10 and rep["scan_max_ratio_difference"] <= 1e-9
    assert (tmp_path / "composite_U.json").exists()
    assert run(["extend", "--drury", "--modes", "1"], capsys)[0] == 3


def test_search_command(capsys):
    code, out, _ = run(["search", "--n", "8", "--trials", "3", "--inject-drury", "--top", "2"], capsys)
    rep = json.loads(out)
    assert code == 10 and rep["violations"] >= 1 and len(rep["verdicts"]) == 2
    assert rep["max_ratio"] == pytest.approx(1.017, abs=2e-3)
    code, out, _ = run(["search", "--n", "2", "--trials", "20"], capsys)
    assert code == 0 and json.loads(out)["violations"] == 0


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "bunchlab", "oracle-compare", "--preset", "hom"],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0 and json.loads(res.stdout)["oracle"] == pytest.approx(0.5)
