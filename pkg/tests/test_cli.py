import csv
import math
import subprocess
import sys

import pytest

from dephcap.cli import (
    BOUNDS_HEADER,
    QUBIT_HEADER,
    UsageError,
    fmt,
    main,
    parse_dims,
    parse_energy,
    parse_gamma,
    read_config,
)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_gamma():
    assert parse_gamma("3") == [3.0]
    grid = parse_gamma("0:12:0.5")
    assert len(grid) == 25 and grid[-1] == 12.0
    assert parse_gamma("0:1:0.1")[3] == 0.3
    for bad in ("a", "1:2", "2:1:0.5", "0:1:0", "0:inf:1", "0,0.5"):
        with pytest.raises(UsageError):
            parse_gamma(bad)


def test_parse_dims_and_energy():
    assert parse_dims("2:4") == [2, 3, 4]
    assert parse_dims("3,5") == [3, 5]
    for bad in ("1", "x", "1:3"):
        with pytest.raises(UsageError):
            parse_dims(bad)
    assert parse_energy("inf") is None
    assert parse_energy("1.5") == 1.5
    for bad in ("-1", "nan", "lots"):
        with pytest.raises(UsageError):
            parse_energy(bad)


def test_fmt():
    assert fmt(True) == "true" and fmt(False) == "false"
    assert fmt(math.inf) == "inf"
    assert fmt(1 / 3) == "0.333333333333333"
    assert fmt(7) == "7"


def test_bounds_csv(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bounds", "--gamma", "0:2:0.5", "--dim", "4", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == BOUNDS_HEADER
    assert len(rows) == 6
    assert float(rows[1][5]) == pytest.approx(0.0, abs=1e-9)
    assert all(r[6] == "true" for r in rows[1:])
    gammas = [float(r[0]) for r in rows[1:]]
    assert gammas == sorted(gammas)
    # significant digits carried through
    assert len(rows[2][3].replace(".", "").lstrip("0")) >= 12


def test_bounds_single_point_to_stdout(capsys):
    assert main(["bounds", "--gamma", "3", "--dim", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    row = lines[1].split(",")
    assert float(row[3]) <= float(row[4])


def test_bounds_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bounds", "--gamma", "0:3:1", "--dim", "5", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ngamma = 1\ndim = 3\nmax-iters = 5000\n")
    assert read_config(str(cfg)) == {"gamma": "1", "dim": "3", "max_iters": "5000"}
    out = tmp_path / "o.csv"
    assert main(["bounds", "--config", str(cfg), "--dim", "4", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[1][:2] == ["1", "4"]


def test_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["bounds", "--config", str(cfg)]) == 1
    assert "unknown key" in capsys.readouterr().err
    assert main(["bounds", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_unwritable_path_exits_1(tmp_path, capsys):
    assert main(["bounds", "--gamma", "1", "--dim", "2", "--out", str(tmp_path / "no" / "x.csv")]) == 1
    assert "cannot write" in capsys.readouterr().err


def test_argument_errors_exit_1():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    assert main(["bounds", "--gamma", "2:1:1"]) == 1
    assert main(["bounds", "--energy", "-3"]) == 1


def test_nonconvergence_exits_2(tmp_path):
    out = tmp_path / "c.csv"
    code = main(["capacity", "--gamma", "3", "--dim", "10", "--max-iters", "1", "--multistarts", "1",
                 "--out", str(out)])
    assert code == 2
    assert _rows(out)[1][-1] == "false"


def test_capacity_energy_constrained(capsys):
    assert main(["capacity", "--gamma", "0", "--dim", "10", "--energy", "1.5"]) == 0
    row = capsys.readouterr().out.strip().splitlines()[1].split(",")
    assert float(row[5]) == pytest.approx(1.5, abs=1e-9)
    assert float(row[6]) > 0


def test_qubit_squash_csv(tmp_path):
    out = tmp_path / "q.csv"
    assert main(["qubit-squash", "--gamma", "0:3:3", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == QUBIT_HEADER
    assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-9)
    assert float(rows[2][1]) <= float(rows[2][2]) + 1e-9
    assert 0 <= float(rows[2][5]) <= math.pi


def test_saturation_csv(capsys):
    assert main(["saturation", "--gamma", "3", "--dim", "2:4"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4
    assert lines[1].split(",")[5] == "nan"


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "6/6 suites passed" in out
    assert "FAIL" not in out


def test_verify_reports_negative_gamma(capsys):
    assert main(["verify", "--gamma", "-1"]) == 2
    assert "precondition failed" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dephcap", "bounds", "--gamma", "0", "--dim", "3"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0] == ",".join(BOUNDS_HEADER)
