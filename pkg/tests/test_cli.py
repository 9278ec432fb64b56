import csv
import io
import json
import subprocess
import sys

import pytest

from convasym.cli import main

from .conftest import FIRST_ZERO


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_help_exits_zero():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_unknown_flag_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["zeros", "--c", "6", "--bogus"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "convasym", "nt", "n0", "--p", "23"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().splitlines()[-1].endswith("5")


def test_bad_density_exits_two(capsys):
    code, out, err = run(["fd", "--density", "gauss", "--x", "0.3"], capsys)
    assert code == 2
    assert out == ""
    assert err


def test_zeros_json(capsys):
    code, out, _ = run(["zeros", "--density", "burgess:lambda=0.25", "--c", "6", "--rmax", "200", "--format", "json"], capsys)
    assert code == 0
    data = json.loads(out)
    assert len(data) == 2
    assert {"re", "im", "multiplicity", "residual"} <= set(data[0])
    ks = sorted(complex(z["re"], z["im"]) for z in data if z["re"] > 0)
    assert abs(ks[0] - FIRST_ZERO) < 1e-12


def test_compare_zeros_file_roundtrip(tmp_path, capsys):
    zpath = tmp_path / "z.json"
    code, _, _ = run(["zeros", "--c", "6", "--rmax", "200", "--format", "json", "--output", str(zpath)], capsys)
    assert code == 0
    args = ["compare", "--density", "burgess:lambda=0.25", "--c", "6", "--x", "1.0:3.0:0.25"]
    code, direct, _ = run(args + ["--rmax", "200"], capsys)
    assert code == 0
    code, replay, _ = run(args + ["--zeros-file", str(zpath)], capsys)
    assert code == 0
    assert replay == direct
    rows = list(csv.reader(io.StringIO(direct)))
    assert rows[0] == ["x", "f_direct", "expansion", "residual", "scaled_residual"]
    assert len(rows) == 10
    assert "\r" not in direct


def test_incexc_json(capsys):
    code, out, _ = run(["nt", "incexc", "--p", "7", "--xmax", "48", "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out) == {"lhs": 19, "rhs": 19, "equal": True}


def test_nt_count_and_profile(capsys):
    code, out, _ = run(["nt", "count", "--p", "7", "--x", "6", "--format", "json"], capsys)
    assert code == 0 and "3" in out
    code, out, _ = run(["nt", "profile", "--p", "7", "--theta-grid", "1.0"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "# p=7,n0=3"


def test_fd_single_term(capsys):
    code, out, _ = run(["fd", "--x", "0.2", "--format", "json"], capsys)
    assert code == 0
    assert "10.0" in out


def test_hb_delta_csv(capsys):
    code, out, _ = run(["hb", "delta", "--theta", "0.1,0.25"], capsys)
    assert code == 0
    assert out.splitlines()[1:] == ["0.10000000000000001,0", "0.25,0.5"]


def test_density_validate_exit_codes(tmp_path, capsys):
    assert run(["density-validate", "--density", "burgess"], capsys)[0] == 0
    path = tmp_path / "bad.txt"
    path.write_text("piecewise-poly v1\n1,2,4,-2\n")
    assert run(["density-validate", "--density", f"file:{path}"], capsys)[0] == 2


def test_grid_cap_is_numerical_failure(capsys):
    code, out, err = run(["fd", "--x", "5", "--max-grid", "1000"], capsys)
    assert code == 3
    assert out == ""


def test_line_check_failure_exit_four(capsys, monkeypatch):
    import convasym.spectral as spectral

    # min |1 - ft| on Im k = -6 is about 0.41, so this threshold trips the check
    monkeypatch.setattr(spectral, "LINE_VANISHING_TOL", 0.5)
    code, out, err = run(["compare", "--c", "6", "--rmax", "200", "--x", "1:1.5:0.25"], capsys)
    assert code == 4
    assert out == ""
    assert err
