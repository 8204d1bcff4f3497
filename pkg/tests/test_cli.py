import pytest

from rwbsde.cli import main
from rwbsde.exit_time import cdf_series


def test_solve_prints_root_values(capsys):
    assert main(["solve", "--case", "square", "--n", "64"]) == 0
    out = capsys.readouterr().out
    assert "Y0 = " in out and "Z0 = " in out
    assert "exact Y(0,0) = " in out


def test_solve_implicit_scheme(capsys):
    assert main(["solve", "--case", "exp", "--n", "32", "--scheme", "implicit"]) == 0
    assert "Y0 = " in capsys.readouterr().out


def test_tabulate_exit_writes_csv(tmp_path, capsys):
    out = tmp_path / "table.csv"
    assert main(["tabulate-exit", "--h", "0.5", "--points", "512",
                 "--t-min", "5e-5", "--t-max", "25", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,F"
    assert len(lines) == 513
    t, f = map(float, lines[300].split(","))
    assert f == pytest.approx(cdf_series(t, 0.5), abs=1e-12)


def test_convergence_writes_series(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    code = main([
        "convergence", "--case", "square", "--n", "8,16,32",
        "--M", "50", "--seed", "3", "--out", str(out),
    ])
    assert code == 0
    text = out.read_text()
    assert text.startswith("# M=50") or "# M=50" in text
    assert "n,E_Y,SE_Y,E_Z,SE_Z" in text
    assert "# slope_Y=" in text
    assert "slope_Y" in capsys.readouterr().out


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" not in out
