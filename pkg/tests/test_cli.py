import csv
import subprocess
import sys

import pytest

from maxwell_dtn.cli import (BOUNDS_COLUMNS, STUDY_COLUMNS, ConfigError, build_config,
                             choose_resolution, fmt, main, parse_problem, read_config_file,
                             threads_from_env)


def _csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------- configuration

def test_defaults():
    cfg = build_config("solve", {}, {})
    assert cfg.k == (2.0,) and cfg.lam == 2.0 and cfg.L_for(2.0) == 6
    assert cfg.delta and cfg.proxy and not cfg.timings


def test_file_then_flags(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# study\nk = 2, 4\nlambda = 3   # splitting\nrefinement = 1,2\nlmax = +3\n")
    vals = read_config_file(path)
    cfg = build_config("study-h", vals, {"k": "8", "p": None})
    assert cfg.k == (8.0,) and cfg.lam == 3.0 and cfg.refine == (1, 2)
    assert cfg.L_for(8.0) == 24 + 2 + 3


@pytest.mark.parametrize("flags", [{"k": "0.5"}, {"lam": "1"}, {"lmax": "x"}, {"p": "-1"},
                                   {"c1": "0"}, {"manufactured": "mode:0,0,TE"},
                                   {"manufactured": "source:1,0,0.5,0.2"}, {"delta": "maybe"}])
def test_bad_values(flags):
    with pytest.raises(ConfigError):
        build_config("solve", {}, flags)


def test_bad_file(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("k 2\n")
    with pytest.raises(ConfigError, match="key = value"):
        read_config_file(path)
    path.write_text("colour = red\n")
    with pytest.raises(ConfigError, match="unknown key"):
        read_config_file(path)
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.cfg")


def test_parse_problem():
    assert parse_problem("mode:2,-1,tm") == ("mode", (2, -1, "TM"))
    assert parse_problem("source:1,0,0.1,0.8") == ("source", (1, 0, 0.1, 0.8))


def test_threads_env(monkeypatch):
    monkeypatch.setenv("MAXWELL_DTN_THREADS", "3")
    assert threads_from_env() == 3
    monkeypatch.setenv("MAXWELL_DTN_THREADS", "-1")
    with pytest.raises(ConfigError):
        threads_from_env()


def test_fmt():
    import numpy as np
    assert fmt(np.bool_(True)) == "1" and fmt(np.int64(7)) == "7"
    assert fmt(float("nan")) == "nan" and fmt(0.1) == "0.1"


def test_choose_resolution():
    p, n, ok, _ = choose_resolution(2.0, 2.0, 1.0, 60000)
    assert p == 1 and ok and n == 3
    p, n, ok, why = choose_resolution(8.0, 0.5, 1.0, 60000)
    assert p == 3 and not ok and "cap" in why


# ---------------------------------------------------------------- runs

def test_exit_code_config_error(tmp_path, capsys):
    assert main(["solve", "--k", "0.2", "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_symbol_check_outputs(tmp_path):
    out = tmp_path / "sym"
    assert main(["symbol-check", "--k", "1,2,4", "--nmax", "200", "--out", str(out)]) == 0
    rows = _csv(out / "bounds.csv")
    assert tuple(rows[0]) == BOUNDS_COLUMNS and len(rows) > 1
    summary = (out / "summary.txt").read_text()
    assert "PASS symbol bounds" in summary and "FAIL" not in summary
    assert (out / "c0_vs_k.dat").exists() and (out / "plot.gp").exists()


def test_solve_is_deterministic(tmp_path):
    args = ["solve", "--k", "2", "--p", "0", "--refine", "1,2", "--no-delta"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = ((tmp_path / d / "study.csv").read_bytes() for d in "ab")
    assert a == b
    rows = _csv(tmp_path / "a" / "study.csv")
    assert tuple(rows[0]) == STUDY_COLUMNS and len(rows) == 3
    row = dict(zip(rows[0], rows[1]))
    assert row["subcommand"] == "solve" and row["seconds"] == "NA" and row["delta_k"] == "nan"


def test_failed_check_exit_code(tmp_path):
    # no resolved run fits under a 10 dof cap: the acceptance check fails
    code = main(["study-k", "--k", "2", "--max-dofs", "10", "--out", str(tmp_path)])
    assert code == 1
    assert "FAIL quasi-optimality" in (tmp_path / "summary.txt").read_text()


def test_interp_check(tmp_path):
    assert main(["interp-check", "--p", "0,1", "--out", str(tmp_path)]) == 0
    for name in ("sequence.csv", "commuting.csv", "interp.csv"):
        assert len(_csv(tmp_path / name)) > 1


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "maxwell_dtn.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "study-k" in r.stdout
