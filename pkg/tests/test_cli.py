import json
import logging
import subprocess
import sys

import numpy as np
import pytest

from conftest import small_config
from smrac import Trace, cli
from smrac.scenario import default_scenario_text, save_scenario


@pytest.fixture
def small_file(tmp_path):
    path = tmp_path / "small.toml"
    save_scenario(small_config(t_end=1.0, interval=0.25), path)
    return path


def _bad_scenario(tmp_path, old, new):
    text = default_scenario_text()
    assert old in text
    path = tmp_path / "bad.toml"
    path.write_text(text.replace(old, new, 1))
    return path


def test_validate_default_prints_gains(capsys):
    assert cli.main(["validate", "default"]) == 0
    out = capsys.readouterr().out
    for k, g in enumerate(["2", "2.5", "3", "5"], start=1):
        assert f"K_x{k} = [{g}; {g}]  K_r{k} = [1]" in out


def test_validate_lists_every_problem(tmp_path, capsys):
    text = default_scenario_text()
    text = text.replace("A = [[0.0, 1.0], [-5.5, -6.5]]\nB = [[0.0], [1.0]]", "A = [[0.0, 1.0], [-5.5, -6.5]]\nB = [[0.0], [0.0]]")
    text = text.replace("A = [[0.0, 1.0], [-8.0, -9.0]]", "A = [[1.0, 1.0], [-8.0, -9.0]]")
    path = tmp_path / "two.toml"
    path.write_text(text)
    assert cli.main(["validate", str(path)]) == 2
    err = capsys.readouterr().err
    assert "RankDeficient: B of subsystem 2" in err
    assert "MatchingInfeasible" in err and "subsystem 4" in err


def test_run_small(small_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", str(small_file), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert set(report) >= {"s", "T", "monotonic", "switches", "excitation_degree"}
    tr = Trace.read_csv(out / "trace.csv")
    assert len(tr) == 1001
    assert (out / "plot.svg").read_text().startswith("<svg")


def test_run_decimate(small_file, tmp_path):
    out = tmp_path / "dec"
    assert cli.main(["run", str(small_file), "--out", str(out), "--decimate", "10"]) == 0
    assert len(Trace.read_csv(out / "trace.csv")) == 101
    assert cli.main(["run", str(small_file), "--out", str(out), "--decimate", "0"]) == 2


def test_compare_small(small_file, tmp_path, capsys):
    out = tmp_path / "cmp"
    assert cli.main(["compare", str(small_file), "--out", str(out)]) == 0
    data = json.loads((out / "comparison.json").read_text())
    assert "memory_better" in data and len(data["final_phi_err_delta"]) == 2
    assert (out / "comparison.svg").exists()


@pytest.mark.parametrize(
    "old, new, needle",
    [
        ("A = [[0.0, 1.0], [-5.0, -6.0]]", "A = [[0.0, 1.0], [-5.0]]", "bad.toml:"),
        ("A = [[0.0, 1.0], [-3.0, -4.0]]", "A = [[0.0, 1.0], [3.0, 4.0]]", "NotHurwitz"),
        ("interval = 30.0", "interval = 30.0005", "grid"),
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, old, new, needle):
    path = _bad_scenario(tmp_path, old, new)
    assert cli.main(["run", str(path), "--out", str(tmp_path / "o")]) == 2
    assert needle in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path, capsys):
    assert cli.main(["compare", str(tmp_path / "nope.toml")]) == 2
    assert cli.main(["validate", str(tmp_path / "nope.toml")]) == 2


def test_blowup_exit_3(tmp_path, capsys):
    path = tmp_path / "wild.toml"
    save_scenario(small_config(t_end=5.0, Gamma=1e6, adaptation_sign=-1.0), path)
    assert cli.main(["run", str(path), "--out", str(tmp_path / "o")]) == 3
    assert "blowup" in capsys.readouterr().err


def test_io_error_exit_4(small_file, tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["run", str(small_file), "--out", str(blocker / "sub")]) == 4
    assert "cannot create" in capsys.readouterr().err


def test_log_level_from_env(monkeypatch, small_file, tmp_path, capsys):
    logger = logging.getLogger("smrac")
    monkeypatch.setattr(logger, "level", logger.level)
    monkeypatch.setenv("SMRAC_LOG", "debug")
    assert cli.main(["run", str(small_file), "--out", str(tmp_path / "o")]) == 0
    assert logger.level == logging.DEBUG
    assert "switch 1 -> 2" in capsys.readouterr().err
    monkeypatch.setenv("SMRAC_LOG", "warning")
    assert cli.main(["validate", str(small_file)]) == 0
    assert capsys.readouterr().err == ""


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "smrac", "validate", "default"], capture_output=True, text=True)
    assert proc.returncode == 0 and "K_x4 = [5; 5]" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "smrac", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2
