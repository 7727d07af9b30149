import json

import numpy as np
import pytest

from deflation_lab.cli import main
from deflation_lab.coarse import CoarseSpace
from deflation_lab.xio import read_spectrum, write_coarse_space, write_matrix_market


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("diag-table1", "bvp-convergence", "bound-suite"):
        assert name in out


def test_show_config(capsys):
    assert main(["show-config", "diag-table3", "--seed", "11"]) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg["seed"] == 11
    assert cfg["h_eps"] == [1e10, 1e12, 1e14, 1e16]


def test_errors_exit_with_status_two(capsys, monkeypatch):
    monkeypatch.setattr("deflation_lab.config.VERBOSE_ERRORS", False)
    assert main(["show-config", "diag-table9"]) == 2
    assert capsys.readouterr().err.startswith("error: unknown experiment")


def test_verbose_errors_raise(monkeypatch):
    from deflation_lab.errors import ConfigError

    monkeypatch.setattr("deflation_lab.config.VERBOSE_ERRORS", True)
    with pytest.raises(ConfigError):
        main(["show-config", "diag-table9"])


def test_spectrum(tmp_path, capsys):
    A = np.diag([0.01, 0.02, 1.0, 2.0, 3.0])
    write_matrix_market(str(tmp_path / "A.mtx"), A)
    write_coarse_space(str(tmp_path / "Z.csv"), CoarseSpace(np.eye(5)[:, :2]))
    out = str(tmp_path / "spec.csv")
    argv = ["spectrum", "--matrix", str(tmp_path / "A.mtx"), "--precond", "pa"]
    assert main(argv + ["--coarse", str(tmp_path / "Z.csv"), "--out", out]) == 0
    values, _ = read_spectrum(out)
    assert np.allclose(values, [1.0, 1.0, 1.0, 2.0, 3.0])
    assert "near_one" in capsys.readouterr().out

    assert main(argv) == 2


def test_run_bound_suite(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trials": 2, "n": 10, "r": 2}))
    out = tmp_path / "bounds"
    argv = ["run", "bound-suite", "--config", str(cfg), "--out", str(out), "--no-progress", "--threads", "2"]
    assert main(argv) == 0
    assert (out / "summary.csv").is_file()
    assert (out / "bound-suite.log").is_file()
    assert "deflation-perturbed-space" in capsys.readouterr().out


def test_bad_thread_count(capsys):
    assert main(["run", "bound-suite", "--threads", "0"]) == 2
