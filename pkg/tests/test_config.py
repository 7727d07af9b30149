import json

import pytest

from deflation_lab.errors import ConfigError
from deflation_lab.experiments import EXPERIMENTS
from deflation_lab.utils.config import (
    list_presets,
    load_experiment_config,
    load_preset,
    preset_exists,
    validate_config,
)


def test_every_experiment_has_a_valid_template():
    assert set(list_presets()) == set(EXPERIMENTS)
    for name in list_presets():
        cfg = load_preset(name)
        assert cfg["experiment"] == name
        validate_config(cfg)


def test_preset_lookup():
    assert preset_exists("diag-table2")
    assert not preset_exists("diag-table9")
    with pytest.raises(FileNotFoundError):
        load_preset("diag-table9")


def test_template_values():
    cfg = load_experiment_config("diag-table2")
    assert cfg["tol"] == 1e-12 and cfg["max_iterations"] == 300
    assert cfg["eps"] == [1e1, 1e2, 1e3, 1e4, 1e5]
    cfg = load_experiment_config("bvp-convergence")
    assert cfg["grid"] == 101 and cfg["nparts"] == [16, 32, 64, 128]
    assert cfg["ritz_threshold"] == 0.5


def test_file_and_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"experiment": "diag-table1", "eps": [1e2]}))
    cfg = load_experiment_config(path=str(path), overrides={"seed": 3, "out": None})
    assert cfg["experiment"] == "diag-table1"
    assert cfg["eps"] == [1e2] and cfg["seed"] == 3
    assert "out" not in cfg


def test_yaml_file(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("trials: 2\nn: 8\nr: 2\n")
    cfg = load_experiment_config("bound-suite", str(path))
    assert (cfg["trials"], cfg["n"], cfg["r"]) == (2, 8, 2)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="unknown experiment"):
        load_experiment_config("diag-table9")
    with pytest.raises(ConfigError, match="no experiment id"):
        load_experiment_config()
    with pytest.raises(ConfigError, match="not found"):
        load_experiment_config("diag-table1", str(tmp_path / "missing.json"))

    path = tmp_path / "other.json"
    path.write_text(json.dumps({"experiment": "diag-table3"}))
    with pytest.raises(ConfigError, match="diag-table3"):
        load_experiment_config("diag-table1", str(path))

    with pytest.raises(ConfigError, match="eps"):
        load_experiment_config("diag-table1", overrides={"eps": [-1.0]})
    with pytest.raises(ConfigError):
        load_experiment_config("diag-table1", overrides={"epsilon": [1.0]})


def test_layout_key():
    assert load_experiment_config("bvp-ilu")["layout"] == "square"
    cfg = load_experiment_config("bvp-ilu", overrides={"layout": "strips"})
    assert cfg["layout"] == "strips"
    with pytest.raises(ConfigError):
        load_experiment_config("bvp-ilu", overrides={"layout": "diagonal"})
