"""
loader.py

Loads experiment configurations for deflation_lab.

This module supports:
- JSON and YAML config files (YAML through pyyaml, chosen by file extension)
- Filling every key the file leaves out from the experiment's template
- Command-line overrides applied last (only values that are not None)
- Validation of the merged result against schema.json with jsonschema

Example usage:
from deflation_lab.utils.config import load_experiment_config
cfg = load_experiment_config("diag-table2", overrides={"seed": 7})
"""

import json
import logging
import os

import jsonschema
import yaml

from deflation_lab.errors import ConfigError
from deflation_lab.utils.config.presets import list_presets, load_preset

logger = logging.getLogger(__name__)

SCHEMA_PATH = os.path.join(os.path.dirname(__file__), "schema.json")


def load_schema() -> dict:
    with open(SCHEMA_PATH) as f:
        return json.load(f)


def read_config_file(path: str) -> dict:
    """Parses a JSON or YAML config file into a dict."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as f:
        try:
            if path.endswith((".yaml", ".yml")):
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
        except (yaml.YAMLError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot parse {path}: {e}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping at the top level")
    return data


def validate_config(cfg: dict) -> dict:
    """Validates a merged config, raising ConfigError with the schema message."""
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {e.message}") from None
    return cfg


def load_experiment_config(experiment_id: str = None, path: str = None, overrides: dict = None) -> dict:
    """
    Builds the configuration of one experiment.

    Parameters:
    - experiment_id (str): experiment id; may be omitted when the file names it
    - path (str): optional JSON/YAML file with the keys to change
    - overrides (dict): values from the command line, None entries ignored

    Returns:
    - cfg (dict): template values updated by the file, then by the overrides

    Raises:
    - ConfigError: unknown id, id mismatch, unreadable file or schema violation
    """
    user = read_config_file(path) if path else {}
    file_id = user.get("experiment")
    if experiment_id and file_id and file_id != experiment_id:
        raise ConfigError(f"config file is for '{file_id}', not '{experiment_id}'")
    experiment_id = experiment_id or file_id
    if not experiment_id:
        raise ConfigError("no experiment id given")
    if experiment_id not in list_presets():
        raise ConfigError(
            f"unknown experiment '{experiment_id}'; available: {', '.join(list_presets())}"
        )

    cfg = load_preset(experiment_id)
    cfg.update(user)
    cfg["experiment"] = experiment_id
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    logger.debug(f"Config for {experiment_id}: {cfg}")
    return validate_config(cfg)
