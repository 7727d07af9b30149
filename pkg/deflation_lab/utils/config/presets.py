"""
presets.py

Default experiment configurations shipped with deflation_lab.

Each experiment id has one template, ``templates/<id>.json``, holding every
parameter of that experiment at the values used for the reference runs. A
user config only needs the keys it changes; the loader fills in the rest from
the template.

Functions provided:
- list_presets(): Lists available template names (without .json extension)
- load_preset(name): Loads a template and returns it as a dict
- preset_exists(name): Checks if a template exists by name
"""

import json
import logging
import os

logger = logging.getLogger(__name__)

TEMPLATE_DIR = os.path.join(os.path.dirname(__file__), "..", "templates")


def list_presets():
    """Returns the sorted list of template names (without .json extension)."""
    if not os.path.isdir(TEMPLATE_DIR):
        logger.warning(f"Template directory not found: {TEMPLATE_DIR}")
        return []
    return sorted(f[: -len(".json")] for f in os.listdir(TEMPLATE_DIR) if f.endswith(".json"))


def load_preset(name: str) -> dict:
    """Loads a template by name and returns its dictionary content."""
    path = os.path.join(TEMPLATE_DIR, name + ".json")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Template '{name}' not found.")
    with open(path) as f:
        logger.debug(f"Loaded template: {name}")
        return json.load(f)


def preset_exists(name: str) -> bool:
    """Checks if a template exists."""
    return os.path.isfile(os.path.join(TEMPLATE_DIR, name + ".json"))
