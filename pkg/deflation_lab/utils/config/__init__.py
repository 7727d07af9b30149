"""
config submodule initializer.

Simplifies access to the experiment config loader and the shipped templates.
"""

from .loader import load_experiment_config, validate_config
from .presets import list_presets, load_preset, preset_exists
