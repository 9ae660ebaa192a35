"""
Effective configuration: pydantic defaults < YAML file < command-line flags.

The YAML file is the one passed with --config, else the path in the
MEMSECONV_CONFIG environment variable, else the shipped default.
"""

import copy
import os
from typing import Any, Dict, Optional

from pydantic import ValidationError

from modules.seconv.data_classes import RunParams
from modules.utils.errors import ConfigError
from modules.utils.files_manager import load_yaml, save_yaml
from modules.utils.logger import get_logger
from modules.utils.paths import DEFAULT_PARAMETERS_CONFIG_PATH, CONFIG_ENV_VAR

logger = get_logger()

SECTIONS = ("noise", "device", "circuit", "stages", "run", "power", "experiments")


def resolve_config_path(path: Optional[str] = None) -> str:
    if path:
        return path
    env_path = os.environ.get(CONFIG_ENV_VAR)
    if env_path:
        return env_path
    return DEFAULT_PARAMETERS_CONFIG_PATH


def deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _stage_entries(stages) -> list:
    if isinstance(stages, dict):
        stages = stages.get("stages", [])
    entries = []
    for stage in stages:
        if isinstance(stage, int):
            entries.append({"size": stage, "kernel": f"ones{stage}"})
        else:
            entries.append(dict(stage))
    return entries


def build_run_params(config: Dict[str, Any]) -> RunParams:
    unknown = set(config) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"Unknown config sections: {sorted(unknown)}. Expected {list(SECTIONS)}")

    data = dict(config.get("run") or {})
    for section in ("noise", "device", "circuit", "power", "experiments"):
        if config.get(section) is not None:
            data[section] = config[section]
    if config.get("stages") is not None:
        data["stages"] = {"stages": _stage_entries(config["stages"])}

    try:
        return RunParams(**data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def load_run_params(config_path: Optional[str] = None,
                    overrides: Optional[Dict[str, Any]] = None) -> RunParams:
    path = resolve_config_path(config_path)
    config = load_yaml(path) or {}
    if not isinstance(config, dict):
        raise ConfigError(f"Config file must hold a mapping of sections: {path}")
    logger.debug("Loaded configuration from %s", path)
    if overrides:
        config = deep_merge(config, overrides)
    return build_run_params(config)


def to_config(params: RunParams) -> Dict[str, Any]:
    """Inverse of build_run_params: the effective params in the layout of the YAML file."""
    data = params.to_dict()
    config = {section: data.pop(section) for section in ("noise", "device", "circuit", "power", "experiments")}
    config["stages"] = data.pop("stages")["stages"]
    config["run"] = data
    return config


def save_run_params(params: RunParams, path: str) -> str:
    return save_yaml(to_config(params), path)
