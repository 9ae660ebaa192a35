import os
import json
from typing import Any, Dict
from ruamel.yaml import YAML

from modules.utils.paths import DEFAULT_PARAMETERS_CONFIG_PATH
from modules.utils.errors import ConfigError, IOFailure


def load_yaml(path: str = DEFAULT_PARAMETERS_CONFIG_PATH):
    yaml = YAML(typ="safe")
    yaml.preserve_quotes = True
    try:
        with open(path, 'r', encoding='utf-8') as file:
            return yaml.load(file)
    except UnicodeDecodeError as e:
        raise ConfigError(f"Config file {path} is not UTF-8 ({e.reason} at byte {e.start})") from e
    except OSError as e:
        raise IOFailure("Cannot read config file", path) from e


def save_yaml(data: dict, path: str = DEFAULT_PARAMETERS_CONFIG_PATH):
    yaml = YAML(typ="safe")
    yaml.map_indent = 2
    yaml.sequence_indent = 4
    yaml.sequence_dash_offset = 2
    yaml.preserve_quotes = True
    yaml.default_flow_style = False
    yaml.sort_base_mapping_type_on_output = False

    try:
        with open(path, 'w', encoding='utf-8') as file:
            yaml.dump(data, file)
    except OSError as e:
        raise IOFailure("Cannot write config file", path) from e
    return path


def read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise IOFailure("Cannot read input file", path) from e


def write_bytes(data: bytes, path: str) -> str:
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "wb") as f:
            f.write(data)
    except OSError as e:
        raise IOFailure("Cannot write output file", path) from e
    return path


def dump_json(data: Any) -> str:
    """Serialize with sorted keys so reruns produce byte-identical files."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=True) + "\n"


def write_json(data: Any, path: str) -> str:
    return write_bytes(dump_json(data).encode("utf-8"), path)


def read_json(path: str) -> Dict:
    raw = read_bytes(path)
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise IOFailure(f"Invalid JSON ({e})", path) from e


def write_text(text: str, path: str) -> str:
    return write_bytes(text.encode("utf-8"), path)
