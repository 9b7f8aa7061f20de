import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import ValidationError

from config.configuration import RunConfig
from utils.errors import ConfigError, FormatError

logger = logging.getLogger(__name__)


def get_bool_env(name: str, default: bool = False) -> bool:
    '''get bool env'''
    val = os.getenv(name)
    if val is None:
        return default
    return str(val).strip().lower() in {"1", "yes", "on", "true", "y"}


def get_str_env(name: str, default: str = "") -> str:
    '''get str env'''
    val = os.getenv(name)
    return default if val is None else str(val).strip()


def get_int_env(name: str, default: int = 0) -> int:
    '''get int env'''
    val = os.getenv(name)
    if val is None:
        return default
    try:
        return int(val.strip())
    except ValueError:
        logger.warning(f"Invalid integer value for {name}: {val}. Using default {default}.")
        return default


def replace_env_vars(value: str) -> str:
    '''replace env value in str'''
    if not isinstance(value, str):
        return value
    if value.startswith("$"):
        env_var = value[1:]
        return os.getenv(env_var, env_var)
    return value


def process_dict(config: Dict[str, Any]) -> Dict[str, Any]:
    '''recursively process dictionary to replace the env value'''
    if not config:
        return {}
    result = {}
    for key, value in config.items():
        if isinstance(value, dict):
            result[key] = process_dict(value)
        elif isinstance(value, str):
            result[key] = replace_env_vars(value)
        else:
            result[key] = value
    return result


_config_cache: Dict[str, Dict[str, Any]] = {}


def load_yaml_config(file_path: str) -> Dict[str, Any]:
    '''load and process yaml config file'''
    if not os.path.exists(file_path):
        return {}
    if file_path in _config_cache:
        return _config_cache[file_path]

    with open(file_path, "r") as f:
        config = yaml.safe_load(f)
    processed_config = process_dict(config) if isinstance(config, dict) else config

    _config_cache[file_path] = processed_config
    return processed_config


def _read_document(path: Path) -> Dict[str, Any]:
    if path.suffix.lower() == ".json":
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}", str(path)) from exc
        return process_dict(document) if isinstance(document, dict) else document
    try:
        return load_yaml_config(str(path))
    except yaml.YAMLError as exc:
        raise FormatError(f"invalid YAML: {exc}", str(path)) from exc


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(part) for part in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def build_run_config(document: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Validate a raw mapping into a RunConfig; unknown keys are rejected."""
    document = document or {}
    if not isinstance(document, dict):
        raise ConfigError("<root>: run configuration must be a mapping")
    try:
        return RunConfig.model_validate(document)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from exc


def load_run_config(file_path: Optional[str]) -> RunConfig:
    '''load a JSON or YAML run config; None means defaults only'''
    if not file_path:
        return build_run_config({})
    path = Path(file_path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return build_run_config(_read_document(path))


def merge_overrides(config: RunConfig, overrides: Dict[str, Dict[str, Any]]) -> RunConfig:
    """Apply {section: {field: value}} on top of ``config`` and re-validate."""
    document = config.model_dump(mode="json")
    for section, values in overrides.items():
        for key, value in values.items():
            if value is not None:
                document.setdefault(section, {})[key] = value
    return build_run_config(document)
