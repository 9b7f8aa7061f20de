import json
import logging
from pathlib import Path
from typing import Any, Union

import numpy as np

from utils.errors import FormatError

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """
    Convert numpy scalars/arrays (possibly nested in dicts and lists) into plain JSON types.

    Args:
        value: Any nested structure

    Returns:
        The same structure built from dict/list/int/float/str/bool/None
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dumps_stable(payload: Any, indent: int = 2) -> str:
    """Serialize with sorted keys so identical payloads give identical bytes."""
    return json.dumps(to_jsonable(payload), ensure_ascii=False, indent=indent, sort_keys=True)


def dump_json(path: Union[str, Path], payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_stable(payload) + "\n", encoding="utf-8")
    logger.debug(f"Wrote JSON to {path}")
    return path


def read_json(path: Union[str, Path]) -> Any:
    """
    Read a JSON document, reporting malformed content as a FormatError naming the file.

    Args:
        path: File to read

    Returns:
        The decoded document
    """
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}", str(path)) from exc
