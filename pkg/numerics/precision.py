import contextlib
import logging
from typing import Iterator

import numpy as np

logger = logging.getLogger(__name__)

# float32 while training, float64 for tests and gradient checks
_SUPPORTED = {"float32": np.float32, "float64": np.float64}
_default_dtype: type = np.float32


def default_dtype() -> type:
    return _default_dtype


def set_default_dtype(name: str) -> None:
    global _default_dtype
    if name not in _SUPPORTED:
        raise ValueError(f"Unsupported precision {name!r}; expected one of {sorted(_SUPPORTED)}")
    _default_dtype = _SUPPORTED[name]
    logger.debug("Default tensor dtype set to %s", name)


@contextlib.contextmanager
def precision(name: str) -> Iterator[None]:
    """Temporarily switch the default element type."""
    previous = _default_dtype
    set_default_dtype(name)
    try:
        yield
    finally:
        globals()["_default_dtype"] = previous
