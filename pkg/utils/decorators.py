import argparse
import functools
import logging
from typing import Any, Callable

logger = logging.getLogger(__name__)


def _describe(arg: Any) -> str:
    if isinstance(arg, argparse.Namespace):
        return ", ".join(f"{k}={v}" for k, v in sorted(vars(arg).items()) if k != "handler")
    return str(arg)


def log_io(func: Callable) -> Callable:
    """
    A decorator that logs the parameters and the outcome of a command handler.

    Args:
        func: The handler to be decorated

    Returns:
        The wrapped function with input/output logging
    """

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        func_name = func.__name__
        params = ", ".join([*(_describe(arg) for arg in args), *(f"{k}={v}" for k, v in kwargs.items())])
        logger.info(f"Command {func_name} called with parameters: {params}")

        result = func(*args, **kwargs)

        logger.info(f"Command {func_name} returned: {result}")
        return result

    return wrapper
