"""
Error types shared across the pipeline.

The CLI maps each family onto an exit code, so raise the narrowest one that fits.
"""

from typing import Optional


class C2FError(Exception):
    """Base class for every error raised on purpose by this package."""


class DimensionError(C2FError, ValueError):
    """Shapes or widths do not line up."""


class ContractError(C2FError, ValueError):
    """A precondition of an operation was violated by the caller."""


class ConfigError(C2FError, ValueError):
    """Run configuration failed validation; the message names the key paths."""


class FormatError(C2FError, ValueError):
    """A file on disk is malformed."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class CheckpointError(FormatError):
    """Checkpoint files disagree with their manifest."""

    def __init__(self, message: str, path: Optional[str] = None, diff: Optional[list[str]] = None):
        self.diff = diff or []
        if self.diff:
            message = message + "\n" + "\n".join(f"  {line}" for line in self.diff)
        super().__init__(message, path)


class NumericError(C2FError, ArithmeticError):
    """Non-finite values or a failed gradient check."""
