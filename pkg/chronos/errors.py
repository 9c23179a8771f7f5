"""
Exception hierarchy for the Chronos simulator.

Each class carries the process exit code the command line maps it to.

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from typing import Any


class ChronosError(Exception):
    """Base class for every error raised by the simulator."""

    exit_code = 1


class ConfigError(ChronosError):
    """Invalid or unresolvable scenario configuration."""

    exit_code = 2

    def __init__(self, message: str, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class SelectionError(ConfigError):
    """Eigen-selection does not match the computed spectrum."""

    def __init__(self, message: str, nearest: list[float] | None = None, field: str | None = None):
        self.nearest = list(nearest or [])
        if self.nearest:
            listing = ", ".join(f"{value:.10g}" for value in self.nearest)
            message = f"{message} (nearest eigenvalues: {listing})"
        super().__init__(message, field=field)


class InputError(ChronosError, ValueError):
    """Invalid argument passed to a library operation."""


class DomainError(InputError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(ChronosError):
    """A numerical procedure failed to meet its accuracy contract."""

    exit_code = 3

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InsufficientRangeError(NumericalError):
    """Root scan interval holds fewer roots than requested."""


class CacheFormatError(ChronosError):
    """Cache file header, version or payload size does not match."""
