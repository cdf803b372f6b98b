"""Exceptions for the cdrcommute package."""

from __future__ import annotations

from collections.abc import Mapping
from enum import IntEnum
from typing import Any


class ExitCodes(IntEnum):
    """Unix exit codes for the CLI."""

    SUCCESS = 0
    GENERAL_ERROR = 1
    CONFIG_ERROR = 2
    DATA_ERROR = 3


class CommuteError(Exception):
    """Base for every error raised by cdrcommute."""

    message = "Unexpected analysis error"

    def __init__(self, message=None):
        super().__init__(message or self.message)


class ConfigError(CommuteError):  # noqa: D101
    message = "Invalid configuration"


class WorldConfigError(ConfigError):  # noqa: D101
    message = "Invalid synthetic world configuration"


class DataError(CommuteError):  # noqa: D101
    message = "Invalid or insufficient data"


class RegistryError(DataError):  # noqa: D101
    message = "Invalid tower registry"


class DuplicateTowerError(RegistryError):
    """A tower id appears twice in a registry file."""

    def __init__(self, tower_id: str):
        self.tower_id = tower_id
        super().__init__(f"Duplicate tower id: {tower_id}")


class MalformedRowError(RegistryError):
    """A registry row could not be parsed or violates a coordinate bound."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"Malformed registry row at line {line}: {reason}")


class EmptyRegistryError(RegistryError):  # noqa: D101
    message = "empty registry"


class UnknownLocationError(DataError):
    """A location id has no coordinates in the registry."""

    def __init__(self, location_id: str):
        self.location_id = location_id
        super().__init__(f"Unknown location id: {location_id}")


class GridRangeError(DataError):
    """A point is too far from the grid anchor for the local projection."""

    def __init__(self, point: Any, distance_km: float):
        self.point = point
        self.distance_km = distance_km
        super().__init__(
            f"Point {point} is {distance_km:.1f} km from the grid anchor"
        )


class InsufficientDataError(DataError):  # noqa: D101
    message = "insufficient data"


class ZeroDwellError(DataError):  # noqa: D101
    message = "zero dwell inside the fitted rank range"


class ConstantInputError(DataError):  # noqa: D101
    message = "constant input, correlation is undefined"


class EmptyInputError(DataError):  # noqa: D101
    message = "no usable records in input"


class StageError(CommuteError):
    """A pipeline stage failed."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"Stage {stage} failed: {cause}")


EXCEPTION_EXIT_CODES: Mapping[type[CommuteError], ExitCodes] = {
    ConfigError: ExitCodes.CONFIG_ERROR,
    DataError: ExitCodes.DATA_ERROR,
}


def exit_code_for(exc: BaseException) -> ExitCodes:
    """Translate an exception into the CLI exit code it should produce."""
    if isinstance(exc, StageError):
        return exit_code_for(exc.cause)

    for exc_type, code in EXCEPTION_EXIT_CODES.items():
        if isinstance(exc, exc_type):
            return code

    return ExitCodes.GENERAL_ERROR
