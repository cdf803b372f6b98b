"""Utility functions for cdrcommute."""

from __future__ import annotations

import csv
import math
import re
from collections.abc import Callable, Iterable, Mapping
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Any

from cdrcommute.exceptions import ConfigError
from cdrcommute.types import CsvValue

EPOCH = datetime(1970, 1, 1)
ISO_TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"
EPOCH_PATTERN = r"^-?[0-9]+$"
TIME_OF_DAY_PATTERN = r"^([0-9]{1,2}):([0-9]{2})(?::([0-9]{2}))?$"


def is_epoch_string(v: Any) -> bool:
    """Detect if a string is an integer epoch-seconds timestamp."""
    return isinstance(v, str) and re.match(EPOCH_PATTERN, v.strip()) is not None


def detect_timestamp_format(value: str) -> str:
    """Decide whether a file uses ``epoch`` or ``iso`` timestamps."""
    return "epoch" if is_epoch_string(value) else "iso"


def from_epoch_seconds(seconds: int) -> datetime:
    """Convert epoch seconds to a naive local civil datetime."""
    return EPOCH + timedelta(seconds=seconds)


def to_epoch_seconds(ts: datetime) -> int:
    """Convert a naive local civil datetime to whole epoch seconds."""
    return (ts - EPOCH) // timedelta(seconds=1)


def parse_timestamp(value: str, fmt: str) -> datetime:
    """Parse a timestamp in the given format.

    :param value: (``str``) Raw field value
    :param fmt: (``str``) ``epoch`` or ``iso``
    :raises ValueError: when the value does not match the format
    """
    value = value.strip()
    if fmt == "epoch":
        if not is_epoch_string(value):
            raise ValueError(f"Not an epoch timestamp: {value!r}")
        return from_epoch_seconds(int(value))
    return datetime.strptime(value, ISO_TIMESTAMP_FORMAT)


def format_timestamp(ts: datetime) -> str:
    """Format a timestamp the way the CSV readers expect it."""
    return ts.strftime(ISO_TIMESTAMP_FORMAT)


def parse_time_of_day(value: str) -> time:
    """Parse ``HH:MM`` or ``HH:MM:SS`` into a time of day."""
    match = re.match(TIME_OF_DAY_PATTERN, value.strip())
    if match is None:
        raise ValueError(f"Not a time of day: {value!r}")
    hour, minute, second = match.groups()
    return time(int(hour), int(minute), int(second or 0))


def format_time_of_day(t: time) -> str:
    """Format a time of day as ``HH:MM`` (or ``HH:MM:SS`` when needed)."""
    if t.second:
        return t.strftime("%H:%M:%S")
    return t.strftime("%H:%M")


def parse_window(value: str) -> tuple[time, time]:
    """Parse a ``HH:MM-HH:MM`` window."""
    start, sep, end = value.partition("-")
    if not sep:
        raise ValueError(f"Not a time window: {value!r}")
    return parse_time_of_day(start), parse_time_of_day(end)


def format_window(window: tuple[time, time]) -> str:
    """Format a time window as ``HH:MM-HH:MM``."""
    return f"{format_time_of_day(window[0])}-{format_time_of_day(window[1])}"


def seconds_of_day(t: datetime | time) -> int:
    """Seconds elapsed since midnight."""
    return t.hour * 3600 + t.minute * 60 + t.second


def minutes_of_day(t: datetime | time) -> float:
    """Minutes elapsed since midnight, with the seconds as a fraction."""
    return seconds_of_day(t) / 60.0


def floor_to_interval(ts: datetime, step: timedelta) -> datetime:
    """Round a timestamp down onto the epoch-anchored lattice of ``step``."""
    return ts - (ts - EPOCH) % step


def ceil_to_interval(ts: datetime, step: timedelta) -> datetime:
    """Round a timestamp up onto the epoch-anchored lattice of ``step``."""
    floored = floor_to_interval(ts, step)
    return floored if floored == ts else floored + step


def at_time(day: date, t: time) -> datetime:
    """Combine a calendar date and a time of day."""
    return datetime.combine(day, t)


def parse_bool(value: str) -> bool:
    """Parse ``true``/``false`` style config values."""
    lowered = value.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"Not a boolean: {value!r}")


def parse_name_set(value: str) -> frozenset[str]:
    """Parse a comma-separated set of names; empty string is the empty set."""
    return frozenset(part.strip() for part in value.split(",") if part.strip())


def parse_float_tuple(value: str) -> tuple[float, ...]:
    """Parse comma-separated floats."""
    return tuple(float(part) for part in value.split(",") if part.strip())


def parse_optional_float(value: str) -> float | None:
    """Parse a float, treating an empty value or ``none`` as missing."""
    if value.strip().lower() in ("", "none"):
        return None
    return float(value)


def parse_int_range(value: str) -> tuple[int, int]:
    """Parse an ``a-b`` integer range."""
    lo, sep, hi = value.partition("-")
    if not sep:
        raise ValueError(f"Not a range: {value!r}")
    return int(lo), int(hi)


def parse_key_values(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` text.

    Blank lines and ``#`` comments are ignored.  Repeated keys are an error.
    """
    values: dict[str, str] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"Expected 'key = value' at line {lineno}")
        if key in values:
            raise ConfigError(f"Duplicate key {key!r} at line {lineno}")

        values[key] = value.strip()

    return values


def coerce_named_values(
    converters: Mapping[str, Callable[[str], Any]], to_coerce: Mapping[str, str]
) -> dict[str, Any]:
    """Coerce raw string values to typed values using per-key converters.

    Unknown keys are rejected so that a typo never silently falls back to a
    default.
    """
    coerced: dict[str, Any] = {}

    for key, raw in to_coerce.items():
        if key not in converters:
            raise ConfigError(f"Unknown configuration key: {key}")

        try:
            coerced[key] = converters[key](raw)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"Invalid value for {key}: {raw!r} ({err})") from err

    return coerced


def format_value(v: CsvValue) -> str:
    """Render a CSV cell deterministically."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(round(v, 9))
    return str(v)


def write_csv(
    path: Path, header: Iterable[str], rows: Iterable[Iterable[CsvValue]]
) -> int:
    """Write rows to a CSV file with a header, returning the row count."""
    count = 0
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    return count
