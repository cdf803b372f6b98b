from datetime import datetime, time, timedelta

import pytest

from cdrcommute.exceptions import ConfigError
from cdrcommute.utils import (
    ceil_to_interval,
    coerce_named_values,
    detect_timestamp_format,
    floor_to_interval,
    format_time_of_day,
    format_value,
    minutes_of_day,
    parse_bool,
    parse_int_range,
    parse_key_values,
    parse_name_set,
    parse_optional_float,
    parse_timestamp,
    parse_window,
    to_epoch_seconds,
    write_csv,
)

TEN_MINUTES = timedelta(minutes=10)


def test_timestamp_formats():
    """Test epoch and ISO timestamps parse to the same instant"""
    iso = parse_timestamp("2012-01-02T08:30:00", "iso")
    epoch = parse_timestamp(str(to_epoch_seconds(iso)), "epoch")
    assert iso == epoch == datetime(2012, 1, 2, 8, 30)
    assert detect_timestamp_format("1325493000") == "epoch"
    assert detect_timestamp_format("2012-01-02T08:30:00") == "iso"

    with pytest.raises(ValueError):
        parse_timestamp("08:30", "epoch")


def test_interval_rounding():
    """Test floor/ceil onto the 10-minute lattice"""
    ts = datetime(2012, 1, 2, 8, 3, 20)
    assert floor_to_interval(ts, TEN_MINUTES) == datetime(2012, 1, 2, 8, 0)
    assert ceil_to_interval(ts, TEN_MINUTES) == datetime(2012, 1, 2, 8, 10)

    on_tick = datetime(2012, 1, 2, 8, 10)
    assert floor_to_interval(on_tick, TEN_MINUTES) == on_tick
    assert ceil_to_interval(on_tick, TEN_MINUTES) == on_tick


def test_time_of_day():
    """Test time-of-day parsing and formatting"""
    assert parse_window("05:00-12:00") == (time(5), time(12))
    assert format_time_of_day(time(8, 5)) == "08:05"
    assert format_time_of_day(time(8, 5, 30)) == "08:05:30"
    assert minutes_of_day(datetime(2012, 1, 2, 7, 30, 30)) == 450.5

    with pytest.raises(ValueError):
        parse_window("05:00")


@pytest.mark.parametrize(
    "raw,expected", [("true", True), ("Yes", True), ("0", False), ("off", False)]
)
def test_parse_bool(raw, expected):
    assert parse_bool(raw) is expected


def test_parse_small_values():
    assert parse_name_set(" Saturday, Sunday ,") == {"Saturday", "Sunday"}
    assert parse_name_set("") == frozenset()
    assert parse_optional_float("") is None
    assert parse_optional_float("none") is None
    assert parse_optional_float("1.3") == 1.3
    assert parse_int_range("1-20") == (1, 20)

    with pytest.raises(ValueError):
        parse_int_range("20")


def test_parse_key_values():
    """Test comments and blank lines are skipped"""
    text = "# a comment\n\nseed = 7  # trailing\nregion=lisbon\n"
    assert parse_key_values(text) == {"seed": "7", "region": "lisbon"}


@pytest.mark.parametrize("text", ["seed = 1\nseed = 2\n", "no separator\n", "= 3\n"])
def test_parse_key_values_invalid(text):
    with pytest.raises(ConfigError):
        parse_key_values(text)


def test_coerce_named_values():
    converters = {"seed": int, "share": float}
    assert coerce_named_values(converters, {"seed": "3"}) == {"seed": 3}

    with pytest.raises(ConfigError, match="Unknown configuration key"):
        coerce_named_values(converters, {"sead": "3"})
    with pytest.raises(ConfigError, match="Invalid value for share"):
        coerce_named_values(converters, {"share": "half"})


@pytest.mark.parametrize(
    "value,expected",
    [
        (None, ""),
        (float("nan"), ""),
        (True, "true"),
        (False, "false"),
        (3, "3"),
        (0.1, "0.1"),
        (1 / 3, "0.333333333"),
        ("H", "H"),
    ],
)
def test_format_value(value, expected):
    assert format_value(value) == expected


def test_write_csv(tmp_path):
    path = tmp_path / "out.csv"
    count = write_csv(path, ("a", "b"), [(1, 0.5), (2, None)])
    assert count == 2
    assert path.read_text(encoding="utf-8") == "a,b\n1,0.5\n2,\n"
