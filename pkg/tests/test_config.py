from datetime import time
from pathlib import Path

import pytest

from cdrcommute.config import AnalysisConfig, FilterConfig, WorldConfig
from cdrcommute.constants import WEEKDAYS
from cdrcommute.exceptions import ConfigError, WorldConfigError
from cdrcommute.objects import DistanceBins, TimeWindow


def test_analysis_defaults():
    """Test the documented defaults"""
    cfg = AnalysisConfig()
    assert cfg.mode == "cdr"
    assert cfg.day_start == time(8) and cfg.night_start == time(20)
    assert cfg.share_threshold == 0.5
    assert cfg.morning_window == TimeWindow(time(5), time(12))
    assert cfg.evening_window == TimeWindow(time(12), time(22))
    assert cfg.timing_bins == DistanceBins.timing()
    assert cfg.filters.resample_interval == 10
    assert cfg.filters.excluded_weekdays == {"Saturday", "Sunday"}
    assert cfg.filters.excluded_weekday_numbers == {5, 6}


def test_analysis_text_round_trip():
    cfg = AnalysisConfig(
        cdr=Path("calls.csv"),
        towers=Path("towers.csv"),
        region="lisbon",
        crow_fly_factor=1.3,
        zipf_rank_range=(2, 15),
        filters=FilterConfig(max_gap=8.0, excluded_weekdays=frozenset({"Sunday"})),
    )
    assert AnalysisConfig.from_text(cfg.to_text()) == cfg
    assert AnalysisConfig.from_text(AnalysisConfig().to_text()) == AnalysisConfig()


def test_world_text_round_trip():
    cfg = WorldConfig(seed=3, regime="car_only", call_rate_max=4.0)
    assert WorldConfig.from_text(cfg.to_text()) == cfg


def test_filter_keys_sit_alongside():
    """Test filter thresholds are given flat in files and in replace()"""
    cfg = AnalysisConfig.from_mapping({"region": "porto", "max_gap": "8"})
    assert cfg.region == "porto"
    assert cfg.filters.max_gap == 8.0

    changed = cfg.replace(speed_limit=90.0, min_call_rate=2.0)
    assert changed.filters.speed_limit == 90.0
    assert changed.filters.max_gap == 8.0
    assert changed.min_call_rate == 2.0


def test_weekday_names_normalized():
    cfg = FilterConfig.from_mapping({"excluded_weekdays": "thursday, FRIDAY"})
    assert cfg.excluded_weekdays == {"Thursday", "Friday"}
    assert cfg.excluded_weekday_numbers == {3, 4}


def test_bin_presets():
    cfg = AnalysisConfig.from_mapping(
        {"timing_bins": "duration", "duration_bins": "1,5,10"}
    )
    assert cfg.timing_bins == DistanceBins.duration()
    assert cfg.duration_bins.edges == (1.0, 5.0, 10.0)


@pytest.mark.parametrize(
    "values",
    [
        {"share_threshold": "1.0"},
        {"share_threshold": "0"},
        {"day_start": "21:00"},
        {"gyration_weighting": "calls"},
        {"grid_anchor_lat": "38.7"},
        {"zipf_rank_range": "5-2"},
        {"curve_max_rank": "0"},
        {"resample_interval": "0"},
        {"sparse_dwell_share": "1.5"},
        {"excluded_weekdays": "Someday"},
        {"excluded_weekdays": ",".join(WEEKDAYS)},
        {"min_call_rate": "often"},
        {"not_a_key": "1"},
    ],
)
def test_invalid_analysis_config(values):
    with pytest.raises(ConfigError):
        AnalysisConfig.from_mapping(values)


@pytest.mark.parametrize(
    "values",
    [
        {"night_excursion_probability": "0.5"},
        {"night_excursion_probability": "0"},
        {"regime": "bicycle"},
        {"call_rate_min": "3", "call_rate_max": "2"},
        {"n_towers": "1"},
        {"weekdays": "Funday"},
        {"depart_mean": "18:00"},
    ],
)
def test_invalid_world_config(values):
    with pytest.raises(WorldConfigError):
        WorldConfig.from_mapping(values)


def test_validate_inputs(tmp_path):
    calls = tmp_path / "calls.csv"
    towers = tmp_path / "towers.csv"
    calls.write_text("user_id,timestamp,tower_id\n")
    towers.write_text("tower_id,lat,lon\n")

    AnalysisConfig(cdr=calls, towers=towers).validate_inputs()
    AnalysisConfig(gps=calls).validate_inputs()

    with pytest.raises(ConfigError, match="Exactly one"):
        AnalysisConfig().validate_inputs()
    with pytest.raises(ConfigError, match="Exactly one"):
        AnalysisConfig(cdr=calls, gps=calls, towers=towers).validate_inputs()
    with pytest.raises(ConfigError, match="requires a towers"):
        AnalysisConfig(cdr=calls).validate_inputs()
    with pytest.raises(ConfigError, match="not found"):
        AnalysisConfig(cdr=tmp_path / "missing.csv", towers=towers).validate_inputs()


def test_from_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("# lisbon run\nregion = lisbon\nseed = 3\n")
    cfg = AnalysisConfig.from_file(path)
    assert (cfg.region, cfg.seed) == ("lisbon", 3)

    with pytest.raises(ConfigError):
        AnalysisConfig.from_file(tmp_path / "missing.conf")
