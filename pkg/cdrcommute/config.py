"""Analysis, filter and synthetic-world configuration.

Every config is a frozen dataclass that validates itself on construction and
round-trips through flat ``key = value`` text.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from datetime import date, time, timedelta
from pathlib import Path
from typing import Any, ClassVar

from cdrcommute.constants import (
    DEFAULT_CURVE_MAX_RANK,
    DEFAULT_DAY_START,
    DEFAULT_DISTANCE_BIN_KM,
    DEFAULT_EVENING_FIT_WINDOW,
    DEFAULT_EVENING_WINDOW,
    DEFAULT_EXCLUDED_WEEKDAYS,
    DEFAULT_GRID_CELL_KM,
    DEFAULT_MAX_GAP_HOURS,
    DEFAULT_MIN_CALL_RATE,
    DEFAULT_MIN_COMMUTE_KM,
    DEFAULT_MIN_SEGMENT_SECONDS,
    DEFAULT_MORNING_FIT_WINDOW,
    DEFAULT_MORNING_WINDOW,
    DEFAULT_NIGHT_START,
    DEFAULT_NOON,
    DEFAULT_PLAUSIBILITY_CUTOFF,
    DEFAULT_RESAMPLE_MINUTES,
    DEFAULT_SHARE_THRESHOLD,
    DEFAULT_SPARSE_DWELL_SHARE,
    DEFAULT_SPARSE_TOWER_KM,
    DEFAULT_SPATIAL_RADIUS_KM,
    DEFAULT_SPEED_LIMIT_KMH,
    DEFAULT_ZIPF_RANK_RANGE,
    DURATION_BIN_EDGES,
    TIMING_BIN_EDGES,
    WEEKDAYS,
)
from cdrcommute.exceptions import ConfigError, WorldConfigError
from cdrcommute.objects import DistanceBins, TimeWindow
from cdrcommute.utils import (
    coerce_named_values,
    format_time_of_day,
    format_window,
    parse_bool,
    parse_float_tuple,
    parse_int_range,
    parse_key_values,
    parse_name_set,
    parse_optional_float,
    parse_time_of_day,
    parse_window,
)


def normalize_weekdays(names: frozenset[str]) -> frozenset[str]:
    """Canonicalize weekday names (case-insensitive) to ``Monday`` style."""
    lookup = {name.lower(): name for name in WEEKDAYS}
    normalized = set()
    for name in names:
        if name.lower() not in lookup:
            raise ConfigError(f"Unknown weekday: {name}")
        normalized.add(lookup[name.lower()])
    return frozenset(normalized)


def parse_bins(value: str) -> DistanceBins:
    """Parse a bin preset name or comma-separated edges."""
    if value.strip() in ("timing", "duration"):
        return DistanceBins.preset(value.strip())
    return DistanceBins(parse_float_tuple(value))


def parse_optional_path(value: str) -> Path | None:
    """Parse a path, treating an empty value or ``none`` as missing."""
    if value.strip().lower() in ("", "none"):
        return None
    return Path(value.strip())


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, time):
        return format_time_of_day(value)
    if isinstance(value, TimeWindow):
        return format_window((value.start, value.end))
    if isinstance(value, DistanceBins):
        return ",".join(f"{e:g}" for e in value.edges)
    if isinstance(value, frozenset):
        return ",".join(sorted(value, key=_weekday_order))
    if isinstance(value, tuple):
        return "-".join(str(v) for v in value)
    return str(value)


def _weekday_order(name: str) -> tuple[int, str]:
    return (WEEKDAYS.index(name) if name in WEEKDAYS else len(WEEKDAYS), name)


class KeyValueConfig:
    """Mixin giving a config dataclass its flat ``key = value`` text form."""

    converters: ClassVar[Mapping[str, Callable[[str], Any]]] = {}

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]):
        """Build a config from raw string values; unknown keys are rejected."""
        return cls(**coerce_named_values(cls.converters, values))

    @classmethod
    def from_text(cls, text: str):
        """Build a config from ``key = value`` text."""
        return cls.from_mapping(parse_key_values(text))

    @classmethod
    def from_file(cls, path: Path):
        """Build a config from a ``key = value`` file."""
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"Unable to read config file {path}: {err}") from err
        return cls.from_text(text)

    def to_mapping(self) -> dict[str, str]:
        """Render every field as text."""
        return {
            f.name: _format(getattr(self, f.name))
            for f in dataclasses.fields(self)  # type: ignore[arg-type]
        }

    def to_text(self) -> str:
        """Render the config as ``key = value`` text."""
        return "".join(f"{k} = {v}\n" for k, v in self.to_mapping().items())


@dataclass(frozen=True)
class FilterConfig(KeyValueConfig):
    """Thresholds of every pre-analysis cleaning rule.

    :param resample_interval: (``int``) Lattice spacing in minutes
    :param spatial_radius: (``float``) Movements within this many km of the
        held anchor are treated as noise
    :param speed_limit: (``float``) GPS traces reaching this speed (km/h) are
        discarded
    :param min_segment_seconds: (``float``) Consecutive GPS fixes closer in time
        than this are ignored by the speed screen
    :param excluded_weekdays: (``frozenset[str]``) Weekdays whose events are
        removed before home/work inference
    :param max_gap: (``float``) Hours of silence beyond which presence is not
        assumed
    :param sparse_tower_km: (``float``) A tower is sparse if its nearest
        neighbour is farther than this
    :param sparse_dwell_share: (``float``) Users with more than this share of
        dwell at sparse towers are removed
    """

    resample_interval: int = DEFAULT_RESAMPLE_MINUTES
    spatial_radius: float = DEFAULT_SPATIAL_RADIUS_KM
    speed_limit: float = DEFAULT_SPEED_LIMIT_KMH
    min_segment_seconds: float = DEFAULT_MIN_SEGMENT_SECONDS
    excluded_weekdays: frozenset[str] = DEFAULT_EXCLUDED_WEEKDAYS
    max_gap: float = DEFAULT_MAX_GAP_HOURS
    sparse_tower_km: float = DEFAULT_SPARSE_TOWER_KM
    sparse_dwell_share: float = DEFAULT_SPARSE_DWELL_SHARE

    converters: ClassVar[Mapping[str, Callable[[str], Any]]] = {
        "resample_interval": int,
        "spatial_radius": float,
        "speed_limit": float,
        "min_segment_seconds": float,
        "excluded_weekdays": parse_name_set,
        "max_gap": float,
        "sparse_tower_km": float,
        "sparse_dwell_share": float,
    }

    def __post_init__(self):
        object.__setattr__(
            self, "excluded_weekdays", normalize_weekdays(self.excluded_weekdays)
        )

        for name in (
            "resample_interval",
            "spatial_radius",
            "speed_limit",
            "min_segment_seconds",
            "max_gap",
            "sparse_tower_km",
        ):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")

        if len(self.excluded_weekdays) > 6:
            raise ConfigError("At least one weekday must remain after exclusion")

        if not 0.0 < self.sparse_dwell_share < 1.0:
            raise ConfigError("sparse_dwell_share must lie strictly between 0 and 1")

    @property
    def resample_step(self) -> timedelta:
        """Lattice spacing."""
        return timedelta(minutes=self.resample_interval)

    @property
    def max_gap_delta(self) -> timedelta:
        """Longest silence across which presence is assumed."""
        return timedelta(hours=self.max_gap)

    @property
    def excluded_weekday_numbers(self) -> frozenset[int]:
        """Excluded weekdays as ``datetime.weekday()`` numbers."""
        return frozenset(WEEKDAYS.index(name) for name in self.excluded_weekdays)


def _window(value: str) -> TimeWindow:
    return TimeWindow(*parse_window(value))


@dataclass(frozen=True)
class AnalysisConfig(KeyValueConfig):
    """Every input, threshold and output of one pipeline run."""

    cdr: Path | None = None
    gps: Path | None = None
    towers: Path | None = None
    outdir: Path = Path("out")
    region: str = "region"
    filters: FilterConfig = field(default_factory=FilterConfig)
    day_start: time = DEFAULT_DAY_START
    night_start: time = DEFAULT_NIGHT_START
    noon: time = DEFAULT_NOON
    share_threshold: float = DEFAULT_SHARE_THRESHOLD
    min_commute_km: float = DEFAULT_MIN_COMMUTE_KM
    crow_fly_factor: float | None = None
    gyration_weighting: str = "dwell"
    distance_bin_km: float = DEFAULT_DISTANCE_BIN_KM
    timing_bins: DistanceBins = field(default_factory=DistanceBins.timing)
    duration_bins: DistanceBins = field(default_factory=DistanceBins.duration)
    morning_window: TimeWindow = TimeWindow(*DEFAULT_MORNING_WINDOW)
    evening_window: TimeWindow = TimeWindow(*DEFAULT_EVENING_WINDOW)
    min_call_rate: float = DEFAULT_MIN_CALL_RATE
    plausibility_cutoff: time = DEFAULT_PLAUSIBILITY_CUTOFF
    exclude_implausible: bool = False
    morning_fit_window: TimeWindow = TimeWindow(*DEFAULT_MORNING_FIT_WINDOW)
    evening_fit_window: TimeWindow = TimeWindow(*DEFAULT_EVENING_FIT_WINDOW)
    grid_cell_km: float = DEFAULT_GRID_CELL_KM
    grid_anchor_lat: float | None = None
    grid_anchor_lon: float | None = None
    curve_max_rank: int = DEFAULT_CURVE_MAX_RANK
    zipf_rank_range: tuple[int, int] = DEFAULT_ZIPF_RANK_RANGE
    seed: int = 7

    converters: ClassVar[Mapping[str, Callable[[str], Any]]] = {
        "cdr": parse_optional_path,
        "gps": parse_optional_path,
        "towers": parse_optional_path,
        "outdir": Path,
        "region": str,
        "day_start": parse_time_of_day,
        "night_start": parse_time_of_day,
        "noon": parse_time_of_day,
        "share_threshold": float,
        "min_commute_km": float,
        "crow_fly_factor": parse_optional_float,
        "gyration_weighting": str,
        "distance_bin_km": float,
        "timing_bins": parse_bins,
        "duration_bins": parse_bins,
        "morning_window": _window,
        "evening_window": _window,
        "min_call_rate": float,
        "plausibility_cutoff": parse_time_of_day,
        "exclude_implausible": parse_bool,
        "morning_fit_window": _window,
        "evening_fit_window": _window,
        "grid_cell_km": float,
        "grid_anchor_lat": parse_optional_float,
        "grid_anchor_lon": parse_optional_float,
        "curve_max_rank": int,
        "zipf_rank_range": parse_int_range,
        "seed": int,
    }

    def __post_init__(self):
        if not self.day_start < self.night_start:
            raise ConfigError("day_start must precede night_start")
        if not 0.0 < self.share_threshold < 1.0:
            raise ConfigError("share_threshold must lie strictly between 0 and 1")
        if self.min_commute_km < 0:
            raise ConfigError("min_commute_km must not be negative")
        if self.crow_fly_factor is not None and not self.crow_fly_factor > 0:
            raise ConfigError("crow_fly_factor must be positive")
        if self.gyration_weighting not in ("dwell", "visits"):
            raise ConfigError("gyration_weighting must be 'dwell' or 'visits'")
        if not self.distance_bin_km > 0:
            raise ConfigError("distance_bin_km must be positive")
        if self.min_call_rate < 0:
            raise ConfigError("min_call_rate must not be negative")
        if not self.grid_cell_km > 0:
            raise ConfigError("grid_cell_km must be positive")
        if (self.grid_anchor_lat is None) != (self.grid_anchor_lon is None):
            raise ConfigError("grid_anchor_lat and grid_anchor_lon go together")
        if self.curve_max_rank < 1:
            raise ConfigError("curve_max_rank must be at least 1")
        lo, hi = self.zipf_rank_range
        if not 1 <= lo < hi:
            raise ConfigError("zipf_rank_range must be an ascending range from 1")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> AnalysisConfig:
        """Build a config from raw values; FilterConfig keys sit alongside."""
        filter_keys = FilterConfig.converters.keys()
        filter_values = {k: v for k, v in values.items() if k in filter_keys}
        own_values = {k: v for k, v in values.items() if k not in filter_keys}
        coerced = coerce_named_values(cls.converters, own_values)
        return cls(filters=FilterConfig.from_mapping(filter_values), **coerced)

    def to_mapping(self) -> dict[str, str]:
        """Render every field as text, flattening the filter config."""
        mapping = {
            k: v for k, v in super().to_mapping().items() if k != "filters"
        }
        mapping.update(self.filters.to_mapping())
        return mapping

    def replace(self, **changes: Any) -> AnalysisConfig:
        """Copy with changes; filter fields may be given flat."""
        filter_names = FilterConfig.converters.keys()
        filter_changes = {k: v for k, v in changes.items() if k in filter_names}
        own_changes = {k: v for k, v in changes.items() if k not in filter_names}
        if filter_changes:
            own_changes["filters"] = dataclasses.replace(
                self.filters, **filter_changes
            )
        return dataclasses.replace(self, **own_changes)

    @property
    def mode(self) -> str:
        """``cdr`` or ``gps``."""
        return "gps" if self.gps is not None else "cdr"

    def validate_inputs(self) -> None:
        """Check that exactly one input mode is set and its files exist."""
        if (self.cdr is None) == (self.gps is None):
            raise ConfigError("Exactly one of cdr or gps input must be given")
        if self.cdr is not None and self.towers is None:
            raise ConfigError("cdr input requires a towers registry")

        for name in ("cdr", "gps", "towers"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{name} input not found: {path}")


@dataclass(frozen=True)
class WorldConfig(KeyValueConfig):
    """Parameters of a synthetic commuter world.

    Travel time is drawn about ``target_commute_minutes`` regardless of distance
    in the ``multimodal`` regime and equals distance over ``speed_kmh`` in the
    ``car_only`` regime.
    """

    seed: int = 7
    n_towers: int = 400
    region_km: float = 30.0
    anchor_lat: float = 38.7
    anchor_lon: float = -9.1
    n_agents: int = 1000
    days: int = 14
    start_date: date = date(2012, 1, 2)
    weekdays: frozenset[str] = frozenset(WEEKDAYS[:5])
    call_rate_min: float = 2.0
    call_rate_max: float = 2.0
    regime: str = "multimodal"
    target_commute_minutes: float = 40.0
    commute_jitter_minutes: float = 10.0
    speed_kmh: float = 30.0
    depart_mean: time = time(8, 0)
    depart_agent_jitter_minutes: float = 30.0
    depart_day_jitter_minutes: float = 15.0
    return_mean: time = time(17, 30)
    zipf_exponent: float = 1.0
    n_secondary: int = 20
    side_visit_probability: float = 0.5
    night_excursion_probability: float = 0.05
    min_home_work_km: float = 1.0
    handover_exclusion_km: float = 1.0
    gps_interval_seconds: int = 30

    converters: ClassVar[Mapping[str, Callable[[str], Any]]] = {
        "seed": int,
        "n_towers": int,
        "region_km": float,
        "anchor_lat": float,
        "anchor_lon": float,
        "n_agents": int,
        "days": int,
        "start_date": date.fromisoformat,
        "weekdays": parse_name_set,
        "call_rate_min": float,
        "call_rate_max": float,
        "regime": str,
        "target_commute_minutes": float,
        "commute_jitter_minutes": float,
        "speed_kmh": float,
        "depart_mean": parse_time_of_day,
        "depart_agent_jitter_minutes": float,
        "depart_day_jitter_minutes": float,
        "return_mean": parse_time_of_day,
        "zipf_exponent": float,
        "n_secondary": int,
        "side_visit_probability": float,
        "night_excursion_probability": float,
        "min_home_work_km": float,
        "handover_exclusion_km": float,
        "gps_interval_seconds": int,
    }

    def __post_init__(self):
        try:
            weekdays = normalize_weekdays(self.weekdays)
        except ConfigError as err:
            raise WorldConfigError(str(err)) from err
        object.__setattr__(self, "weekdays", weekdays)

        for name in ("n_towers", "n_agents", "days", "gps_interval_seconds"):
            if getattr(self, name) < 1:
                raise WorldConfigError(f"{name} must be positive")
        if self.n_towers < 2:
            raise WorldConfigError("n_towers must be at least 2")
        if not self.region_km > 0:
            raise WorldConfigError("region_km must be positive")
        if not 0 <= self.call_rate_min <= self.call_rate_max:
            raise WorldConfigError("call rates must satisfy 0 <= min <= max")
        if self.regime not in ("multimodal", "car_only"):
            raise WorldConfigError("regime must be 'multimodal' or 'car_only'")
        if not self.target_commute_minutes > 0 or not self.speed_kmh > 0:
            raise WorldConfigError("travel time parameters must be positive")
        if not 0.0 < self.night_excursion_probability < 0.5:
            raise WorldConfigError(
                "night_excursion_probability must lie strictly between 0 and 0.5"
            )
        if not 0.0 <= self.side_visit_probability <= 1.0:
            raise WorldConfigError("side_visit_probability must lie in [0, 1]")
        if self.n_secondary < 0 or self.zipf_exponent < 0:
            raise WorldConfigError("secondary place parameters must not be negative")
        if not self.depart_mean < self.return_mean:
            raise WorldConfigError("depart_mean must precede return_mean")

    def to_mapping(self) -> dict[str, str]:
        """Render every field as text."""
        mapping = super().to_mapping()
        mapping["start_date"] = self.start_date.isoformat()
        return mapping
