"""cdrcommute, commute distance and timing analytics from phone and GPS traces."""

from importlib.metadata import PackageNotFoundError, version

from cdrcommute.config import AnalysisConfig, FilterConfig, WorldConfig
from cdrcommute.geo import (
    haversine_km,
    load_tower_registry,
    parse_cdr_stream,
    parse_gps_stream,
)
from cdrcommute.homework import commute_distance, infer_home_work, radius_of_gyration
from cdrcommute.objects import (
    CallEvent,
    CommuteSample,
    DwellInterval,
    DwellPortfolio,
    GpsPoint,
    HomeWorkAssignment,
    RunReport,
    TowerRegistry,
)
from cdrcommute.pipeline import (
    analyze,
    compare_regions,
    emit_tables,
    evaluate,
    run_pipeline,
)
from cdrcommute.portfolio import accumulate_dwell, loglog_slope
from cdrcommute.synth import generate_world, simulate_calls, write_world

try:
    __version__ = version("cdrcommute")
except PackageNotFoundError:
    __version__ = "0.0.0"

__all__ = [
    "AnalysisConfig",
    "CallEvent",
    "CommuteSample",
    "DwellInterval",
    "DwellPortfolio",
    "FilterConfig",
    "GpsPoint",
    "HomeWorkAssignment",
    "RunReport",
    "TowerRegistry",
    "WorldConfig",
    "accumulate_dwell",
    "analyze",
    "commute_distance",
    "compare_regions",
    "emit_tables",
    "evaluate",
    "generate_world",
    "haversine_km",
    "infer_home_work",
    "load_tower_registry",
    "loglog_slope",
    "parse_cdr_stream",
    "parse_gps_stream",
    "radius_of_gyration",
    "run_pipeline",
    "simulate_calls",
    "write_world",
]
