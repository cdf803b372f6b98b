"""Constants used by the cdrcommute package."""

import math
import os
from datetime import time


def getenvint(key, default=0):
    """Get an int from an env var or use default."""
    try:
        return int(os.environ[key])
    except (KeyError, TypeError, ValueError):
        return default


# IUGG mean Earth radius
EARTH_RADIUS_KM = 6371.0088

# Kilometers per degree of latitude on the mean sphere
KM_PER_DEGREE = math.pi * EARTH_RADIUS_KM / 180.0

# Local equirectangular projection is refused beyond this offset from the anchor
MAX_GRID_OFFSET_KM = 5000.0

# Whether the CLI should log at DEBUG level by default
DEBUG = os.getenv("CDRCOMMUTE_DEBUG") is not None

# Spearman p-values are enumerated exactly up to this sample size
EXACT_SPEARMAN_MAX_N = max(10, getenvint("CDRCOMMUTE_EXACT_SPEARMAN_MAX_N", 10))

# Filter defaults
DEFAULT_RESAMPLE_MINUTES = 10
DEFAULT_SPATIAL_RADIUS_KM = 1.0
DEFAULT_SPEED_LIMIT_KMH = 120.0
DEFAULT_MIN_SEGMENT_SECONDS = 60
DEFAULT_EXCLUDED_WEEKDAYS = frozenset({"Saturday", "Sunday"})
DEFAULT_MAX_GAP_HOURS = 16.0
DEFAULT_SPARSE_TOWER_KM = 50.0
DEFAULT_SPARSE_DWELL_SHARE = 0.10

# Day/night and morning/evening dividers
DEFAULT_DAY_START = time(8, 0)
DEFAULT_NIGHT_START = time(20, 0)
DEFAULT_NOON = time(12, 0)

# Home/work and distance rules
DEFAULT_SHARE_THRESHOLD = 0.5
DEFAULT_MIN_COMMUTE_KM = 1.0
DEFAULT_DISTANCE_BIN_KM = 1.0

# Frequent-caller screen
DEFAULT_MORNING_WINDOW = (time(5, 0), time(12, 0))
DEFAULT_EVENING_WINDOW = (time(12, 0), time(22, 0))
DEFAULT_MIN_CALL_RATE = 1.0

# Evening samples arriving home before this are flagged as implausible
DEFAULT_PLAUSIBILITY_CUTOFF = time(15, 0)

# Gaussian fit windows for the time-of-day distributions
DEFAULT_MORNING_FIT_WINDOW = (time(5, 0), time(10, 0))
DEFAULT_EVENING_FIT_WINDOW = (time(16, 0), time(23, 0))
MIN_GAUSSIAN_FIT_POINTS = 10

# Histogram bucket width for every time-of-day and duration table
BUCKET_MINUTES = 10
MINUTES_PER_DAY = 1440

# Distance bin presets, in km
TIMING_BIN_EDGES = (0.0, 2.5, 5.0, 10.0, 20.0, 50.0)
DURATION_BIN_EDGES = (0.0, 5.0, 10.0, 20.0, 40.0, 80.0)

# GPS grid
DEFAULT_GRID_CELL_KM = 0.5

# Rank curves
DEFAULT_CURVE_MAX_RANK = 50
DEFAULT_ZIPF_RANK_RANGE = (1, 20)

# Calendar weekday names, Monday first like datetime.weekday()
WEEKDAYS = (
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
)
