"""cdrcommute Objects."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from enum import Enum
from typing import Any

from cdrcommute.constants import DURATION_BIN_EDGES, TIMING_BIN_EDGES
from cdrcommute.exceptions import EmptyRegistryError, UnknownLocationError
from cdrcommute.types import LatLon, Leg, LocationId, Period
from cdrcommute.utils import minutes_of_day


def is_valid_latitude(lat: float) -> bool:
    """Detect if a value is a latitude in degrees."""
    return -90.0 <= lat <= 90.0


def is_valid_longitude(lon: float) -> bool:
    """Detect if a value is a longitude in degrees."""
    return -180.0 <= lon <= 180.0


class TowerRegistry:
    """Immutable mapping of location ids to (latitude, longitude) in degrees.

    Used for cell towers and, in GPS mode, for grid cell centres.
    """

    def __init__(self, entries: Mapping[LocationId, LatLon]):
        """Initialize a registry.

        :param entries: (``Mapping[str, tuple[float, float]]``) Location id to
            coordinates in decimal degrees
        """
        if not entries:
            raise EmptyRegistryError()

        for location_id, (lat, lon) in entries.items():
            if not is_valid_latitude(lat) or not is_valid_longitude(lon):
                raise ValueError(f"Coordinates out of range for {location_id}")

        self._entries: dict[LocationId, LatLon] = {
            k: (float(v[0]), float(v[1])) for k, v in entries.items()
        }

    def __repr__(self):
        return f"<cdrcommute.objects.TowerRegistry {len(self)} locations>"

    def __eq__(self, other):
        if isinstance(other, TowerRegistry):
            return self._entries == other._entries
        return False

    def __hash__(self):
        return hash(tuple(sorted(self._entries.items())))

    def __len__(self):
        return len(self._entries)

    def __contains__(self, location_id):
        return location_id in self._entries

    def __iter__(self) -> Iterator[LocationId]:
        return iter(self._entries)

    def items(self):
        """Iterate ``(location_id, (lat, lon))`` pairs in insertion order."""
        return self._entries.items()

    def coordinates(self, location_id: LocationId) -> LatLon:
        """Resolve a location id to coordinates.

        :raises UnknownLocationError: if the id is not registered
        """
        try:
            return self._entries[location_id]
        except KeyError:
            raise UnknownLocationError(location_id) from None

    def bounds(self) -> Region:
        """Smallest lat/lon box holding every registered location."""
        lats = [lat for lat, _ in self._entries.values()]
        lons = [lon for _, lon in self._entries.values()]
        return Region(min(lats), min(lons), max(lats), max(lons))


@dataclass(frozen=True, slots=True)
class Region:
    """A latitude/longitude bounding box in degrees."""

    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float

    def expanded(self, degrees: float) -> Region:
        """Grow the box by ``degrees`` on every side, clipped to valid ranges."""
        return Region(
            max(-90.0, self.min_lat - degrees),
            max(-180.0, self.min_lon - degrees),
            min(90.0, self.max_lat + degrees),
            min(180.0, self.max_lon + degrees),
        )

    def contains(self, lat: float, lon: float) -> bool:
        """Whether a coordinate lies inside the box (edges included)."""
        return (
            self.min_lat <= lat <= self.max_lat
            and self.min_lon <= lon <= self.max_lon
        )


@dataclass(frozen=True, slots=True)
class CallEvent:
    """One call detail record: a user seen at a tower at an instant."""

    user_id: str
    timestamp: datetime
    tower_id: LocationId

    @property
    def location_id(self) -> LocationId:
        """The tower id, under the name shared by every observation type."""
        return self.tower_id


@dataclass(frozen=True, slots=True)
class GpsPoint:
    """One GPS fix of one vehicle."""

    vehicle_id: str
    timestamp: datetime
    latitude: float
    longitude: float

    @property
    def position(self) -> LatLon:
        """The fix as a ``(lat, lon)`` pair."""
        return (self.latitude, self.longitude)


@dataclass(frozen=True, slots=True)
class GridCellObservation:
    """A GPS fix after discretization onto the grid."""

    user_id: str
    timestamp: datetime
    location_id: LocationId


@dataclass(frozen=True, slots=True)
class GridSpec:
    """Square grid laid over a local equirectangular projection."""

    anchor: LatLon
    cell_size: float = 0.5

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if not is_valid_latitude(self.anchor[0]) or not is_valid_longitude(
            self.anchor[1]
        ):
            raise ValueError("Grid anchor coordinates out of range")


@dataclass(frozen=True, slots=True, order=True)
class GridCell:
    """A cell of a :class:`GridSpec`, counted north (row) and east (col)."""

    row: int
    col: int

    @property
    def location_id(self) -> LocationId:
        """Location id used for the cell throughout the pipeline."""
        return f"{self.row}:{self.col}"

    @classmethod
    def from_location_id(cls, location_id: LocationId) -> GridCell:
        """Parse a ``row:col`` location id."""
        row, _, col = location_id.partition(":")
        return cls(int(row), int(col))


@dataclass(slots=True)
class ParseReport:
    """Tallies of accepted and rejected rows from one input stream."""

    accepted: int = 0
    bad_timestamp: int = 0
    malformed: int = 0
    unknown_tower: int = 0
    out_of_bounds: int = 0

    def __add__(self, other: ParseReport) -> ParseReport:
        return ParseReport(
            self.accepted + other.accepted,
            self.bad_timestamp + other.bad_timestamp,
            self.malformed + other.malformed,
            self.unknown_tower + other.unknown_tower,
            self.out_of_bounds + other.out_of_bounds,
        )

    @property
    def rejected(self) -> int:
        """Every row that did not make it into the output."""
        return (
            self.bad_timestamp
            + self.malformed
            + self.unknown_tower
            + self.out_of_bounds
        )

    def to_dict(self) -> dict[str, int]:
        """Return a dictionary representation of the report."""
        return {
            "accepted": self.accepted,
            "bad_timestamp": self.bad_timestamp,
            "malformed": self.malformed,
            "unknown_tower": self.unknown_tower,
            "out_of_bounds": self.out_of_bounds,
        }


@dataclass(frozen=True, slots=True)
class Sample:
    """One tick of a resampled track."""

    timestamp: datetime
    location_id: LocationId
    segment: int = 0


@dataclass(frozen=True, slots=True)
class SampledTrack:
    """A user's observations resampled onto a uniform lattice."""

    user_id: str
    samples: tuple[Sample, ...] = ()

    def __len__(self):
        return len(self.samples)

    def segments(self) -> list[tuple[Sample, ...]]:
        """Split the samples into their contiguous segments."""
        out: list[tuple[Sample, ...]] = []
        current: list[Sample] = []
        for sample in self.samples:
            if current and sample.segment != current[-1].segment:
                out.append(tuple(current))
                current = []
            current.append(sample)
        if current:
            out.append(tuple(current))
        return out


@dataclass(frozen=True, slots=True)
class SpeedScreenResult:
    """Decision of the GPS speed screen for one vehicle trace."""

    keep: bool
    reason: str | None = None
    offending: tuple[GpsPoint, GpsPoint] | None = None
    speed_kmh: float | None = None


@dataclass(frozen=True, slots=True)
class SparseScreenResult:
    """Outcome of screening users who dwell near isolated towers."""

    survivors: frozenset[str]
    removed: frozenset[str]
    sparse_towers: frozenset[LocationId]
    pathological: bool = False


@dataclass(frozen=True, slots=True)
class DwellInterval:
    """A span during which a user is assumed to stay at one location."""

    location_id: LocationId
    start: datetime
    end: datetime

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("DwellInterval start must precede end")

    @property
    def duration(self) -> timedelta:
        """Length of the interval."""
        return self.end - self.start

    @property
    def seconds(self) -> float:
        """Length of the interval in seconds."""
        return self.duration.total_seconds()


@dataclass(frozen=True, slots=True)
class PortfolioEntry:
    """One ranked location of a travel portfolio.  Dwell values in seconds."""

    rank: int
    location_id: LocationId
    day_dwell: float
    night_dwell: float
    total_dwell: float

    def dwell(self, period: Period) -> float:
        """Dwell for the given period."""
        return self.day_dwell if period == "day" else self.night_dwell


@dataclass(frozen=True, slots=True)
class DwellPortfolio:
    """A user's locations ranked by total dwell (rank 1 = most time)."""

    user_id: str
    entries: tuple[PortfolioEntry, ...] = ()

    def __len__(self):
        return len(self.entries)

    def __bool__(self):
        return bool(self.entries)

    def total(self, period: Period | None = None) -> float:
        """Total dwell over every location, optionally for one period."""
        if period is None:
            return sum(e.total_dwell for e in self.entries)
        return sum(e.dwell(period) for e in self.entries)

    def by_location(self) -> dict[LocationId, PortfolioEntry]:
        """Index entries by location id."""
        return {e.location_id: e for e in self.entries}


@dataclass(frozen=True, slots=True)
class RankCurve:
    """Population mean daily dwell per rank for one period."""

    period: Period
    points: tuple[tuple[int, float], ...] = ()

    def __len__(self):
        return len(self.points)

    def value_at(self, rank: int) -> float | None:
        """Mean dwell at a rank, or ``None`` if no user has that rank."""
        for r, value in self.points:
            if r == rank:
                return value
        return None


@dataclass(frozen=True, slots=True)
class LogLogFit:
    """Least-squares line through ``(ln rank, ln dwell)``."""

    slope: float
    intercept: float
    rss: float
    n: int


class RejectReason(str, Enum):
    """Why a user (or user-day) produced no result."""

    #: Home/work inference
    NO_HOME_CANDIDATE = "no_home_candidate"
    NO_WORK_CANDIDATE = "no_work_candidate"
    INSUFFICIENT_SHARE = "insufficient_share"
    INSUFFICIENT_DATA = "insufficient_data"
    SHORT_COMMUTE = "short_commute"
    #: Commute timing
    NO_HOME_CALL = "no_home_call"
    NO_WORK_CALL = "no_work_call"
    INVERTED_ORDER = "inverted_order"
    INFREQUENT_CALLER = "infrequent_caller"

    def __str__(self):
        return self.value


@dataclass(frozen=True, slots=True)
class Rejection:
    """A non-result carrying its reason."""

    user_id: str
    reason: RejectReason
    day: date | None = None
    leg: Leg | None = None

    def __bool__(self):
        return False


@dataclass(frozen=True, slots=True)
class HomeWorkAssignment:
    """Inferred home (night) and work (day) locations of a user."""

    user_id: str
    home: LocationId
    work: LocationId
    night_share: float
    day_share: float

    def __post_init__(self):
        if not (0.0 < self.night_share <= 1.0 and 0.0 < self.day_share <= 1.0):
            raise ValueError("Dwell shares must lie in (0, 1]")


@dataclass(frozen=True, slots=True)
class CommuteDistanceRecord:
    """Great-circle home/work distance of a user."""

    user_id: str
    distance_km: float
    corrected_km: float | None = None


@dataclass(frozen=True, slots=True)
class Histogram:
    """A density-normalized histogram (integrates to 1 when ``n`` > 0)."""

    edges: tuple[float, ...] = ()
    density: tuple[float, ...] = ()
    n: int = 0

    def buckets(self) -> Iterator[tuple[float, float, float]]:
        """Iterate ``(lo, hi, density)`` triples."""
        for i, d in enumerate(self.density):
            yield self.edges[i], self.edges[i + 1], d

    def integral(self) -> float:
        """Area under the histogram."""
        return sum((hi - lo) * d for lo, hi, d in self.buckets())


@dataclass(frozen=True, slots=True)
class EmpiricalCdf:
    """Exact empirical CDF: ``probs[i]`` = fraction of values <= ``values[i]``."""

    values: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()

    def __call__(self, x: float) -> float:
        result = 0.0
        for v, p in zip(self.values, self.probs):
            if v > x:
                break
            result = p
        return result


@dataclass(frozen=True, slots=True)
class DistanceDistribution:
    """Commute distance PDF/CDF of a population."""

    pdf: Histogram
    cdf: EmpiricalCdf
    mean_km: float
    n: int


@dataclass(frozen=True, slots=True)
class TimeWindow:
    """A time-of-day window ``[start, end)`` within one calendar day."""

    start: time
    end: time

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("TimeWindow start must precede end")

    @property
    def hours(self) -> float:
        """Length of the window in hours."""
        return (minutes_of_day(self.end) - minutes_of_day(self.start)) / 60.0

    def contains(self, t: datetime | time) -> bool:
        """Whether a timestamp's time of day falls inside the window."""
        tod = t.time() if isinstance(t, datetime) else t
        return self.start <= tod < self.end


@dataclass(frozen=True, slots=True)
class CommuteSample:
    """One user-day's morning or evening commute proxy."""

    user_id: str
    day: date
    leg: Leg
    depart_proxy: datetime
    arrive_proxy: datetime
    distance_km: float | None = None
    implausible: bool = False

    def __post_init__(self):
        if not self.depart_proxy < self.arrive_proxy:
            raise ValueError("depart_proxy must precede arrive_proxy")

    @property
    def duration(self) -> float:
        """Proxy commute duration in minutes."""
        return (self.arrive_proxy - self.depart_proxy).total_seconds() / 60.0

    def proxy(self, which: str) -> datetime:
        """The ``depart`` or ``arrive`` proxy."""
        return self.depart_proxy if which == "depart" else self.arrive_proxy


@dataclass(frozen=True, slots=True)
class DistanceBins:
    """Half-open commute distance bins ``[edges[i], edges[i + 1])`` in km."""

    edges: tuple[float, ...]

    def __post_init__(self):
        if len(self.edges) < 2:
            raise ValueError("DistanceBins need at least two edges")
        if any(e < 0 for e in self.edges):
            raise ValueError("DistanceBins edges must not be negative")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("DistanceBins edges must be strictly ascending")

    @classmethod
    def timing(cls) -> DistanceBins:
        """Bins used for the commute timing distributions."""
        return cls(TIMING_BIN_EDGES)

    @classmethod
    def duration(cls) -> DistanceBins:
        """Bins used for the commute duration distributions."""
        return cls(DURATION_BIN_EDGES)

    @classmethod
    def preset(cls, name: str) -> DistanceBins:
        """Look up a preset by name (``timing`` or ``duration``)."""
        if name == "timing":
            return cls.timing()
        if name == "duration":
            return cls.duration()
        raise ValueError(f"Unknown distance bin preset: {name}")

    def __len__(self):
        return len(self.edges) - 1

    def bounds(self, index: int) -> tuple[float, float]:
        """Lower and upper edge of a bin."""
        return self.edges[index], self.edges[index + 1]

    def label(self, index: int) -> str:
        """File-name friendly label such as ``2.5-5``."""
        lo, hi = self.bounds(index)
        return f"{lo:g}-{hi:g}"

    def index(self, distance_km: float | None) -> int | None:
        """Bin index of a distance, or ``None`` outside every bin."""
        if distance_km is None:
            return None
        for i in range(len(self)):
            lo, hi = self.bounds(i)
            if lo <= distance_km < hi:
                return i
        return None


@dataclass(frozen=True, slots=True)
class BinSummary:
    """Mean commute duration of one distance bin."""

    lo: float
    hi: float
    n: int
    mean: float | None = None
    stderr: float | None = None


@dataclass(frozen=True, slots=True)
class BinDurations:
    """Summary, duration histogram and duration CDF of one distance bin."""

    summary: BinSummary
    histogram: Histogram
    cdf: EmpiricalCdf


@dataclass(frozen=True, slots=True)
class GaussianFit:
    """Moments of a time-of-day sample restricted to a fit window (minutes)."""

    mu: float
    sigma: float
    fit_window: tuple[float, float]
    n: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("GaussianFit sigma must be positive")


@dataclass(frozen=True, slots=True)
class SpearmanResult:
    """Spearman rank correlation test result."""

    rho: float
    p_value: float
    n: int
    method: str


@dataclass(frozen=True, slots=True)
class KsResult:
    """Two-sample Kolmogorov-Smirnov test result."""

    d_statistic: float
    p_value: float
    n1: int
    n2: int


@dataclass(frozen=True, slots=True)
class Agent:
    """A synthetic commuter."""

    agent_id: str
    home: LocationId
    work: LocationId
    distance_km: float
    call_rate: float
    depart_mu: float
    return_mu: float
    secondary: tuple[LocationId, ...] = ()
    secondary_weights: tuple[float, ...] = ()


@dataclass(frozen=True, slots=True)
class Movement:
    """A straight-line move between two locations over ``[start, end)``."""

    start: datetime
    end: datetime
    origin: LocationId
    destination: LocationId

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("Movement start must precede end")

    def fraction(self, ts: datetime) -> float:
        """Share of the move completed at ``ts``, clipped to ``[0, 1]``."""
        done = (ts - self.start) / (self.end - self.start)
        return min(1.0, max(0.0, done))


@dataclass(frozen=True, slots=True)
class TripTruth:
    """A synthetic agent's true commute leg on one day."""

    agent_id: str
    day: date
    leg: Leg
    depart: datetime
    arrive: datetime

    @property
    def duration(self) -> float:
        """True travel duration in minutes."""
        return (self.arrive - self.depart).total_seconds() / 60.0


@dataclass(frozen=True, slots=True)
class AgentTruth:
    """Ground truth of one synthetic agent."""

    agent_id: str
    home: LocationId
    work: LocationId
    distance_km: float


@dataclass(frozen=True)
class GroundTruth:
    """Everything a synthetic world knows that the pipeline must infer."""

    agents: Mapping[str, AgentTruth]
    trips: tuple[TripTruth, ...] = ()
    _index: dict[tuple[str, date, str], TripTruth] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        index = {(t.agent_id, t.day, t.leg): t for t in self.trips}
        object.__setattr__(self, "_index", index)

    def trip(self, agent_id: str, day: date, leg: Leg) -> TripTruth | None:
        """Look up one agent's true commute leg."""
        return self._index.get((agent_id, day, leg))


@dataclass(frozen=True, slots=True)
class StageCount:
    """Survivors of one pipeline stage."""

    name: str
    users: int
    rows: int
    seconds: float


@dataclass
class RunReport:
    """Stage-survival accounting of one pipeline run."""

    mode: str
    parse: ParseReport = field(default_factory=ParseReport)
    stages: list[StageCount] = field(default_factory=list)
    identified_fraction: float = 0.0
    sampled_fraction: float = 0.0
    empty: bool = False
    notes: list[str] = field(default_factory=list)

    def add_stage(self, name: str, users: int, rows: int, seconds: float) -> None:
        """Append a stage, refusing any increase in surviving users."""
        if self.stages and users > self.stages[-1].users:
            raise ValueError(
                f"Stage {name} reports more users than stage {self.stages[-1].name}"
            )
        self.stages.append(StageCount(name, users, rows, seconds))

    def stage(self, name: str) -> StageCount | None:
        """Look up a stage by name."""
        for stage in self.stages:
            if stage.name == name:
                return stage
        return None

    def to_dict(self, timings: bool = False) -> dict[str, Any]:
        """Return a dictionary representation of the report.

        :param timings: (:code:`bool`) - Include wall-clock seconds per stage,
            which differ from run to run
        """
        stages: list[dict[str, Any]] = []
        for s in self.stages:
            stage: dict[str, Any] = {"name": s.name, "users": s.users, "rows": s.rows}
            if timings:
                stage["seconds"] = round(s.seconds, 6)
            stages.append(stage)

        return {
            "mode": self.mode,
            "empty": self.empty,
            "parse": self.parse.to_dict(),
            "stages": stages,
            "identified_fraction": self.identified_fraction,
            "sampled_fraction": self.sampled_fraction,
            "notes": list(self.notes),
        }


@dataclass
class RecoveryReport:
    """How well a pipeline run recovered a synthetic world's ground truth."""

    n_agents: int = 0
    n_assigned: int = 0
    home_recovered: int = 0
    work_recovered: int = 0
    distance_mae_km: float | None = None
    n_samples: int = 0
    overestimates: list[float] = field(default_factory=list)
    #: Overestimates of samples flagged as implausible evening arrivals
    flagged_overestimates: list[float] = field(default_factory=list)
    eligibility: dict[str, str] = field(default_factory=dict)

    @property
    def home_recovery_rate(self) -> float:
        """Exact home tower matches among assigned agents."""
        return self.home_recovered / self.n_assigned if self.n_assigned else 0.0

    @property
    def work_recovery_rate(self) -> float:
        """Exact work tower matches among assigned agents."""
        return self.work_recovered / self.n_assigned if self.n_assigned else 0.0

    @property
    def violations(self) -> int:
        """Unflagged samples whose proxy duration undercuts the true duration."""
        return sum(1 for o in self.overestimates if o < 0)

    @property
    def flagged_violations(self) -> int:
        """Flagged samples whose proxy duration undercuts the true duration."""
        return sum(1 for o in self.flagged_overestimates if o < 0)

    @property
    def mean_overestimate(self) -> float | None:
        """Mean of proxy minus true duration over every scored sample, in minutes."""
        scored = self.overestimates + self.flagged_overestimates
        if not scored:
            return None
        return sum(scored) / len(scored)

    def eligibility_counts(self) -> dict[str, int]:
        """How many agents ended at each pipeline stage."""
        counts: dict[str, int] = {}
        for stage in self.eligibility.values():
            counts[stage] = counts.get(stage, 0) + 1
        return dict(sorted(counts.items()))

    def to_dict(self) -> dict[str, Any]:
        """Return a dictionary representation of the report."""
        return {
            "n_agents": self.n_agents,
            "n_assigned": self.n_assigned,
            "home_recovery_rate": self.home_recovery_rate,
            "work_recovery_rate": self.work_recovery_rate,
            "distance_mae_km": self.distance_mae_km,
            "n_samples": self.n_samples,
            "violations": self.violations,
            "flagged_samples": len(self.flagged_overestimates),
            "flagged_violations": self.flagged_violations,
            "mean_overestimate_minutes": self.mean_overestimate,
            "eligibility": self.eligibility_counts(),
        }
