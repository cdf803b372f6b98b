"""Synthetic commuter worlds with full ground truth.

A world is a set of towers spread uniformly over a square region and a
population of agents who commute between a home and a work tower on workdays,
make Zipf-distributed side visits and now and then go out at night.  Calls
follow a Poisson process per agent; in the ``car_only`` regime every move also
leaves a GPS trace.

Randomness is split per concern and per agent from one seed, so an agent's
schedule and calls never depend on how many other agents exist.
"""

from __future__ import annotations

import csv
import logging
import math
from bisect import bisect_right
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from pathlib import Path

import numpy as np

from cdrcommute.config import WorldConfig
from cdrcommute.constants import WEEKDAYS
from cdrcommute.exceptions import DataError, WorldConfigError
from cdrcommute.geo import (
    CDR_HEADER,
    GPS_HEADER,
    REGISTRY_HEADER,
    LocationTree,
    haversine_km,
    haversine_km_array,
    project_local,
    unproject_local,
)
from cdrcommute.objects import (
    Agent,
    AgentTruth,
    CallEvent,
    CommuteSample,
    GpsPoint,
    GroundTruth,
    HomeWorkAssignment,
    Movement,
    RecoveryReport,
    TowerRegistry,
    TripTruth,
)
from cdrcommute.types import LatLon, Leg, LocationId
from cdrcommute.utils import format_timestamp, minutes_of_day, write_csv

log = logging.getLogger(__name__)

GROUND_TRUTH_HEADER = (
    "agent_id",
    "home_id",
    "work_id",
    "distance_km",
    "day",
    "leg",
    "depart",
    "arrive",
)

# Clock limits of the daily schedule, in minutes since midnight
DEPART_MU_RANGE = (360.0, 600.0)
RETURN_MU_RANGE = (960.0, 1170.0)
DEPARTURE_RANGE = (330.0, 630.0)
MORNING_ARRIVAL_LIMIT = 710.0
LUNCH_LEAVE_RANGE = (720.0, 750.0)
LUNCH_STAY_MINUTES = 30.0
EARLIEST_RETURN = 930.0
LATEST_RETURN = 1260.0
LAST_ARRIVAL = 1435.0
EXCURSION_LEAVE_RANGE = (1230.0, 1290.0)
EXCURSION_STAY_RANGE = (30.0, 60.0)
WEEKEND_LEAVE_RANGE = (840.0, 1020.0)
WEEKEND_STAY_MINUTES = 60.0

# Travel time bounds in minutes
MIN_COMMUTE_MINUTES = 10.0
MAX_COMMUTE_MINUTES = 240.0
SIDE_TRAVEL_RANGE = (5.0, 30.0)

# Candidate towers fetched per nearest-neighbour query when stamping transit
TRANSIT_QUERY_K = 16

# Attempts at drawing a home with a work tower far enough away
HOME_DRAW_ATTEMPTS = 100


def _seed_streams(seed: int) -> tuple[np.random.SeedSequence, ...]:
    """Independent seed streams for towers, agents and calls."""
    return tuple(np.random.SeedSequence(seed).spawn(3))


def _midnight(day: date) -> datetime:
    return datetime.combine(day, time())


def _at(day: date, minutes: float) -> datetime:
    """A whole-second instant ``minutes`` after midnight of ``day``."""
    return _midnight(day) + timedelta(seconds=round(minutes * 60))


def _span(minutes: float) -> timedelta:
    """A whole-second, strictly positive duration."""
    return timedelta(seconds=max(1, round(minutes * 60)))


class Timeline:
    """Where one agent is at any instant.

    The agent starts at home and is at the destination of its latest finished
    movement; during a movement it is in transit.
    """

    def __init__(self, home: LocationId, movements: Sequence[Movement]):
        """Initialize a timeline.

        :param home: (:code:`str`) - Location before the first movement
        :param movements: Non-overlapping movements in time order
        """
        for a, b in zip(movements, movements[1:]):
            if b.start < a.end or b.origin != a.destination:
                raise ValueError("Movements must be sequential and connected")

        self.home = home
        self.movements = tuple(movements)
        self._starts = [m.start for m in self.movements]

    def __len__(self):
        return len(self.movements)

    def at(self, ts: datetime) -> LocationId | Movement:
        """The location at ``ts``, or the movement under way."""
        i = bisect_right(self._starts, ts) - 1
        if i < 0:
            return self.home
        movement = self.movements[i]
        return movement if ts < movement.end else movement.destination


@dataclass(frozen=True)
class World:
    """Towers, agents, their schedules and the ground truth of a world."""

    config: WorldConfig
    registry: TowerRegistry
    agents: tuple[Agent, ...]
    timelines: Mapping[str, Timeline]
    truth: GroundTruth

    def location_at(self, agent_id: str, ts: datetime) -> LocationId | Movement:
        """Where an agent is at an instant (a movement while in transit)."""
        return self.timelines[agent_id].at(ts)


def place_towers(cfg: WorldConfig, rng: np.random.Generator) -> TowerRegistry:
    """Spread ``n_towers`` uniformly over the region square.

    The square's south-west corner sits at the configured anchor.
    """
    anchor = (cfg.anchor_lat, cfg.anchor_lon)
    offsets = rng.uniform(0.0, cfg.region_km, size=(cfg.n_towers, 2))
    width = max(4, len(str(cfg.n_towers - 1)))

    return TowerRegistry(
        {
            f"T{i:0{width}d}": unproject_local((float(east), float(north)), anchor)
            for i, (east, north) in enumerate(offsets)
        }
    )


class _TowerTable:
    """Tower ids and coordinates as parallel arrays."""

    def __init__(self, registry: TowerRegistry):
        self.ids = list(registry)
        self.index = {t: i for i, t in enumerate(self.ids)}
        coords = np.array([registry.coordinates(t) for t in self.ids])
        self.lats = coords[:, 0]
        self.lons = coords[:, 1]

    def distances_from(self, tower: LocationId) -> np.ndarray:
        i = self.index[tower]
        return haversine_km_array(self.lats, self.lons, self.lats[i], self.lons[i])


def _draw_home_work(
    table: _TowerTable, cfg: WorldConfig, rng: np.random.Generator
) -> tuple[LocationId, LocationId]:
    for _ in range(HOME_DRAW_ATTEMPTS):
        home = table.ids[int(rng.integers(len(table.ids)))]
        candidates = np.flatnonzero(
            table.distances_from(home) >= cfg.min_home_work_km
        )
        if len(candidates):
            return home, table.ids[int(rng.choice(candidates))]

    raise WorldConfigError(
        f"region too small to place home and work {cfg.min_home_work_km} km apart"
    )


def _draw_secondary(
    table: _TowerTable,
    home: LocationId,
    work: LocationId,
    cfg: WorldConfig,
    rng: np.random.Generator,
) -> tuple[tuple[LocationId, ...], tuple[float, ...]]:
    far = (table.distances_from(home) > cfg.handover_exclusion_km) & (
        table.distances_from(work) > cfg.handover_exclusion_km
    )
    candidates = np.flatnonzero(far)
    count = min(cfg.n_secondary, len(candidates))
    if not count:
        return (), ()

    chosen = rng.choice(candidates, size=count, replace=False)
    weights = 1.0 / np.arange(1, count + 1) ** cfg.zipf_exponent
    weights /= weights.sum()

    return (
        tuple(table.ids[int(i)] for i in chosen),
        tuple(float(w) for w in weights),
    )


def _make_agent(
    agent_id: str,
    table: _TowerTable,
    registry: TowerRegistry,
    cfg: WorldConfig,
    rng: np.random.Generator,
) -> Agent:
    """Draw one agent's home, work, side places, call rate and habits."""
    home, work = _draw_home_work(table, cfg, rng)
    secondary, weights = _draw_secondary(table, home, work, cfg, rng)
    call_rate = float(rng.uniform(cfg.call_rate_min, cfg.call_rate_max))

    depart_mean = minutes_of_day(cfg.depart_mean)
    shift = float(rng.normal(0.0, cfg.depart_agent_jitter_minutes))
    depart_mu = float(np.clip(depart_mean + shift, *DEPART_MU_RANGE))
    return_mu = float(
        np.clip(
            minutes_of_day(cfg.return_mean) + depart_mu - depart_mean,
            *RETURN_MU_RANGE,
        )
    )

    return Agent(
        agent_id,
        home,
        work,
        haversine_km(registry.coordinates(home), registry.coordinates(work)),
        call_rate,
        depart_mu,
        return_mu,
        secondary,
        weights,
    )


class _Scheduler:
    """Builds one agent's day-by-day movements."""

    def __init__(
        self,
        agent: Agent,
        registry: TowerRegistry,
        cfg: WorldConfig,
        rng: np.random.Generator,
    ):
        self.agent = agent
        self.registry = registry
        self.cfg = cfg
        self.rng = rng
        self.movements: list[Movement] = []
        self.trips: list[TripTruth] = []

    def commute_minutes(self) -> float:
        if self.cfg.regime == "car_only":
            return self.agent.distance_km / self.cfg.speed_kmh * 60.0
        return max(
            MIN_COMMUTE_MINUTES,
            float(
                self.rng.normal(
                    self.cfg.target_commute_minutes, self.cfg.commute_jitter_minutes
                )
            ),
        )

    def side_minutes(self, a: LocationId, b: LocationId) -> float:
        km = haversine_km(self.registry.coordinates(a), self.registry.coordinates(b))
        return float(np.clip(km / self.cfg.speed_kmh * 60.0, *SIDE_TRAVEL_RANGE))

    def pick_secondary(self) -> LocationId | None:
        if not self.agent.secondary:
            return None
        choice = self.rng.choice(
            len(self.agent.secondary), p=self.agent.secondary_weights
        )
        return self.agent.secondary[int(choice)]

    def move(
        self, start: datetime, minutes: float, origin: LocationId, to: LocationId
    ) -> Movement:
        movement = Movement(start, start + _span(minutes), origin, to)
        self.movements.append(movement)
        return movement

    def side_trip(
        self, day: date, base: LocationId, leave: float, stay: float
    ) -> datetime | None:
        """Visit a secondary place and come back, returning the time back."""
        place = self.pick_secondary()
        if place is None:
            return None
        travel = self.side_minutes(base, place)
        there = self.move(_at(day, leave), travel, base, place)
        back = self.move(there.end + _span(stay), travel, place, base)
        return back.end

    def workday(self, day: date) -> None:
        agent, cfg, rng = self.agent, self.cfg, self.rng

        depart = float(
            np.clip(
                rng.normal(agent.depart_mu, cfg.depart_day_jitter_minutes),
                *DEPARTURE_RANGE,
            )
        )
        travel = self.commute_minutes()
        depart = min(depart, MORNING_ARRIVAL_LIMIT - travel)
        morning = self.move(_at(day, depart), travel, agent.home, agent.work)
        self.trips.append(
            TripTruth(agent.agent_id, day, "morning", morning.start, morning.end)
        )

        free_at = morning.end
        if rng.random() < cfg.side_visit_probability:
            back = self.side_trip(
                day, agent.work, rng.uniform(*LUNCH_LEAVE_RANGE), LUNCH_STAY_MINUTES
            )
            free_at = back or free_at

        earliest = max(EARLIEST_RETURN, minutes_of_day(free_at) + 30.0)
        depart = float(
            np.clip(
                rng.normal(agent.return_mu, cfg.depart_day_jitter_minutes),
                earliest,
                LATEST_RETURN,
            )
        )
        travel = self.commute_minutes()
        depart = min(depart, LAST_ARRIVAL - travel)
        evening = self.move(_at(day, depart), travel, agent.work, agent.home)
        self.trips.append(
            TripTruth(agent.agent_id, day, "evening", evening.start, evening.end)
        )

        if (
            rng.random() < cfg.night_excursion_probability
            and minutes_of_day(evening.end) < EXCURSION_LEAVE_RANGE[0]
        ):
            self.side_trip(
                day,
                agent.home,
                rng.uniform(*EXCURSION_LEAVE_RANGE),
                rng.uniform(*EXCURSION_STAY_RANGE),
            )

    def rest_day(self, day: date) -> None:
        if self.rng.random() < self.cfg.side_visit_probability:
            self.side_trip(
                day,
                self.agent.home,
                self.rng.uniform(*WEEKEND_LEAVE_RANGE),
                WEEKEND_STAY_MINUTES,
            )


def schedule_agent(
    agent: Agent,
    registry: TowerRegistry,
    cfg: WorldConfig,
    rng: np.random.Generator,
) -> tuple[Timeline, list[TripTruth]]:
    """Lay out every movement of one agent over the simulated days.

    :return: the agent's timeline and its true commute legs
    """
    scheduler = _Scheduler(agent, registry, cfg, rng)

    for offset in range(cfg.days):
        day = cfg.start_date + timedelta(days=offset)
        if WEEKDAYS[day.weekday()] in cfg.weekdays:
            scheduler.workday(day)
        else:
            scheduler.rest_day(day)

    return Timeline(agent.home, scheduler.movements), scheduler.trips


def _check_feasible(cfg: WorldConfig) -> None:
    diagonal = cfg.region_km * math.sqrt(2)
    if diagonal < cfg.min_home_work_km:
        raise WorldConfigError(
            f"region too small to place home and work {cfg.min_home_work_km} km "
            "apart"
        )
    longest = diagonal / cfg.speed_kmh * 60.0
    if cfg.regime == "car_only" and longest > MAX_COMMUTE_MINUTES:
        raise WorldConfigError(
            f"car_only commutes across a {cfg.region_km} km region at "
            f"{cfg.speed_kmh} km/h do not fit in one day"
        )


def generate_world(cfg: WorldConfig) -> World:
    """Generate towers, agents, schedules and ground truth.

    The same config always yields the same world.

    :param cfg: (:class:`cdrcommute.config.WorldConfig`) - World parameters
    :return: :class:`World`
    :raises WorldConfigError: if home and work cannot be placed far enough
        apart, or car commutes cannot fit in a day
    """
    _check_feasible(cfg)

    tower_seq, agent_seq, _ = _seed_streams(cfg.seed)
    registry = place_towers(cfg, np.random.default_rng(tower_seq))
    table = _TowerTable(registry)

    agents: list[Agent] = []
    timelines: dict[str, Timeline] = {}
    truths: dict[str, AgentTruth] = {}
    trips: list[TripTruth] = []
    width = max(5, len(str(cfg.n_agents - 1)))

    for i, seq in enumerate(agent_seq.spawn(cfg.n_agents)):
        rng = np.random.default_rng(seq)
        agent = _make_agent(f"u{i:0{width}d}", table, registry, cfg, rng)
        timeline, agent_trips = schedule_agent(agent, registry, cfg, rng)

        agents.append(agent)
        timelines[agent.agent_id] = timeline
        truths[agent.agent_id] = AgentTruth(
            agent.agent_id, agent.home, agent.work, agent.distance_km
        )
        trips.extend(agent_trips)

    log.info(
        "Generated world: %d towers, %d agents, %d commute legs",
        len(registry),
        len(agents),
        len(trips),
    )

    truth = GroundTruth(truths, tuple(trips))
    return World(cfg, registry, tuple(agents), timelines, truth)


def _interpolate(a: LatLon, b: LatLon, fraction: float) -> LatLon:
    east, north = project_local(b, a)
    return unproject_local((east * fraction, north * fraction), a)


class TransitStamper:
    """Picks the tower that records a call made while moving.

    The tower is the one nearest the agent's interpolated position among those
    farther than ``handover_exclusion_km`` from both ends of the move.  Only if
    no tower qualifies does the nearer end stand in.
    """

    def __init__(self, registry: TowerRegistry, exclusion_km: float):
        """Initialize the stamper.

        :param registry: (:class:`cdrcommute.objects.TowerRegistry`) - Towers
        :param exclusion_km: (:code:`float`) - Minimum distance from both ends
        """
        self.registry = registry
        self.exclusion_km = exclusion_km
        self.tree = LocationTree(registry)
        self.table = _TowerTable(registry)
        self._allowed: dict[tuple[LocationId, LocationId], np.ndarray] = {}

    def allowed(self, origin: LocationId, destination: LocationId) -> np.ndarray:
        key = (origin, destination)
        if key not in self._allowed:
            self._allowed[key] = (
                self.table.distances_from(origin) > self.exclusion_km
            ) & (self.table.distances_from(destination) > self.exclusion_km)
        return self._allowed[key]

    def tower(self, movement: Movement, ts: datetime) -> LocationId:
        """Tower recording a call at ``ts`` during ``movement``."""
        a = self.registry.coordinates(movement.origin)
        b = self.registry.coordinates(movement.destination)
        fraction = movement.fraction(ts)
        point = _interpolate(a, b, fraction)
        allowed = self.allowed(movement.origin, movement.destination)

        for tower, _ in self.tree.nearest(point, TRANSIT_QUERY_K):
            if allowed[self.table.index[tower]]:
                return tower

        if allowed.any():
            distances = haversine_km_array(
                self.table.lats, self.table.lons, point[0], point[1]
            )
            distances[~allowed] = np.inf
            return self.table.ids[int(np.argmin(distances))]

        return movement.origin if fraction < 0.5 else movement.destination


def agent_calls(
    agent: Agent,
    timeline: Timeline,
    cfg: WorldConfig,
    stamper: TransitStamper,
    rng: np.random.Generator,
) -> list[CallEvent]:
    """Poisson calls of one agent, each stamped with the tower it reaches."""
    horizon = cfg.days * 86400
    count = int(rng.poisson(agent.call_rate * cfg.days * 24))
    offsets = np.sort(np.floor(rng.uniform(0.0, horizon, size=count)))
    start = _midnight(cfg.start_date)

    calls: list[CallEvent] = []
    for offset in offsets:
        ts = start + timedelta(seconds=int(offset))
        where = timeline.at(ts)
        tower = stamper.tower(where, ts) if isinstance(where, Movement) else where
        calls.append(CallEvent(agent.agent_id, ts, tower))

    return calls


def movement_trace(
    agent_id: str, movement: Movement, registry: TowerRegistry, interval: int
) -> list[GpsPoint]:
    """GPS fixes every ``interval`` seconds along a move, ending at its end."""
    a = registry.coordinates(movement.origin)
    b = registry.coordinates(movement.destination)
    step = timedelta(seconds=interval)

    points: list[GpsPoint] = []
    ts = movement.start
    while ts < movement.end:
        lat, lon = _interpolate(a, b, movement.fraction(ts))
        points.append(GpsPoint(agent_id, ts, lat, lon))
        ts += step
    points.append(GpsPoint(agent_id, movement.end, b[0], b[1]))

    return points


def simulate_calls(world: World) -> tuple[list[CallEvent], list[GpsPoint]]:
    """Simulate every agent's calls, plus GPS traces in the ``car_only`` regime.

    Calls are grouped by agent and time-sorted within each agent.

    :param world: (:class:`World`) - A generated world
    :return: calls and GPS points (empty unless ``car_only``)
    """
    cfg = world.config
    _, _, call_seq = _seed_streams(cfg.seed)
    stamper = TransitStamper(world.registry, cfg.handover_exclusion_km)

    calls: list[CallEvent] = []
    gps: list[GpsPoint] = []

    for agent, seq in zip(world.agents, call_seq.spawn(len(world.agents))):
        timeline = world.timelines[agent.agent_id]
        calls.extend(
            agent_calls(agent, timeline, cfg, stamper, np.random.default_rng(seq))
        )
        if cfg.regime == "car_only":
            for movement in timeline.movements:
                gps.extend(
                    movement_trace(
                        agent.agent_id,
                        movement,
                        world.registry,
                        cfg.gps_interval_seconds,
                    )
                )

    log.info("Simulated %d calls and %d GPS fixes", len(calls), len(gps))

    return calls, gps


def write_world(
    world: World,
    calls: Iterable[CallEvent],
    gps: Sequence[GpsPoint],
    outdir: Path,
) -> list[Path]:
    """Write a world in the formats the analysis reads.

    Produces ``towers.csv``, ``calls.csv``, ``ground_truth.csv``,
    ``world.conf`` and, when there are fixes, ``gps.csv``.

    :return: the files written
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, header: Sequence[str], rows: Iterable) -> None:
        path = outdir / name
        count = write_csv(path, header, rows)
        log.info("Wrote %d rows to %s", count, path)
        written.append(path)

    emit(
        "towers.csv",
        REGISTRY_HEADER,
        ((t, lat, lon) for t, (lat, lon) in world.registry.items()),
    )
    emit(
        "calls.csv",
        CDR_HEADER,
        ((c.user_id, format_timestamp(c.timestamp), c.tower_id) for c in calls),
    )
    if gps:
        emit(
            "gps.csv",
            GPS_HEADER,
            (
                (p.vehicle_id, format_timestamp(p.timestamp), p.latitude, p.longitude)
                for p in gps
            ),
        )
    emit("ground_truth.csv", GROUND_TRUTH_HEADER, _truth_rows(world.truth))

    conf = outdir / "world.conf"
    conf.write_text(world.config.to_text(), encoding="utf-8")
    written.append(conf)

    return written


def _truth_rows(truth: GroundTruth) -> Iterable[tuple]:
    for a in truth.agents.values():
        yield (a.agent_id, a.home, a.work, a.distance_km, None, None, None, None)
    for t in truth.trips:
        yield (
            t.agent_id,
            None,
            None,
            None,
            t.day.isoformat(),
            t.leg,
            format_timestamp(t.depart),
            format_timestamp(t.arrive),
        )


def load_ground_truth(path: Path) -> GroundTruth:
    """Read a ``ground_truth.csv`` written by :func:`write_world`.

    :raises DataError: on a malformed file
    """
    agents: dict[str, AgentTruth] = {}
    trips: list[TripTruth] = []

    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != GROUND_TRUTH_HEADER:
            raise DataError(f"Unexpected ground truth header in {path}")

        for row in reader:
            try:
                if row["day"]:
                    trips.append(
                        TripTruth(
                            row["agent_id"],
                            date.fromisoformat(row["day"]),
                            _leg(row["leg"]),
                            datetime.fromisoformat(row["depart"]),
                            datetime.fromisoformat(row["arrive"]),
                        )
                    )
                else:
                    agents[row["agent_id"]] = AgentTruth(
                        row["agent_id"],
                        row["home_id"],
                        row["work_id"],
                        float(row["distance_km"]),
                    )
            except (KeyError, TypeError, ValueError) as err:
                raise DataError(
                    f"Malformed ground truth row at line {reader.line_num}: {err}"
                ) from err

    return GroundTruth(agents, tuple(trips))


def _leg(value: str) -> Leg:
    if value == "morning":
        return "morning"
    if value == "evening":
        return "evening"
    raise ValueError(f"unknown leg {value!r}")


LocationMatcher = Callable[[LocationId, LocationId], bool]


def _same_location(inferred: LocationId, true: LocationId) -> bool:
    return inferred == true


def evaluate_recovery(
    truth: GroundTruth,
    assignments: Iterable[HomeWorkAssignment],
    distances: Mapping[str, float],
    samples: Iterable[CommuteSample],
    eligibility: Mapping[str, str],
    matches: LocationMatcher = _same_location,
    exclude_implausible: bool = False,
) -> RecoveryReport:
    """Score a pipeline run against the world it was run on.

    Duration overestimates are only collected for agents whose home and work
    were both recovered, as proxy minus true duration in minutes.  Samples
    flagged implausible are kept apart in ``flagged_overestimates``, or skipped
    with ``exclude_implausible``.

    :param truth: (:class:`cdrcommute.objects.GroundTruth`) - The oracle
    :param assignments: Inferred home/work per user
    :param distances: Inferred commute distance per user
    :param samples: Commute samples from the run
    :param eligibility: Last pipeline stage reached per user
    :param matches: Decides whether an inferred location is a true one,
        defaults to exact id equality
    :param exclude_implausible: (:code:`bool`) - Skip flagged samples
    :return: :class:`cdrcommute.objects.RecoveryReport`
    """
    report = RecoveryReport(n_agents=len(truth.agents))
    recovered: set[str] = set()
    errors: list[float] = []

    for a in assignments:
        agent = truth.agents.get(a.user_id)
        if agent is None:
            continue
        report.n_assigned += 1
        home_ok = matches(a.home, agent.home)
        work_ok = matches(a.work, agent.work)
        report.home_recovered += home_ok
        report.work_recovered += work_ok
        if home_ok and work_ok:
            recovered.add(a.user_id)

    for user_id, km in distances.items():
        if user_id in truth.agents:
            errors.append(abs(km - truth.agents[user_id].distance_km))
    if errors:
        report.distance_mae_km = float(np.mean(errors))

    for sample in samples:
        if sample.user_id not in recovered:
            continue
        if sample.implausible and exclude_implausible:
            continue
        trip = truth.trip(sample.user_id, sample.day, sample.leg)
        if trip is None:
            continue
        report.n_samples += 1
        if sample.implausible:
            report.flagged_overestimates.append(sample.duration - trip.duration)
        else:
            report.overestimates.append(sample.duration - trip.duration)

    report.eligibility = {
        agent_id: eligibility.get(agent_id, "no_events") for agent_id in truth.agents
    }

    log.info(
        "Recovered home for %d and work for %d of %d assigned agents",
        report.home_recovered,
        report.work_recovered,
        report.n_assigned,
    )

    return report
