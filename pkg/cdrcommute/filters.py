"""Pre-analysis cleaning rules.

Every function here works on one user (or vehicle) at a time, except
:func:`sparse_tower_screen` which needs the whole population.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from typing import TypeVar

from cdrcommute.config import FilterConfig
from cdrcommute.geo import haversine_km, nearest_neighbor_km
from cdrcommute.objects import (
    DwellInterval,
    GpsPoint,
    Sample,
    SampledTrack,
    SparseScreenResult,
    SpeedScreenResult,
    TowerRegistry,
)
from cdrcommute.types import LocationId, Observation
from cdrcommute.utils import ceil_to_interval, floor_to_interval

log = logging.getLogger(__name__)

ObservationT = TypeVar("ObservationT", bound=Observation)


def split_on_gaps(
    events: Sequence[Observation], cfg: FilterConfig
) -> list[list[Observation]]:
    """Split a time-sorted sequence at silences of ``max_gap`` or more.

    Resampled input is also split wherever its segment number changes.
    """
    segments: list[list[Observation]] = []
    max_gap = cfg.max_gap_delta

    for event in events:
        if segments:
            previous = segments[-1][-1]
            same_segment = getattr(previous, "segment", 0) == getattr(
                event, "segment", 0
            )
            if same_segment and event.timestamp - previous.timestamp < max_gap:
                segments[-1].append(event)
                continue
        segments.append([event])

    return segments


def resample_uniform(
    events: Sequence[Observation], cfg: FilterConfig, user_id: str | None = None
) -> SampledTrack:
    """Resample a user's observations onto the ``resample_interval`` lattice.

    The lattice is fixed relative to the epoch, so resampling a resampled track
    is a no-op.  Each tick carries the location of the latest observation at
    or before it; the opening tick of a segment carries the segment's first
    observation.  Silences of ``max_gap`` or more end a segment and no ticks
    are produced across them.

    :param events: Time-sorted observations of one user
    :param cfg: (:class:`cdrcommute.config.FilterConfig`) - Filter thresholds
    :param user_id: (:code:`str`) - Owner of the track, defaults to the
        ``user_id`` of the first event
    :return: :class:`cdrcommute.objects.SampledTrack`
    """
    if user_id is None:
        user_id = getattr(events[0], "user_id", "") if events else ""

    step = cfg.resample_step
    samples: list[Sample] = []

    for segment, group in enumerate(split_on_gaps(events, cfg)):
        tick = floor_to_interval(group[0].timestamp, step)
        last_tick = ceil_to_interval(group[-1].timestamp, step)
        location = group[0].location_id
        i = 0

        while tick <= last_tick:
            while i < len(group) and group[i].timestamp <= tick:
                location = group[i].location_id
                i += 1
            samples.append(Sample(tick, location, segment))
            tick += step

    return SampledTrack(user_id, tuple(samples))


def spatial_noise_filter(
    track: SampledTrack, registry: TowerRegistry, cfg: FilterConfig
) -> SampledTrack:
    """Suppress location jitter with a sticky anchor.

    A sample within ``spatial_radius`` km of the held anchor (inclusive) is
    rewritten to the anchor; a sample farther away becomes the new anchor.

    :param track: (:class:`cdrcommute.objects.SampledTrack`) - Resampled track
    :param registry: (:class:`cdrcommute.objects.TowerRegistry`) - Coordinates
        of every location in the track
    :param cfg: (:class:`cdrcommute.config.FilterConfig`) - Filter thresholds
    :return: :class:`cdrcommute.objects.SampledTrack` with the same ticks
    """
    anchor: LocationId | None = None
    distances: dict[tuple[LocationId, LocationId], float] = {}
    samples: list[Sample] = []

    for sample in track.samples:
        location = sample.location_id

        if anchor is not None and location != anchor:
            key = (anchor, location)
            if key not in distances:
                distances[key] = haversine_km(
                    registry.coordinates(anchor), registry.coordinates(location)
                )
            if distances[key] <= cfg.spatial_radius:
                location = anchor

        anchor = location
        samples.append(Sample(sample.timestamp, location, sample.segment))

    return SampledTrack(track.user_id, tuple(samples))


def speed_screen(points: Sequence[GpsPoint], cfg: FilterConfig) -> SpeedScreenResult:
    """Decide whether a vehicle trace is physically plausible.

    Consecutive fixes closer in time than ``min_segment_seconds`` are ignored,
    except that two distinct positions at the same instant always fail.  Any
    pair reaching ``speed_limit`` discards the whole trace.

    :param points: Time-sorted fixes of one vehicle
    :param cfg: (:class:`cdrcommute.config.FilterConfig`) - Filter thresholds
    :return: :class:`cdrcommute.objects.SpeedScreenResult`
    """
    for a, b in zip(points, points[1:]):
        seconds = (b.timestamp - a.timestamp).total_seconds()

        if seconds == 0:
            if a.position != b.position:
                log.debug("Vehicle %s jumps at %s", a.vehicle_id, a.timestamp)
                return SpeedScreenResult(
                    False, "duplicate timestamp", (a, b), math.inf
                )
            continue

        if seconds < cfg.min_segment_seconds:
            continue

        speed = haversine_km(a.position, b.position) / (seconds / 3600.0)
        if speed >= cfg.speed_limit:
            log.debug(
                "Vehicle %s reaches %.1f km/h at %s", a.vehicle_id, speed, a.timestamp
            )
            return SpeedScreenResult(False, "speed limit", (a, b), speed)

    return SpeedScreenResult(True)


def calendar_filter(
    events: Iterable[ObservationT], cfg: FilterConfig
) -> list[ObservationT]:
    """Drop events that fall on an excluded weekday, preserving order."""
    excluded = cfg.excluded_weekday_numbers
    return [e for e in events if e.timestamp.weekday() not in excluded]


def gap_segmenter(
    events: Sequence[Observation], cfg: FilterConfig
) -> list[DwellInterval]:
    """Turn consecutive observations into dwell intervals.

    A pair closer than ``max_gap`` yields ``[t_i, t_i+1)`` at the earlier
    observation's location.  Longer silences (and simultaneous observations)
    yield nothing.
    """
    max_gap = cfg.max_gap_delta
    intervals: list[DwellInterval] = []

    for a, b in zip(events, events[1:]):
        if a.timestamp < b.timestamp and b.timestamp - a.timestamp < max_gap:
            intervals.append(DwellInterval(a.location_id, a.timestamp, b.timestamp))

    return intervals


def merge_runs(
    intervals: Iterable[DwellInterval], cfg: FilterConfig
) -> list[DwellInterval]:
    """Join back-to-back intervals at the same location.

    A merged interval always stays shorter than ``max_gap``.
    """
    merged: list[DwellInterval] = []
    max_gap = cfg.max_gap_delta

    for iv in intervals:
        if merged:
            last = merged[-1]
            if (
                last.location_id == iv.location_id
                and last.end == iv.start
                and iv.end - last.start < max_gap
            ):
                merged[-1] = DwellInterval(last.location_id, last.start, iv.end)
                continue
        merged.append(iv)

    return merged


def track_intervals(track: SampledTrack, cfg: FilterConfig) -> list[DwellInterval]:
    """Dwell intervals of a resampled track, never bridging two segments.

    Consecutive ticks at one location are merged into a single stay.
    """
    intervals: list[DwellInterval] = []
    for segment in track.segments():
        intervals.extend(merge_runs(gap_segmenter(segment, cfg), cfg))
    return intervals


def sparse_towers(
    registry: TowerRegistry, cfg: FilterConfig
) -> tuple[frozenset[LocationId], bool]:
    """Towers whose nearest neighbour is farther than ``sparse_tower_km``.

    :return: the sparse set and whether every tower is sparse
    """
    neighbors = nearest_neighbor_km(registry)
    sparse = frozenset(t for t, km in neighbors.items() if km > cfg.sparse_tower_km)
    pathological = len(sparse) == len(registry)

    if pathological:
        log.warning(
            "Every one of the %d towers is sparse; sparse screening removes "
            "every user with dwell",
            len(registry),
        )

    return sparse, pathological


def is_sparse_user(
    intervals: Iterable[DwellInterval],
    sparse: frozenset[LocationId],
    cfg: FilterConfig,
) -> bool:
    """Whether more than ``sparse_dwell_share`` of the dwell is at sparse towers."""
    total = 0.0
    at_sparse = 0.0

    for interval in intervals:
        seconds = interval.seconds
        total += seconds
        if interval.location_id in sparse:
            at_sparse += seconds

    return total > 0 and at_sparse > cfg.sparse_dwell_share * total


def sparse_tower_screen(
    users: Mapping[str, Sequence[DwellInterval]],
    registry: TowerRegistry,
    cfg: FilterConfig,
) -> SparseScreenResult:
    """Remove users who spend significant time near isolated towers.

    :param users: Dwell intervals per user id
    :param registry: (:class:`cdrcommute.objects.TowerRegistry`) - Towers
    :param cfg: (:class:`cdrcommute.config.FilterConfig`) - Filter thresholds
    :return: :class:`cdrcommute.objects.SparseScreenResult`
    """
    sparse, pathological = sparse_towers(registry, cfg)

    removed = frozenset(
        user_id
        for user_id, intervals in users.items()
        if sparse and is_sparse_user(intervals, sparse, cfg)
    )
    survivors = frozenset(users) - removed

    log.info(
        "Sparse tower screen: %d sparse towers, %d users removed",
        len(sparse),
        len(removed),
    )

    return SparseScreenResult(survivors, removed, sparse, pathological)
