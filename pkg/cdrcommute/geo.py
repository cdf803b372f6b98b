"""Record ingestion, great-circle distances and the local grid projection."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections.abc import Iterable, Iterator, Sequence
from typing import IO, Union

import numpy as np
from scipy.spatial import cKDTree

from cdrcommute.constants import EARTH_RADIUS_KM, KM_PER_DEGREE, MAX_GRID_OFFSET_KM
from cdrcommute.exceptions import (
    DataError,
    DuplicateTowerError,
    EmptyRegistryError,
    GridRangeError,
    MalformedRowError,
)
from cdrcommute.objects import (
    CallEvent,
    GpsPoint,
    GridCell,
    GridSpec,
    ParseReport,
    Region,
    TowerRegistry,
    is_valid_latitude,
    is_valid_longitude,
)
from cdrcommute.types import LatLon, LocationId
from cdrcommute.utils import detect_timestamp_format, parse_timestamp

log = logging.getLogger(__name__)

Source = Union[IO[bytes], IO[str], Iterable[str]]

REGISTRY_HEADER = ("tower_id", "lat", "lon")
CDR_HEADER = ("user_id", "timestamp", "tower_id")
GPS_HEADER = ("vehicle_id", "timestamp", "lat", "lon")


def _rows(source: Source) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line number, fields)`` for every non-blank CSV row."""
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)):
        wrapper = io.TextIOWrapper(source, encoding="utf-8", newline="")
        try:
            yield from _rows(wrapper)
        finally:
            wrapper.detach()
        return

    reader = csv.reader(source)  # type: ignore[arg-type]
    for fields in reader:
        if not fields or all(not f.strip() for f in fields):
            continue
        yield reader.line_num, [f.strip() for f in fields]


def _header_matches(fields: list[str], expected: tuple[str, ...]) -> bool:
    return tuple(f.lstrip("\ufeff").lower() for f in fields) == expected


def _check_header(fields: list[str], expected: tuple[str, ...]) -> None:
    if not _header_matches(fields, expected):
        raise DataError(
            f"Expected header {','.join(expected)} but found {','.join(fields)}"
        )


def load_tower_registry(source: Source) -> TowerRegistry:
    """Load a ``tower_id,lat,lon`` registry.

    :param source: Binary or text stream (or lines) of registry CSV
    :return: :class:`cdrcommute.objects.TowerRegistry`
    :raises EmptyRegistryError: if the file holds no towers
    :raises DuplicateTowerError: if a tower id repeats
    :raises MalformedRowError: if a row cannot be parsed or is out of range
    """
    rows = _rows(source)
    header = next(rows, None)
    if header is None:
        raise EmptyRegistryError()

    lineno, fields = header
    if not _header_matches(fields, REGISTRY_HEADER):
        raise MalformedRowError(lineno, "expected header tower_id,lat,lon")

    entries: dict[LocationId, LatLon] = {}

    for lineno, fields in rows:
        if len(fields) != 3 or not fields[0]:
            raise MalformedRowError(lineno, "expected 3 fields")

        tower_id, lat_raw, lon_raw = fields
        try:
            lat, lon = float(lat_raw), float(lon_raw)
        except ValueError:
            raise MalformedRowError(lineno, "coordinate is not a number") from None

        if not is_valid_latitude(lat):
            raise MalformedRowError(lineno, f"latitude {lat} out of range")
        if not is_valid_longitude(lon):
            raise MalformedRowError(lineno, f"longitude {lon} out of range")
        if tower_id in entries:
            raise DuplicateTowerError(tower_id)

        entries[tower_id] = (lat, lon)

    if not entries:
        raise EmptyRegistryError()

    log.info("Loaded tower registry with %d towers", len(entries))

    return TowerRegistry(entries)


def parse_cdr_stream(
    source: Source, registry: TowerRegistry
) -> tuple[dict[str, list[CallEvent]], ParseReport]:
    """Parse a ``user_id,timestamp,tower_id`` stream into per-user sequences.

    Each sequence is sorted ascending by timestamp; equal timestamps keep their
    input order.  Bad rows are tallied in the returned report, never raised.

    :param source: Binary or text stream (or lines) of CDR CSV
    :param registry: (:class:`cdrcommute.objects.TowerRegistry`) - Towers that
        events may reference
    :return: per-user event lists and the :class:`ParseReport`
    """
    report = ParseReport()
    users: dict[str, list[CallEvent]] = {}
    fmt: str | None = None

    rows = _rows(source)
    header = next(rows, None)
    if header is None:
        return users, report
    _check_header(header[1], CDR_HEADER)

    for _, fields in rows:
        if len(fields) != 3 or not fields[0]:
            report.malformed += 1
            continue

        user_id, raw_ts, tower_id = fields
        if fmt is None:
            fmt = detect_timestamp_format(raw_ts)

        try:
            ts = parse_timestamp(raw_ts, fmt)
        except (ValueError, OverflowError):
            report.bad_timestamp += 1
            continue

        if tower_id not in registry:
            report.unknown_tower += 1
            continue

        users.setdefault(user_id, []).append(CallEvent(user_id, ts, tower_id))
        report.accepted += 1

    for events in users.values():
        events.sort(key=lambda e: e.timestamp)

    _log_report("CDR", len(users), report)

    return users, report


def parse_gps_stream(
    source: Source, bounds: Region | None = None
) -> tuple[dict[str, list[GpsPoint]], ParseReport]:
    """Parse a ``vehicle_id,timestamp,lat,lon`` stream into per-vehicle traces.

    :param source: Binary or text stream (or lines) of GPS CSV
    :param bounds: (:class:`cdrcommute.objects.Region`) - Study region; points
        outside it are tallied as out of bounds
    :return: per-vehicle point lists and the :class:`ParseReport`
    """
    report = ParseReport()
    vehicles: dict[str, list[GpsPoint]] = {}
    fmt: str | None = None

    rows = _rows(source)
    header = next(rows, None)
    if header is None:
        return vehicles, report
    _check_header(header[1], GPS_HEADER)

    for _, fields in rows:
        if len(fields) != 4 or not fields[0]:
            report.malformed += 1
            continue

        vehicle_id, raw_ts, lat_raw, lon_raw = fields
        if fmt is None:
            fmt = detect_timestamp_format(raw_ts)

        try:
            ts = parse_timestamp(raw_ts, fmt)
        except (ValueError, OverflowError):
            report.bad_timestamp += 1
            continue

        try:
            lat, lon = float(lat_raw), float(lon_raw)
        except ValueError:
            report.malformed += 1
            continue

        if (
            not is_valid_latitude(lat)
            or not is_valid_longitude(lon)
            or (bounds is not None and not bounds.contains(lat, lon))
        ):
            report.out_of_bounds += 1
            continue

        point = GpsPoint(vehicle_id, ts, lat, lon)
        vehicles.setdefault(vehicle_id, []).append(point)
        report.accepted += 1

    for points in vehicles.values():
        points.sort(key=lambda p: p.timestamp)

    _log_report("GPS", len(vehicles), report)

    return vehicles, report


def _log_report(kind: str, units: int, report: ParseReport) -> None:
    log.info("Parsed %d %s rows for %d ids", report.accepted, kind, units)
    if report.rejected:
        log.warning("Skipped %d %s rows: %s", report.rejected, kind, report.to_dict())


def haversine_km(a: LatLon, b: LatLon) -> float:
    """Great-circle distance in km between two ``(lat, lon)`` points."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])

    h = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )

    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def haversine_km_array(
    lat1: np.ndarray, lon1: np.ndarray, lat2: np.ndarray, lon2: np.ndarray
) -> np.ndarray:
    """Vectorized :func:`haversine_km` over broadcastable degree arrays."""
    lat1, lon1, lat2, lon2 = map(np.radians, (lat1, lon1, lat2, lon2))

    h = (
        np.sin((lat2 - lat1) / 2) ** 2
        + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    )

    return 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def _wrap_longitude(delta: float) -> float:
    return (delta + 180.0) % 360.0 - 180.0


def project_local(point: LatLon, anchor: LatLon) -> tuple[float, float]:
    """East/north offsets in km of a point in the equirectangular plane at anchor."""
    east = (
        _wrap_longitude(point[1] - anchor[1])
        * KM_PER_DEGREE
        * math.cos(math.radians(anchor[0]))
    )
    north = (point[0] - anchor[0]) * KM_PER_DEGREE
    return east, north


def unproject_local(offset: tuple[float, float], anchor: LatLon) -> LatLon:
    """Inverse of :func:`project_local`."""
    east, north = offset
    lat = anchor[0] + north / KM_PER_DEGREE
    lon = anchor[1] + east / (KM_PER_DEGREE * math.cos(math.radians(anchor[0])))
    return lat, _wrap_longitude(lon)


def gps_to_grid(point: GpsPoint | LatLon, spec: GridSpec) -> GridCell:
    """Discretize a point onto the grid.

    :param point: (:class:`cdrcommute.objects.GpsPoint` or ``(lat, lon)``) -
        Point to discretize
    :param spec: (:class:`cdrcommute.objects.GridSpec`) - The grid
    :return: :class:`cdrcommute.objects.GridCell` holding the point
    :raises GridRangeError: if the point is too far from the anchor
    """
    position = point.position if isinstance(point, GpsPoint) else point
    distance = haversine_km(position, spec.anchor)
    if distance > MAX_GRID_OFFSET_KM:
        raise GridRangeError(point, distance)

    east, north = project_local(position, spec.anchor)

    return GridCell(
        row=math.floor(north / spec.cell_size),
        col=math.floor(east / spec.cell_size),
    )


def grid_cell_center(cell: GridCell, spec: GridSpec) -> LatLon:
    """Coordinates of the centre of a grid cell."""
    return unproject_local(
        ((cell.col + 0.5) * spec.cell_size, (cell.row + 0.5) * spec.cell_size),
        spec.anchor,
    )


def grid_registry(cells: Iterable[GridCell], spec: GridSpec) -> TowerRegistry:
    """Registry mapping each cell's location id to its centre."""
    return TowerRegistry({c.location_id: grid_cell_center(c, spec) for c in cells})


def to_unit_vectors(positions: Sequence[LatLon]) -> np.ndarray:
    """Map ``(lat, lon)`` degrees onto points of the unit sphere."""
    coords = np.radians(np.asarray(positions, dtype=float).reshape(-1, 2))
    lat, lon = coords[:, 0], coords[:, 1]
    return np.column_stack(
        (np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat))
    )


def chord_to_km(chord: np.ndarray | float) -> np.ndarray:
    """Convert unit-sphere chord lengths to great-circle km."""
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.asarray(chord) / 2))


class LocationTree:
    """Nearest-neighbour index over the locations of a registry."""

    def __init__(self, registry: TowerRegistry):
        """Initialize the index.

        :param registry: (:class:`cdrcommute.objects.TowerRegistry`) - Locations
            to index
        """
        self.ids: list[LocationId] = list(registry)
        self.positions = [registry.coordinates(i) for i in self.ids]
        self.tree = cKDTree(to_unit_vectors(self.positions))

    def __len__(self):
        return len(self.ids)

    def nearest(self, point: LatLon, k: int = 1) -> list[tuple[LocationId, float]]:
        """The ``k`` nearest locations to a point as ``(id, km)`` pairs."""
        k = min(k, len(self.ids))
        chords, idx = self.tree.query(to_unit_vectors([point])[0], k=k)
        chords, idx = np.atleast_1d(chords), np.atleast_1d(idx)
        return [
            (self.ids[i], float(d)) for i, d in zip(idx, chord_to_km(chords))
        ]

    def neighbor_distances(self) -> dict[LocationId, float]:
        """Distance in km from each location to its nearest other location.

        With a single location the distance is infinite.
        """
        if len(self.ids) < 2:
            return {i: math.inf for i in self.ids}

        chords, _ = self.tree.query(self.tree.data, k=2)
        distances = chord_to_km(chords[:, 1])
        return {i: float(d) for i, d in zip(self.ids, distances)}


def nearest_neighbor_km(registry: TowerRegistry) -> dict[LocationId, float]:
    """Nearest-neighbour distance of every registry location."""
    return LocationTree(registry).neighbor_distances()
