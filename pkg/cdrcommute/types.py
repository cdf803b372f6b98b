"""Types used by the cdrcommute package."""

from __future__ import annotations

from datetime import datetime
from typing import Literal, Protocol, Union

LatLon = tuple[float, float]
LocationId = str
Period = Literal["day", "night"]
Leg = Literal["morning", "evening"]
Proxy = Literal["depart", "arrive"]
Weighting = Literal["dwell", "visits"]
CsvValue = Union[str, int, float, None]


class Observation(Protocol):
    """Anything observed at one location at one instant."""

    @property
    def timestamp(self) -> datetime: ...

    @property
    def location_id(self) -> LocationId: ...


class LocationIndex(Protocol):
    """Anything that can resolve a location id to coordinates."""

    def coordinates(self, location_id: LocationId) -> LatLon: ...


LEGS: tuple[Leg, ...] = ("morning", "evening")
PERIODS: tuple[Period, ...] = ("day", "night")
