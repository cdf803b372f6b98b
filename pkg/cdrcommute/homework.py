"""Home/work inference, commute distances and radius of gyration."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence

import numpy as np

from cdrcommute.constants import DEFAULT_MIN_COMMUTE_KM, DEFAULT_SHARE_THRESHOLD
from cdrcommute.exceptions import InsufficientDataError
from cdrcommute.geo import haversine_km, haversine_km_array
from cdrcommute.objects import (
    CommuteDistanceRecord,
    DistanceDistribution,
    DwellInterval,
    DwellPortfolio,
    HomeWorkAssignment,
    RejectReason,
    Rejection,
    TowerRegistry,
)
from cdrcommute.stats import density_histogram, empirical_cdf
from cdrcommute.types import LocationId, Period, Weighting


def _top_location(
    portfolio: DwellPortfolio, period: Period
) -> tuple[LocationId, float]:
    best = min(portfolio.entries, key=lambda e: (-e.dwell(period), e.location_id))
    return best.location_id, best.dwell(period)


def infer_home_work(
    p: DwellPortfolio, share_threshold: float = DEFAULT_SHARE_THRESHOLD
) -> HomeWorkAssignment | Rejection:
    """Pick home and work as the locations holding most night and day dwell.

    Each must hold strictly more than ``share_threshold`` of its period's total
    dwell.  A user failing only the home test is rejected with
    ``no_home_candidate``, failing only the work test with
    ``no_work_candidate`` and failing both with ``insufficient_share``.

    :param p: (:class:`cdrcommute.objects.DwellPortfolio`) - User portfolio
    :param share_threshold: (:code:`float`) - Minimum dwell share
    :return: :class:`cdrcommute.objects.HomeWorkAssignment` or a falsy
        :class:`cdrcommute.objects.Rejection`
    """
    night_total = p.total("night")
    day_total = p.total("day")

    if not p or night_total <= 0 or day_total <= 0:
        return Rejection(p.user_id, RejectReason.INSUFFICIENT_DATA)

    home, home_dwell = _top_location(p, "night")
    work, work_dwell = _top_location(p, "day")
    night_share = home_dwell / night_total
    day_share = work_dwell / day_total

    home_ok = night_share > share_threshold
    work_ok = day_share > share_threshold

    if not home_ok and not work_ok:
        return Rejection(p.user_id, RejectReason.INSUFFICIENT_SHARE)
    if not home_ok:
        return Rejection(p.user_id, RejectReason.NO_HOME_CANDIDATE)
    if not work_ok:
        return Rejection(p.user_id, RejectReason.NO_WORK_CANDIDATE)

    return HomeWorkAssignment(
        p.user_id, home, work, min(1.0, night_share), min(1.0, day_share)
    )


def commute_distance(
    a: HomeWorkAssignment,
    registry: TowerRegistry,
    min_commute_km: float = DEFAULT_MIN_COMMUTE_KM,
    crow_fly_factor: float | None = None,
) -> CommuteDistanceRecord | Rejection:
    """Great-circle distance between a user's home and work.

    :param a: (:class:`cdrcommute.objects.HomeWorkAssignment`) - Assignment
    :param registry: (:class:`cdrcommute.objects.TowerRegistry`) - Locations
    :param min_commute_km: (:code:`float`) - Shorter commutes are excluded
    :param crow_fly_factor: (:code:`float`) - Optional route correction stored
        in ``corrected_km``
    :return: :class:`cdrcommute.objects.CommuteDistanceRecord` or a
        ``short_commute`` :class:`cdrcommute.objects.Rejection`
    :raises UnknownLocationError: if home or work is not in the registry
    """
    home = registry.coordinates(a.home)
    work = registry.coordinates(a.work)
    distance = haversine_km(home, work)

    if distance < min_commute_km:
        return Rejection(a.user_id, RejectReason.SHORT_COMMUTE)

    corrected = distance * crow_fly_factor if crow_fly_factor is not None else None

    return CommuteDistanceRecord(a.user_id, distance, corrected)


def location_weights(
    intervals: Iterable[DwellInterval], weighting: Weighting = "dwell"
) -> dict[LocationId, float]:
    """Weight of each visited location: dwell seconds or interval count."""
    weights: dict[LocationId, float] = {}
    for iv in intervals:
        w = iv.seconds if weighting == "dwell" else 1.0
        weights[iv.location_id] = weights.get(iv.location_id, 0.0) + w
    return weights


def radius_of_gyration(
    intervals: Sequence[DwellInterval],
    registry: TowerRegistry,
    weighting: Weighting = "dwell",
) -> float:
    """Weighted RMS distance in km of visited locations from their centre.

    Computed from pairwise great-circle distances,
    ``sqrt(sum_{i<j} w_i * w_j * d_ij**2) / sum(w)``, which equals the RMS
    distance to the weighted centroid in the plane and needs no projection.
    Two places give exactly ``d * sqrt(w1 * w2) / (w1 + w2)``.

    :param intervals: Dwell intervals of one user
    :param registry: (:class:`cdrcommute.objects.TowerRegistry`) - Locations
    :param weighting: (:code:`str`) - ``dwell`` (seconds) or ``visits``
        (intervals per location)
    :return: radius of gyration in km
    """
    weights = location_weights(intervals, weighting)
    if len(weights) < 2:
        return 0.0

    ids = sorted(weights)
    coords = np.array([registry.coordinates(i) for i in ids])
    w = np.array([weights[i] for i in ids])

    lat, lon = coords[:, 0], coords[:, 1]
    d = haversine_km_array(lat[:, None], lon[:, None], lat[None, :], lon[None, :])
    upper = np.triu_indices(len(ids), k=1)
    pair_sum = float(np.sum(np.outer(w, w)[upper] * d[upper] ** 2))

    return math.sqrt(pair_sum) / float(w.sum())


def distance_population(
    records: Sequence[CommuteDistanceRecord], bin_width_km: float
) -> DistanceDistribution:
    """Commute distance PDF, exact CDF and mean of a population.

    The PDF bins start at 0 km and are ``bin_width_km`` wide.

    :raises InsufficientDataError: without records
    """
    if not records:
        raise InsufficientDataError("No commute distances to summarize")

    distances = np.array([r.distance_km for r in records])
    n_bins = max(1, math.ceil(float(distances.max()) / bin_width_km))
    edges = np.arange(n_bins + 1) * bin_width_km

    return DistanceDistribution(
        pdf=density_histogram(distances, edges),
        cdf=empirical_cdf(distances),
        mean_km=float(distances.mean()),
        n=len(records),
    )
