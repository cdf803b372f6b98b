"""Morning and evening commute proxies and their distributions."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from datetime import date, time

from cdrcommute.constants import (
    BUCKET_MINUTES,
    DEFAULT_MIN_CALL_RATE,
    DEFAULT_NOON,
    DEFAULT_PLAUSIBILITY_CUTOFF,
    MINUTES_PER_DAY,
)
from cdrcommute.objects import (
    BinDurations,
    BinSummary,
    CommuteSample,
    DistanceBins,
    HomeWorkAssignment,
    Histogram,
    RejectReason,
    Rejection,
    TimeWindow,
)
from cdrcommute.stats import density_histogram, empirical_cdf, mean_stderr
from cdrcommute.types import LEGS, Leg, Observation, Proxy
from cdrcommute.utils import minutes_of_day

log = logging.getLogger(__name__)

TIME_OF_DAY_EDGES = tuple(
    float(m) for m in range(0, MINUTES_PER_DAY + BUCKET_MINUTES, BUCKET_MINUTES)
)

# Proxy whose time of day marks each leg's peak: leaving home, reaching home
PEAK_PROXY: dict[Leg, Proxy] = {"morning": "depart", "evening": "arrive"}


def is_frequent_caller(
    events: Iterable[Observation],
    window: TimeWindow,
    min_rate: float = DEFAULT_MIN_CALL_RATE,
) -> bool:
    """Whether a user-day has at least ``min_rate`` calls per hour in a window.

    :param events: One user-day's calls
    :param window: (:class:`cdrcommute.objects.TimeWindow`) - Hours counted
    :param min_rate: (:code:`float`) - Calls per hour required
    """
    calls = sum(1 for e in events if window.contains(e.timestamp))
    return calls / window.hours >= min_rate


def group_user_days(events: Iterable[Observation]) -> dict[date, list[Observation]]:
    """Split a user's time-sorted calls by calendar date."""
    days: dict[date, list[Observation]] = {}
    for event in events:
        days.setdefault(event.timestamp.date(), []).append(event)
    return days


def _day_of(events: Sequence[Observation]) -> date | None:
    return events[0].timestamp.date() if events else None


def morning_commute(
    events: Sequence[Observation],
    hw: HomeWorkAssignment,
    noon: time = DEFAULT_NOON,
    distance_km: float | None = None,
) -> CommuteSample | Rejection:
    """Bracket the morning trip between the last home call and first work call.

    Only calls strictly before noon count.

    :param events: One user-day's time-sorted calls
    :param hw: (:class:`cdrcommute.objects.HomeWorkAssignment`) - Home and work
    :param noon: (:code:`datetime.time`) - Morning/evening divider
    :param distance_km: (:code:`float`) - Commute distance to carry along
    :return: :class:`cdrcommute.objects.CommuteSample` or a falsy
        :class:`cdrcommute.objects.Rejection`
    """
    day = _day_of(events)
    morning = [e for e in events if e.timestamp.time() < noon]
    home_calls = [e.timestamp for e in morning if e.location_id == hw.home]
    work_calls = [e.timestamp for e in morning if e.location_id == hw.work]

    if not home_calls:
        return Rejection(hw.user_id, RejectReason.NO_HOME_CALL, day, "morning")
    if not work_calls:
        return Rejection(hw.user_id, RejectReason.NO_WORK_CALL, day, "morning")

    depart, arrive = home_calls[-1], work_calls[0]
    if not depart < arrive:
        return Rejection(hw.user_id, RejectReason.INVERTED_ORDER, day, "morning")

    return CommuteSample(
        hw.user_id, depart.date(), "morning", depart, arrive, distance_km
    )


def evening_commute(
    events: Sequence[Observation],
    hw: HomeWorkAssignment,
    noon: time = DEFAULT_NOON,
    distance_km: float | None = None,
    plausibility_cutoff: time = DEFAULT_PLAUSIBILITY_CUTOFF,
) -> CommuteSample | Rejection:
    """Bracket the evening trip between a work call and the first home call.

    The arrival is the first home call at or after noon and the departure the
    last work call at or after noon that precedes it.  Samples arriving before
    ``plausibility_cutoff`` are kept but flagged ``implausible``.

    :param events: One user-day's time-sorted calls
    :param hw: (:class:`cdrcommute.objects.HomeWorkAssignment`) - Home and work
    :param noon: (:code:`datetime.time`) - Morning/evening divider
    :param distance_km: (:code:`float`) - Commute distance to carry along
    :param plausibility_cutoff: (:code:`datetime.time`) - Earliest plausible
        arrival home
    :return: :class:`cdrcommute.objects.CommuteSample` or a falsy
        :class:`cdrcommute.objects.Rejection`
    """
    day = _day_of(events)
    evening = [e for e in events if e.timestamp.time() >= noon]
    home_calls = [e.timestamp for e in evening if e.location_id == hw.home]
    work_calls = [e.timestamp for e in evening if e.location_id == hw.work]

    if not home_calls:
        return Rejection(hw.user_id, RejectReason.NO_HOME_CALL, day, "evening")
    if not work_calls:
        return Rejection(hw.user_id, RejectReason.NO_WORK_CALL, day, "evening")

    arrive = home_calls[0]
    before = [t for t in work_calls if t < arrive]
    if not before:
        return Rejection(hw.user_id, RejectReason.INVERTED_ORDER, day, "evening")

    depart = before[-1]

    return CommuteSample(
        hw.user_id,
        depart.date(),
        "evening",
        depart,
        arrive,
        distance_km,
        implausible=arrive.time() < plausibility_cutoff,
    )


def user_commutes(
    events: Sequence[Observation],
    hw: HomeWorkAssignment,
    windows: dict[Leg, TimeWindow],
    min_rate: float = DEFAULT_MIN_CALL_RATE,
    noon: time = DEFAULT_NOON,
    distance_km: float | None = None,
    plausibility_cutoff: time = DEFAULT_PLAUSIBILITY_CUTOFF,
) -> tuple[list[CommuteSample], list[Rejection]]:
    """Every morning and evening sample of one user, one per user-day and leg.

    A leg is only considered on days when the user calls often enough inside
    that leg's window.

    :return: the samples and the rejected user-day legs
    """
    samples: list[CommuteSample] = []
    rejections: list[Rejection] = []

    for day, day_events in sorted(group_user_days(events).items()):
        for leg in LEGS:
            if not is_frequent_caller(day_events, windows[leg], min_rate):
                rejections.append(
                    Rejection(hw.user_id, RejectReason.INFREQUENT_CALLER, day, leg)
                )
                continue

            if leg == "morning":
                result = morning_commute(day_events, hw, noon, distance_km)
            else:
                result = evening_commute(
                    day_events, hw, noon, distance_km, plausibility_cutoff
                )

            if isinstance(result, Rejection):
                log.debug("User %s %s %s: %s", hw.user_id, day, leg, result.reason)
                rejections.append(result)
            else:
                samples.append(result)

    return samples, rejections


def samples_by_bin(
    samples: Iterable[CommuteSample], bins: DistanceBins, leg: Leg
) -> list[list[CommuteSample]]:
    """Group one leg's samples by distance bin; samples outside every bin drop."""
    grouped: list[list[CommuteSample]] = [[] for _ in range(len(bins))]
    for sample in samples:
        if sample.leg != leg:
            continue
        index = bins.index(sample.distance_km)
        if index is not None:
            grouped[index].append(sample)
    return grouped


def timing_distribution(
    samples: Iterable[CommuteSample],
    bins: DistanceBins,
    leg: Leg,
    which: Proxy,
) -> list[Histogram]:
    """Time-of-day histogram of one proxy per distance bin.

    Buckets are 10 minutes wide over the whole day and each non-empty
    histogram integrates to 1 (density per minute).

    :param samples: Commute samples
    :param bins: (:class:`cdrcommute.objects.DistanceBins`) - Distance bins
    :param leg: (:code:`str`) - ``morning`` or ``evening``
    :param which: (:code:`str`) - ``depart`` or ``arrive``
    :return: one :class:`cdrcommute.objects.Histogram` per bin
    """
    return [
        density_histogram(
            [minutes_of_day(s.proxy(which)) for s in group], TIME_OF_DAY_EDGES
        )
        for group in samples_by_bin(samples, bins, leg)
    ]


def duration_edges(durations: Sequence[float]) -> tuple[float, ...]:
    """10-minute bucket edges from 0 up to the longest duration."""
    longest = max(durations, default=0.0)
    buckets = max(1, math.ceil(longest / BUCKET_MINUTES))
    return tuple(float(i * BUCKET_MINUTES) for i in range(buckets + 1))


def duration_by_bin(
    samples: Iterable[CommuteSample], bins: DistanceBins, leg: Leg
) -> list[BinDurations]:
    """Mean, standard error, histogram and CDF of durations per distance bin.

    :param samples: Commute samples
    :param bins: (:class:`cdrcommute.objects.DistanceBins`) - Distance bins
    :param leg: (:code:`str`) - ``morning`` or ``evening``
    :return: one :class:`cdrcommute.objects.BinDurations` per bin
    """
    results: list[BinDurations] = []

    for index, group in enumerate(samples_by_bin(samples, bins, leg)):
        durations = [s.duration for s in group]
        lo, hi = bins.bounds(index)
        mean, stderr = mean_stderr(durations)

        results.append(
            BinDurations(
                summary=BinSummary(lo, hi, len(durations), mean, stderr),
                histogram=density_histogram(durations, duration_edges(durations)),
                cdf=empirical_cdf(durations),
            )
        )

    return results
