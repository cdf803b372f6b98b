"""Travel portfolios and population rank-dwell curves."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from datetime import date, datetime, time, timedelta

import numpy as np
from scipy import stats

from cdrcommute.constants import (
    DEFAULT_DAY_START,
    DEFAULT_NIGHT_START,
    DEFAULT_ZIPF_RANK_RANGE,
)
from cdrcommute.exceptions import InsufficientDataError, ZeroDwellError
from cdrcommute.objects import (
    DwellInterval,
    DwellPortfolio,
    LogLogFit,
    PortfolioEntry,
    RankCurve,
)
from cdrcommute.types import PERIODS, LocationId, Period
from cdrcommute.utils import at_time


def _overlap(a_start: datetime, a_end: datetime, b_start: datetime, b_end: datetime):
    return max(timedelta(0), min(a_end, b_end) - max(a_start, b_start))


def split_day_night(
    iv: DwellInterval,
    day_start: time = DEFAULT_DAY_START,
    night_start: time = DEFAULT_NIGHT_START,
) -> tuple[float, float]:
    """Split an interval's duration between day and night.

    Day is ``[day_start, night_start)`` of every calendar day, night is the
    rest.  The two parts always add up to the interval's duration.

    :param iv: (:class:`cdrcommute.objects.DwellInterval`) - Interval to split
    :param day_start: (:code:`datetime.time`) - Start of the day window
    :param night_start: (:code:`datetime.time`) - Start of the night window
    :return: ``(day_seconds, night_seconds)``
    """
    day = timedelta(0)
    current = iv.start.date()

    while current <= iv.end.date():
        day += _overlap(
            iv.start,
            iv.end,
            at_time(current, day_start),
            at_time(current, night_start),
        )
        current += timedelta(days=1)

    night = iv.duration - day

    return day.total_seconds(), night.total_seconds()


def accumulate_dwell(
    intervals: Iterable[DwellInterval],
    user_id: str = "",
    day_start: time = DEFAULT_DAY_START,
    night_start: time = DEFAULT_NIGHT_START,
) -> DwellPortfolio:
    """Sum a user's dwell per location and rank the locations.

    Rank 1 has the most total dwell; ties go to the smaller location id.

    :param intervals: Dwell intervals of one user
    :param user_id: (:code:`str`) - Owner of the intervals
    :return: :class:`cdrcommute.objects.DwellPortfolio`
    """
    day: dict[LocationId, float] = {}
    night: dict[LocationId, float] = {}

    for iv in intervals:
        d, n = split_day_night(iv, day_start, night_start)
        day[iv.location_id] = day.get(iv.location_id, 0.0) + d
        night[iv.location_id] = night.get(iv.location_id, 0.0) + n

    ordered = sorted(day, key=lambda loc: (-(day[loc] + night[loc]), loc))

    return DwellPortfolio(
        user_id,
        tuple(
            PortfolioEntry(rank, loc, day[loc], night[loc], day[loc] + night[loc])
            for rank, loc in enumerate(ordered, start=1)
        ),
    )


def observed_days(intervals: Iterable[DwellInterval]) -> int:
    """Count the calendar dates touched by at least one interval."""
    dates: set[date] = set()

    for iv in intervals:
        current = iv.start.date()
        last = (iv.end - timedelta(microseconds=1)).date()
        while current <= last:
            dates.add(current)
            current += timedelta(days=1)

    return len(dates)


def travel_range(portfolio: DwellPortfolio) -> tuple[int, int]:
    """Number of distinct locations with day dwell and with night dwell."""
    return (
        sum(1 for e in portfolio.entries if e.day_dwell > 0),
        sum(1 for e in portfolio.entries if e.night_dwell > 0),
    )


class RankAccumulator:
    """Per-rank running sums of daily dwell, mergeable across workers."""

    def __init__(self, max_rank: int | None = None):
        """Initialize an empty accumulator.

        :param max_rank: (:code:`int`) - Ranks above this are not tracked
        """
        self.max_rank = max_rank
        self.sums: dict[Period, dict[int, float]] = {"day": {}, "night": {}}
        self.counts: dict[int, int] = {}

    def add(self, portfolio: DwellPortfolio, days: int) -> None:
        """Add one user's portfolio observed over ``days`` days."""
        if days < 1:
            raise ValueError("observed days must be at least 1")

        for entry in portfolio.entries:
            if self.max_rank is not None and entry.rank > self.max_rank:
                break
            self.counts[entry.rank] = self.counts.get(entry.rank, 0) + 1
            for period in PERIODS:
                daily = entry.dwell(period) / days
                sums = self.sums[period]
                sums[entry.rank] = sums.get(entry.rank, 0.0) + daily

    def merge(self, other: RankAccumulator) -> RankAccumulator:
        """Combine two accumulators into a new one."""
        merged = RankAccumulator(self.max_rank)
        for source in (self, other):
            for rank, count in source.counts.items():
                merged.counts[rank] = merged.counts.get(rank, 0) + count
            for period in PERIODS:
                for rank, value in source.sums[period].items():
                    sums = merged.sums[period]
                    sums[rank] = sums.get(rank, 0.0) + value
        return merged

    def curve(self, period: Period) -> RankCurve:
        """Mean daily dwell per rank for one period."""
        return RankCurve(
            period,
            tuple(
                (rank, self.sums[period][rank] / self.counts[rank])
                for rank in sorted(self.counts)
            ),
        )


def population_rank_curve(
    portfolios: Iterable[DwellPortfolio],
    period: Period,
    days: Mapping[str, int],
    max_rank: int | None = None,
) -> RankCurve:
    """Mean daily dwell per portfolio rank across a population.

    Users without a given rank do not count towards that rank's mean.

    :param portfolios: Portfolios of every user
    :param period: (:code:`str`) - ``day`` or ``night``
    :param days: Observed days per user id
    :param max_rank: (:code:`int`) - Highest rank to report
    :return: :class:`cdrcommute.objects.RankCurve`
    """
    acc = RankAccumulator(max_rank)
    for portfolio in portfolios:
        acc.add(portfolio, days[portfolio.user_id])
    return acc.curve(period)


def loglog_slope(
    curve: RankCurve, rank_range: tuple[int, int] = DEFAULT_ZIPF_RANK_RANGE
) -> LogLogFit:
    """Least-squares line through ``(ln rank, ln mean dwell)``.

    :param curve: (:class:`cdrcommute.objects.RankCurve`) - Curve to fit
    :param rank_range: Inclusive ``(first, last)`` ranks to fit
    :return: :class:`cdrcommute.objects.LogLogFit`
    :raises ZeroDwellError: if a rank inside the range has no dwell
    :raises InsufficientDataError: if fewer than 3 ranks are in range
    """
    lo, hi = rank_range
    points = [(r, v) for r, v in curve.points if lo <= r <= hi]

    if any(v <= 0 for _, v in points):
        raise ZeroDwellError()
    if len(points) < 3:
        raise InsufficientDataError(
            f"Need at least 3 ranks to fit, found {len(points)}"
        )

    x = np.log([r for r, _ in points])
    y = np.log([v for _, v in points])
    fit = stats.linregress(x, y)
    residuals = y - (fit.intercept + fit.slope * x)

    return LogLogFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        rss=float(np.sum(residuals**2)),
        n=len(points),
    )


def curve_falloff(curve: RankCurve, rank: int) -> float:
    """Dwell at ``rank`` relative to rank 1, ``nan`` when either is missing."""
    first = curve.value_at(1)
    value = curve.value_at(rank)
    if not first or value is None:
        return math.nan
    return value / first
