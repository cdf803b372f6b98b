import math
import random
from datetime import datetime, time, timedelta

import numpy as np
import pytest

from cdrcommute.exceptions import InsufficientDataError, ZeroDwellError
from cdrcommute.objects import DwellInterval, DwellPortfolio, PortfolioEntry, RankCurve
from cdrcommute.portfolio import (
    RankAccumulator,
    accumulate_dwell,
    curve_falloff,
    loglog_slope,
    observed_days,
    population_rank_curve,
    split_day_night,
    travel_range,
)

MONDAY = datetime(2012, 1, 2)
HOUR = 3600.0


def interval(location: str, start_hours: float, end_hours: float) -> DwellInterval:
    return DwellInterval(
        location,
        MONDAY + timedelta(hours=start_hours),
        MONDAY + timedelta(hours=end_hours),
    )


@pytest.mark.parametrize(
    "start,end,day,night",
    [
        (9, 17, 8, 0),
        (0, 6, 0, 6),
        (19, 33, 2, 12),
        (6, 22, 12, 4),
        (0, 48, 24, 24),
    ],
)
def test_split_day_night(start, end, day, night):
    assert split_day_night(interval("H", start, end)) == (day * HOUR, night * HOUR)


def test_split_day_night_conserves_duration():
    """Test day and night dwell always add up to the interval length"""
    rnd = random.Random(2)
    for _ in range(500):
        start = rnd.uniform(0, 200)
        iv = interval("H", start, start + rnd.uniform(0.01, 60))
        day, night = split_day_night(iv, time(7, 30), time(19, 15))
        assert day >= 0 and night >= 0
        assert day + night == pytest.approx(iv.seconds)


def test_accumulate_dwell():
    intervals = [
        interval("H", 0, 8),
        interval("W", 9, 17),
        interval("H", 20, 32),
        interval("B", 33, 34),
        interval("A", 34, 35),
    ]
    portfolio = accumulate_dwell(intervals, "u1")

    assert portfolio.user_id == "u1"
    assert [(e.rank, e.location_id) for e in portfolio.entries] == [
        (1, "H"),
        (2, "W"),
        (3, "A"),
        (4, "B"),
    ]
    home = portfolio.by_location()["H"]
    assert (home.day_dwell, home.night_dwell) == (0.0, 20 * HOUR)
    assert portfolio.total() == sum(iv.seconds for iv in intervals)
    assert portfolio.total("day") + portfolio.total("night") == portfolio.total()


def test_observed_days():
    assert observed_days([interval("H", 20, 24)]) == 1
    assert observed_days([interval("H", 23, 25)]) == 2
    assert observed_days([interval("H", 1, 2), interval("W", 49, 50)]) == 2
    assert observed_days([]) == 0


def test_travel_range():
    portfolio = accumulate_dwell(
        [interval("H", 20, 32), interval("W", 33, 41), interval("S", 41, 42)]
    )
    assert travel_range(portfolio) == (2, 1)


def entry(rank: int, day: float, night: float) -> PortfolioEntry:
    return PortfolioEntry(rank, f"L{rank}", day, night, day + night)


def test_rank_accumulator_merge():
    """Test per-worker accumulators merge into the single-pass result"""
    users = [
        (DwellPortfolio("u1", (entry(1, 10.0, 50.0), entry(2, 5.0, 1.0))), 2),
        (DwellPortfolio("u2", (entry(1, 30.0, 20.0),)), 1),
        (DwellPortfolio("u3", (entry(1, 8.0, 8.0), entry(2, 2.0, 0.0))), 4),
    ]
    single = RankAccumulator()
    left, right = RankAccumulator(), RankAccumulator()
    for i, (portfolio, days) in enumerate(users):
        single.add(portfolio, days)
        (left if i % 2 else right).add(portfolio, days)

    merged = left.merge(right)
    for period in ("day", "night"):
        expected = single.curve(period).points
        actual = merged.curve(period).points
        assert [r for r, _ in actual] == [r for r, _ in expected]
        assert [v for _, v in actual] == pytest.approx([v for _, v in expected])

    # Rank 2 averages only the users that have a second location
    assert single.curve("day").value_at(2) == pytest.approx((5.0 / 2 + 2.0 / 4) / 2)
    assert single.curve("day").value_at(1) == pytest.approx((5.0 + 30.0 + 2.0) / 3)

    with pytest.raises(ValueError):
        single.add(users[0][0], 0)


def test_population_rank_curve_max_rank():
    portfolio = DwellPortfolio("u1", tuple(entry(r, 10.0 / r, 0.0) for r in (1, 2, 3)))
    curve = population_rank_curve([portfolio], "day", {"u1": 1}, max_rank=2)
    assert curve == RankCurve("day", ((1, 10.0), (2, 5.0)))


def test_loglog_slope_power_law():
    curve = RankCurve("day", tuple((r, 100.0 * r**-1.5) for r in range(1, 31)))
    fit = loglog_slope(curve, (1, 20))
    assert fit.slope == pytest.approx(-1.5)
    assert fit.intercept == pytest.approx(math.log(100.0))
    assert fit.rss == pytest.approx(0.0, abs=1e-18)
    assert fit.n == 20


def test_loglog_slope_errors():
    with pytest.raises(ZeroDwellError):
        loglog_slope(RankCurve("night", ((1, 5.0), (2, 0.0), (3, 1.0))), (1, 3))
    with pytest.raises(InsufficientDataError):
        loglog_slope(RankCurve("day", ((1, 5.0), (2, 1.0))), (1, 20))


def zipf_user(rng: np.random.Generator, user_id: str, visits: int) -> DwellPortfolio:
    """Day visits over 50 places with frequencies proportional to 1 / rank."""
    weights = 1.0 / np.arange(1, 51)
    counts = rng.multinomial(visits, weights / weights.sum())
    intervals = [
        DwellInterval(
            f"P{place}",
            MONDAY + timedelta(days=place, hours=8),
            MONDAY + timedelta(days=place, hours=8, seconds=10 * int(count)),
        )
        for place, count in enumerate(counts)
        if count
    ]
    return accumulate_dwell(intervals, user_id)


def test_zipf_visits_give_unit_slope():
    rng = np.random.default_rng(1)
    portfolios = [zipf_user(rng, f"u{i}", 5000) for i in range(20)]
    curve = population_rank_curve(
        portfolios, "day", {p.user_id: 50 for p in portfolios}, max_rank=50
    )

    fit = loglog_slope(curve, (1, 20))
    assert -1.15 <= fit.slope <= -0.85


def test_night_curve_falls_off():
    """Test a home-centred night shows one dominant location"""
    portfolios = []
    for u in range(10):
        intervals = [interval("H", 24 * d - 2, 24 * d + 6) for d in range(1, 6)]
        intervals += [
            interval(f"P{p}", 24 * 6 + p + 21, 24 * 6 + p + 21 + 1 / 6)
            for p in range(12)
        ]
        portfolios.append(accumulate_dwell(intervals, f"u{u}"))

    days = {p.user_id: 6 for p in portfolios}
    night = population_rank_curve(portfolios, "night", days)
    assert curve_falloff(night, 10) < 0.1
    assert math.isnan(curve_falloff(night, 40))
