from datetime import datetime, time, timedelta

import pytest

from cdrcommute.objects import (
    CallEvent,
    CommuteSample,
    DistanceBins,
    HomeWorkAssignment,
    RejectReason,
    TimeWindow,
)
from cdrcommute.timing import (
    TIME_OF_DAY_EDGES,
    duration_by_bin,
    duration_edges,
    evening_commute,
    group_user_days,
    is_frequent_caller,
    morning_commute,
    samples_by_bin,
    timing_distribution,
    user_commutes,
)

from .fixtures import MONDAY, commuter_day, commuter_events

HW = HomeWorkAssignment("u1", "H", "W", 0.9, 0.8)
WINDOWS = {
    "morning": TimeWindow(time(5), time(12)),
    "evening": TimeWindow(time(12), time(22)),
}


def at(hour: int, minute: int = 0) -> datetime:
    return datetime.combine(MONDAY, time(hour, minute))


def calls(*pairs) -> list[CallEvent]:
    return [CallEvent("u1", ts, tower) for ts, tower in pairs]


def test_morning_commute():
    """Test the morning leg runs from the last home call to the first work call"""
    sample = morning_commute(commuter_day("u1", MONDAY), HW, distance_km=5.56)

    assert isinstance(sample, CommuteSample)
    assert (sample.depart_proxy, sample.arrive_proxy) == (at(7, 30), at(8, 30))
    assert sample.duration == 60.0
    assert sample.day == MONDAY
    assert sample.leg == "morning"
    assert sample.distance_km == 5.56
    assert not sample.implausible


def test_evening_commute():
    sample = evening_commute(commuter_day("u1", MONDAY), HW)

    assert isinstance(sample, CommuteSample)
    assert (sample.depart_proxy, sample.arrive_proxy) == (at(17), at(18))
    assert sample.duration == 60.0
    assert not sample.implausible


def test_evening_commute_flags_early_arrival():
    day = commuter_day("u1", MONDAY, leave_work=time(13), reach_home=time(14))
    sample = evening_commute(day, HW)

    assert sample.arrive_proxy == at(14)
    assert sample.implausible
    assert not evening_commute(day, HW, plausibility_cutoff=time(13)).implausible


@pytest.mark.parametrize(
    "events,reason",
    [
        (calls((at(8), "W"), (at(9), "W")), RejectReason.NO_HOME_CALL),
        (calls((at(7), "H"), (at(12, 30), "W")), RejectReason.NO_WORK_CALL),
        (calls((at(8), "W"), (at(9), "H")), RejectReason.INVERTED_ORDER),
        (calls((at(8), "H"), (at(8), "W")), RejectReason.INVERTED_ORDER),
    ],
)
def test_morning_rejections(events, reason):
    result = morning_commute(events, HW)
    assert not result
    assert (result.reason, result.day, result.leg) == (reason, MONDAY, "morning")


@pytest.mark.parametrize(
    "events,reason",
    [
        (calls((at(13), "W"), (at(15), "S")), RejectReason.NO_HOME_CALL),
        (calls((at(11), "W"), (at(18), "H")), RejectReason.NO_WORK_CALL),
        (calls((at(12, 30), "H"), (at(13), "W")), RejectReason.INVERTED_ORDER),
    ],
)
def test_evening_rejections(events, reason):
    result = evening_commute(events, HW)
    assert not result
    assert (result.reason, result.leg) == (reason, "evening")


def test_evening_uses_last_work_call_before_home():
    events = calls(
        (at(12), "W"),
        (at(16), "W"),
        (at(17), "S"),
        (at(19), "H"),
        (at(20), "W"),
        (at(21), "H"),
    )
    sample = evening_commute(events, HW)
    assert (sample.depart_proxy, sample.arrive_proxy) == (at(16), at(19))


def test_is_frequent_caller():
    day = commuter_day("u1", MONDAY)
    assert is_frequent_caller(day, WINDOWS["morning"], 1.0)
    assert is_frequent_caller(day, WINDOWS["evening"], 1.0)
    assert not is_frequent_caller(day, WINDOWS["morning"], 2.0)

    sparse = commuter_day("u1", MONDAY, step_minutes=120)
    assert not is_frequent_caller(sparse, WINDOWS["morning"], 1.0)


def test_group_user_days():
    days = group_user_days(commuter_events("u1", MONDAY, days=3))
    assert sorted(days) == [MONDAY + timedelta(days=d) for d in range(3)]
    assert all(len(events) == 46 for events in days.values())


def test_user_commutes():
    events = commuter_events("u1", MONDAY, days=5)
    samples, rejections = user_commutes(events, HW, WINDOWS, distance_km=5.56)

    assert rejections == []
    assert len(samples) == 10
    assert [s.leg for s in samples[:2]] == ["morning", "evening"]
    assert {s.duration for s in samples} == {60.0}
    assert {s.distance_km for s in samples} == {5.56}


def test_user_commutes_infrequent_days():
    events = commuter_day("u1", MONDAY) + commuter_day(
        "u1", MONDAY + timedelta(days=1), step_minutes=120
    )
    samples, rejections = user_commutes(events, HW, WINDOWS)

    assert {s.day for s in samples} == {MONDAY}
    assert {(r.reason, r.leg) for r in rejections} == {
        (RejectReason.INFREQUENT_CALLER, "morning"),
        (RejectReason.INFREQUENT_CALLER, "evening"),
    }


def week_samples(distance_km: float) -> list[CommuteSample]:
    events = commuter_events("u1", MONDAY, days=5)
    return user_commutes(events, HW, WINDOWS, distance_km=distance_km)[0]


def test_samples_by_bin():
    bins = DistanceBins.timing()
    samples = week_samples(5.56) + week_samples(60.0)

    grouped = samples_by_bin(samples, bins, "morning")
    assert [len(g) for g in grouped] == [0, 0, 5, 0, 0]
    assert all(s.leg == "morning" for s in grouped[2])


def test_timing_distribution():
    histograms = timing_distribution(
        week_samples(5.56), DistanceBins.timing(), "morning", "depart"
    )

    assert [h.n for h in histograms] == [0, 0, 5, 0, 0]
    populated = histograms[2]
    assert populated.edges == TIME_OF_DAY_EDGES
    assert populated.integral() == pytest.approx(1.0)
    peak = max(populated.buckets(), key=lambda b: b[2])
    assert peak == (450.0, 460.0, pytest.approx(0.1))
    assert histograms[0].integral() == 0.0


def test_duration_by_bin():
    results = duration_by_bin(week_samples(5.56), DistanceBins.duration(), "evening")

    assert [r.summary.n for r in results] == [0, 5, 0, 0, 0]
    filled = results[1]
    assert (filled.summary.lo, filled.summary.hi) == (5.0, 10.0)
    assert filled.summary.mean == 60.0
    assert filled.summary.stderr == 0.0
    assert filled.histogram.integral() == pytest.approx(1.0)
    assert filled.cdf.values == (60.0,)

    empty = results[0]
    assert empty.summary.mean is None and empty.summary.stderr is None
    assert empty.cdf.values == ()


def test_duration_edges():
    assert duration_edges([]) == (0.0, 10.0)
    assert duration_edges([60.0]) == tuple(float(m) for m in range(0, 70, 10))
    assert duration_edges([61.0])[-1] == 70.0


def test_duration_by_bin_two_samples():
    samples = [
        CommuteSample("u1", MONDAY, "morning", at(7), at(7, 30), 7.0),
        CommuteSample("u2", MONDAY, "morning", at(7), at(8), 8.0),
    ]
    results = duration_by_bin(samples, DistanceBins.duration(), "morning")

    summary = results[1].summary
    assert summary.n == 2
    assert summary.mean == 45.0
    assert summary.stderr == pytest.approx(15.0)
    assert [r.summary.n for r in results] == [0, 2, 0, 0, 0]
