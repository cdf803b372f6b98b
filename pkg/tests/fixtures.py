"""Static inputs and builders used across the test suite."""

from datetime import date, datetime, time, timedelta

from cdrcommute.objects import CallEvent
from cdrcommute.utils import format_timestamp

# Home, work and a side place, about 5.6 km (H-W) and 4.3 km (H-S) apart
TOWERS = {
    "H": (38.70, -9.10),
    "W": (38.75, -9.10),
    "S": (38.70, -9.05),
}

TOWERS_CSV = "tower_id,lat,lon\n" + "".join(
    f"{t},{lat},{lon}\n" for t, (lat, lon) in TOWERS.items()
)

# A Monday
MONDAY = date(2012, 1, 2)


def commuter_day(
    user_id: str,
    day: date,
    home: str = "H",
    work: str = "W",
    leave_home: time = time(7, 30),
    reach_work: time = time(8, 30),
    leave_work: time = time(17, 0),
    reach_home: time = time(18, 0),
    step_minutes: int = 30,
) -> list[CallEvent]:
    """Calls every ``step_minutes`` of one commuting day.

    Calls up to ``leave_home`` are at home, from ``reach_work`` to
    ``leave_work`` at work and from ``reach_home`` on at home again.  Nobody
    calls while travelling.
    """
    events = []
    midnight = datetime.combine(day, time())

    for minutes in range(0, 24 * 60, step_minutes):
        ts = midnight + timedelta(minutes=minutes)
        t = ts.time()
        if t <= leave_home or t >= reach_home:
            events.append(CallEvent(user_id, ts, home))
        elif reach_work <= t <= leave_work:
            events.append(CallEvent(user_id, ts, work))

    return events


def commuter_events(
    user_id: str, first_day: date = MONDAY, days: int = 5, **kwargs
) -> list[CallEvent]:
    """:func:`commuter_day` repeated over consecutive days."""
    events = []
    for offset in range(days):
        events.extend(
            commuter_day(user_id, first_day + timedelta(days=offset), **kwargs)
        )
    return events


def cdr_csv(events: list[CallEvent]) -> str:
    """Render calls as CDR CSV text."""
    return "user_id,timestamp,tower_id\n" + "".join(
        f"{e.user_id},{format_timestamp(e.timestamp)},{e.tower_id}\n" for e in events
    )
