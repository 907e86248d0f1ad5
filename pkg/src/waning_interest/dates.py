from __future__ import annotations

from datetime import datetime, timedelta
import re

from dateutil.parser import isoparse

_MONTHS = {
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}

_HAS_TIME = re.compile(r"\d{1,2}:\d{2}")
_SECONDS_PER_DAY = 86400.0


def parse_timestamp(value: str | None) -> tuple[datetime, bool] | None:
    """Parse one timestamp record; returns (datetime, date_only) or None.

    Accepts ISO-8601 dates and datetimes (YYYY-MM-DD, YYYY-MM-DDTHH:MM[:SS][+TZ], also
    with a space separator), plus the unpadded blog-archive style 2007-3-15 and
    month-name dates such as "Mar 15, 2007".
    Returns None if parsing fails.
    """
    if not value:
        return None
    s = str(value).strip()
    if not s:
        return None
    date_only = not _HAS_TIME.search(s)

    try:
        return isoparse(s.replace(" ", "T", 1) if not date_only else s), date_only
    except (ValueError, OverflowError):
        pass

    # 2007-3-15 (archive pages drop the zero padding)
    m = re.match(r"^(\d{4})-(\d{1,2})-(\d{1,2})$", s)
    if m:
        y, mo, d = (int(g) for g in m.groups())
        try:
            return datetime(y, mo, d), True
        except ValueError:
            return None

    # Mar 15, 2007 / Mar 15, 2007 6:12 PM
    m = re.match(r"^([A-Za-z]{3,9})\s+(\d{1,2}),\s*(\d{4})(?:\s+(\d{1,2}:\d{2})\s*([AaPp][Mm]))?$", s)
    if m:
        mon_s, day_s, year_s, time_s, ampm = m.groups()
        mon = _MONTHS.get(mon_s[:3].lower())
        if mon:
            try:
                dt = datetime(int(year_s), mon, int(day_s))
            except ValueError:
                return None
            if time_s and ampm:
                t = datetime.strptime(f"{time_s} {ampm.upper()}", "%I:%M %p")
                return dt + timedelta(hours=t.hour, minutes=t.minute), False
            return dt, True

    return None


def days_between(start: datetime, end: datetime) -> float:
    """Fractional days from start to end."""
    return (end - start).total_seconds() / _SECONDS_PER_DAY
