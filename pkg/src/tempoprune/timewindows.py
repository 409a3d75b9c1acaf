"""Day-granularity time windows with uncertain endpoints.

A window keeps a range for its start day (b_lo..b_hi) and a range for its
end day (e_lo..e_hi).  It stands for every concrete interval [x, y] with
x in the start range, y in the end range and x <= y, which is how vague
expressions such as "in 2013" are modelled.  All day values count from
1970-01-01.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

EPOCH = date(1970, 1, 1)


def day_number(d: date) -> int:
    """Days elapsed since 1970-01-01 (negative before the epoch)."""
    return (d - EPOCH).days


def day_to_date(day: int) -> date:
    return EPOCH + timedelta(days=day)


def parse_day(text: str) -> int:
    """ISO-8601 date string to day number.  Raises ValueError on bad input."""
    return day_number(date.fromisoformat(text.strip()))


@dataclass(frozen=True, order=True)
class TimeWindow:
    b_lo: int
    b_hi: int
    e_lo: int
    e_hi: int

    def __post_init__(self) -> None:
        if not (self.b_lo <= self.b_hi and self.e_lo <= self.e_hi and self.b_lo <= self.e_hi):
            raise ValueError(f"inconsistent window bounds {self!r}")

    @classmethod
    def certain(cls, start: int, end: int) -> "TimeWindow":
        """Window that starts exactly on `start` and ends exactly on `end`."""
        return cls(start, start, end, end)

    @classmethod
    def instant(cls, day: int) -> "TimeWindow":
        return cls(day, day, day, day)

    @property
    def hull(self) -> tuple[int, int]:
        """Smallest certain span containing every admissible interval."""
        return self.b_lo, self.e_hi

    @property
    def midpoint(self) -> int:
        """Representative day: floor midpoint of the hull."""
        return (self.b_lo + self.e_hi) // 2

    def to_iso(self) -> list[str]:
        return [day_to_date(v).isoformat() for v in (self.b_lo, self.b_hi, self.e_lo, self.e_hi)]

    @classmethod
    def from_iso(cls, parts) -> "TimeWindow":
        if not isinstance(parts, (list, tuple)) or len(parts) != 4:
            raise ValueError(f"expected 4 ISO dates, got {parts!r}")
        b_lo, b_hi, e_lo, e_hi = (parse_day(str(p)) for p in parts)
        return cls(b_lo, b_hi, e_lo, e_hi)


def intersect(a: TimeWindow, c: TimeWindow) -> TimeWindow | None:
    """Intersection window, or None when no admissible intervals overlap.

    Any joint interval starts at the later of the two starts and ends at
    the earlier of the two ends; the result collects the attainable bounds
    of those joint intervals.  Empty exactly when even the earliest joint
    start falls after the latest joint end.
    """
    b_lo = max(a.b_lo, c.b_lo)
    b_hi = max(a.b_hi, c.b_hi)
    e_lo = min(a.e_lo, c.e_lo)
    e_hi = min(a.e_hi, c.e_hi)
    if b_lo > e_hi:
        return None
    return TimeWindow(b_lo, b_hi, e_lo, e_hi)


def any_intersect(first, second) -> bool:
    """True when some window from `first` intersects some window from `second`."""
    return any(intersect(a, b) is not None for a in first for b in second)
