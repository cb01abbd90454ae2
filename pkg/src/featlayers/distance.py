"""Per-type distance metrics between feature values.

Five metrics are supported, one per feature type:

* numeric:  absolute difference
* nominal:  0 on exact match, undefined otherwise
* date:     whole days between two calendar dates
* time:     30-minute slots between two wall-clock times (non-wrapping)
* location: great-circle (haversine) distance on a sphere of radius R

``UNDEFINED`` (infinity) marks "no meaningful distance": a nominal
mismatch, or a comparison against a missing value.  It compares as
"not similar" under any finite threshold, which is exactly the intent.
"""

from __future__ import annotations

import datetime as _dt
import math

UNDEFINED = math.inf

#: Mean earth radius.  Distances come out in the unit R is given in.
EARTH_RADIUS_KM = 6371.0
EARTH_RADIUS_MILES = 3958.8

MINUTES_PER_SLOT = 30
SLOTS_PER_DAY = 48


def numeric_distance(a: float, b: float) -> float:
    """Absolute difference between two numeric values."""
    return abs(a - b)


def nominal_distance(a: str, b: str) -> float:
    """0 on exact match, UNDEFINED on mismatch."""
    return 0.0 if a == b else UNDEFINED


def date_distance(a: _dt.date, b: _dt.date) -> float:
    """Number of days between two calendar dates."""
    return float(abs((a - b).days))


def time_slot(hh: int, mm: int) -> int:
    """Map a wall-clock time to its 30-minute slot, 1..48.

    Slot 1 is [00:00, 00:30); slot 48 is [23:30, 24:00).
    """
    if not (0 <= hh <= 23 and 0 <= mm <= 59):
        raise ValueError(f"invalid time {hh:02d}:{mm:02d}")
    return 2 * hh + 1 + mm // MINUTES_PER_SLOT


def time_distance(a: tuple[int, int], b: tuple[int, int]) -> float:
    """Number of 30-minute slots between two times of day.

    Plain absolute difference of slot indices; midnight does not wrap,
    so (00:10, 23:50) is 47 slots apart, not 1.
    """
    return float(abs(time_slot(*a) - time_slot(*b)))


def haversine_distance(
    p: tuple[float, float], q: tuple[float, float], radius: float = EARTH_RADIUS_KM
) -> float:
    """Great-circle distance between two (lat, long) points in degrees.

    Result is in the unit of ``radius`` and lies in [0, pi * radius].
    """
    lat1, lon1 = math.radians(p[0]), math.radians(p[1])
    lat2, lon2 = math.radians(q[0]), math.radians(q[1])
    s_lat = math.sin((lat1 - lat2) / 2.0)
    s_lon = math.sin((lon1 - lon2) / 2.0)
    h = s_lat * s_lat + math.cos(lat1) * math.cos(lat2) * s_lon * s_lon
    # clamp guards rounding for near-antipodal points
    return 2.0 * radius * math.asin(min(1.0, math.sqrt(h)))


def feature_distance(spec, v1, v2) -> float:
    """Dispatch to the metric selected by ``spec.ftype``.

    ``None`` stands for a missing value; any comparison involving a
    missing value is UNDEFINED.
    """
    if v1 is None or v2 is None:
        return UNDEFINED
    ftype = spec.ftype
    if ftype == "numeric":
        return numeric_distance(v1, v2)
    if ftype == "nominal":
        return nominal_distance(v1, v2)
    if ftype == "date":
        return date_distance(v1, v2)
    if ftype == "time":
        return time_distance(v1, v2)
    if ftype == "location":
        return haversine_distance(v1, v2, spec.radius)
    raise TypeError(f"no distance metric for feature type {ftype!r}")
