"""Great-circle geometry on a spherical Earth.

Everything downstream works in radians on the unit sphere; miles and degrees
only appear at API boundaries.  Coordinates are always ordered (lat, lon).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DomainError, ParameterError

# Mean Earth radius.
EARTH_RADIUS_MILES = 3958.7613
EARTH_RADIUS_KM = 6371.0088

UNITS = ("miles", "kilometers", "radians")

_ACOS_SLACK = 1e-9


def degrees_to_radians(x):
    return np.multiply(x, math.pi / 180.0) if isinstance(x, np.ndarray) else x * (math.pi / 180.0)


def radians_to_degrees(x):
    return np.multiply(x, 180.0 / math.pi) if isinstance(x, np.ndarray) else x * (180.0 / math.pi)


def miles_to_radians(d):
    return d / EARTH_RADIUS_MILES


def radians_to_miles(r):
    return r * EARTH_RADIUS_MILES


def _check_lat_lon(lat, lon):
    if not math.isfinite(lat) or not -90.0 <= lat <= 90.0:
        raise DomainError("lat", lat)
    if not math.isfinite(lon) or not -180.0 <= lon <= 180.0:
        raise DomainError("lon", lon)


@dataclass(frozen=True)
class GeoPoint:
    """A latitude/longitude pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        _check_lat_lon(self.lat, self.lon)

    @property
    def radians(self) -> tuple[float, float]:
        return degrees_to_radians(self.lat), degrees_to_radians(self.lon)

    @classmethod
    def from_radians(cls, lat: float, lon: float) -> GeoPoint:
        return cls(radians_to_degrees(lat), radians_to_degrees(lon))


@dataclass(frozen=True)
class Distance:
    value: float
    unit: str = "miles"

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ParameterError(f"unknown distance unit {self.unit!r}")
        if not self.value >= 0:
            raise DomainError("distance", self.value)

    @property
    def radians(self) -> float:
        if self.unit == "radians":
            return self.value
        if self.unit == "miles":
            return self.value / EARTH_RADIUS_MILES
        return self.value / EARTH_RADIUS_KM

    @property
    def miles(self) -> float:
        if self.unit == "miles":
            return self.value
        return self.radians * EARTH_RADIUS_MILES

    @property
    def kilometers(self) -> float:
        if self.unit == "kilometers":
            return self.value
        return self.radians * EARTH_RADIUS_KM

    def to(self, unit: str) -> Distance:
        return Distance(getattr(self, unit), unit)


class GeoPointSet:
    """An ordered, immutable collection of points.

    Stored canonically as an ``(n, 2)`` float64 array of (lat, lon) in
    radians.  Use :meth:`from_degrees` for data in the usual degree form.
    """

    __slots__ = ("_rad",)

    def __init__(self, radians: np.ndarray, *, validate: bool = True):
        arr = np.array(radians, dtype=np.float64, copy=True).reshape(-1, 2)
        if validate and arr.size:
            deg = arr * (180.0 / math.pi)
            bad = ~np.isfinite(arr).all(axis=1)
            bad |= np.abs(deg[:, 0]) > 90.0 + 1e-9
            bad |= np.abs(deg[:, 1]) > 180.0 + 1e-9
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                lat, lon = deg[i]
                field = "lat" if not (math.isfinite(lat) and abs(lat) <= 90.0 + 1e-9) else "lon"
                raise DomainError(field, float(deg[i, 0 if field == "lat" else 1]),
                                  f"invalid {field} at index {i}: {deg[i].tolist()!r}")
        arr.setflags(write=False)
        self._rad = arr

    @classmethod
    def from_degrees(cls, lat, lon=None) -> GeoPointSet:
        if lon is None:
            arr = np.asarray(lat, dtype=np.float64).reshape(-1, 2)
        else:
            arr = np.column_stack([np.asarray(lat, dtype=np.float64), np.asarray(lon, dtype=np.float64)])
        return cls(arr * (math.pi / 180.0))

    @classmethod
    def from_points(cls, points: Iterable[GeoPoint]) -> GeoPointSet:
        return cls.from_degrees([(p.lat, p.lon) for p in points])

    @property
    def radians(self) -> np.ndarray:
        return self._rad

    @property
    def degrees(self) -> np.ndarray:
        return self._rad * (180.0 / math.pi)

    def __len__(self):
        return self._rad.shape[0]

    def __getitem__(self, i) -> GeoPoint | GeoPointSet:
        if isinstance(i, (int, np.integer)):
            lat, lon = self._rad[i]
            return GeoPoint.from_radians(float(lat), float(lon))
        return GeoPointSet(self._rad[i], validate=False)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, GeoPointSet):
            return NotImplemented
        return np.array_equal(self._rad, other._rad)

    def __repr__(self):
        return f"GeoPointSet(n={len(self)})"


def hav(angle):
    """Haversine function, sin^2(angle / 2)."""
    s = np.sin(np.multiply(angle, 0.5))
    return s * s


def hav_terms(lat1, lon1, lat2, lon2):
    """Argument of the inverse haversine for the central angle (radians in)."""
    return hav(np.abs(lat2 - lat1)) + np.cos(lat1) * np.cos(lat2) * hav(np.abs(lon2 - lon1))


def central_angle(lat1, lon1, lat2, lon2):
    """Great-circle central angle in radians; broadcasts over arrays."""
    h = np.clip(hav_terms(lat1, lon1, lat2, lon2), 0.0, 1.0)
    return 2.0 * np.arcsin(np.sqrt(h))


def pairwise_central_angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix of central angles between rows of ``a`` and ``b`` ((n, 2) radian arrays)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
    return central_angle(a[:, None, 0], a[:, None, 1], b[None, :, 0], b[None, :, 1])


def haversine(a: GeoPoint, b: GeoPoint, unit: str = "miles") -> Distance:
    """Orthodromic distance between two points.

    >>> haversine(GeoPoint(0, 0), GeoPoint(0, 0)).value
    0.0
    """
    lat1, lon1 = a.radians
    lat2, lon2 = b.radians
    angle = float(central_angle(lat1, lon1, lat2, lon2))
    return Distance(angle, "radians").to(unit)


def central_angle_law_of_cosines(a: GeoPoint, b: GeoPoint) -> float:
    """Central angle via the spherical law of cosines.

    Poorly conditioned for short separations; kept as a cross-check for
    :func:`haversine`.
    """
    lat1, lon1 = a.radians
    lat2, lon2 = b.radians
    c = math.sin(lat1) * math.sin(lat2) + math.cos(lat1) * math.cos(lat2) * math.cos(abs(lon2 - lon1))
    if c > 1.0 + _ACOS_SLACK or c < -1.0 - _ACOS_SLACK:
        raise ArithmeticError(f"arccos argument {c!r} outside [-1, 1] beyond rounding slack")
    return math.acos(min(1.0, max(-1.0, c)))
