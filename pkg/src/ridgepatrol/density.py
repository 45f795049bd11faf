"""Gaussian kernel density estimates on the sphere.

Kernel distances are great-circle central angles; derivatives are taken with
respect to (lat, lon) in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, DomainError, ParameterError
from .geo import EARTH_RADIUS_MILES, GeoPoint, GeoPointSet, hav_terms, pairwise_central_angle

# Rows of the query matrix handled per block; fixed so reductions are
# reproducible irrespective of how blocks are scheduled.
BLOCK = 256

# Below this, d^2(h) derivatives use their Taylor series (the closed forms cancel).
_SERIES_H = 1e-3


@dataclass(frozen=True)
class Bandwidth:
    """Kernel scale, stored as a central angle in radians."""

    radians: float

    def __post_init__(self):
        if not (math.isfinite(self.radians) and self.radians > 0):
            raise DomainError("bandwidth", self.radians)

    @classmethod
    def from_degrees(cls, deg: float) -> Bandwidth:
        return cls(deg * math.pi / 180.0)

    @classmethod
    def from_miles(cls, miles: float) -> Bandwidth:
        return cls(miles / EARTH_RADIUS_MILES)

    @property
    def degrees(self) -> float:
        return self.radians * 180.0 / math.pi

    @property
    def miles(self) -> float:
        return self.radians * EARTH_RADIUS_MILES


@dataclass(frozen=True)
class DensityModel:
    data: GeoPointSet
    bandwidth: Bandwidth

    def __post_init__(self):
        if len(self.data) < 1:
            raise DegenerateDataError("density model needs at least one data point")

    @property
    def dim(self) -> int:
        return 2

    @property
    def norm(self) -> float:
        """1 / (|data| (2 pi beta^2)^(d/2)) with d = 2."""
        b = self.bandwidth.radians
        return 1.0 / (len(self.data) * 2.0 * math.pi * b * b)


def _as_rad(x) -> np.ndarray:
    if isinstance(x, GeoPoint):
        return np.array([x.radians])
    if isinstance(x, GeoPointSet):
        return x.radians
    return np.asarray(x, dtype=np.float64).reshape(-1, 2)


def knn_bandwidth(data: GeoPointSet, k: int = 10) -> Bandwidth:
    """Mean great-circle distance from each point to its ``k`` nearest neighbours.

    Exact brute force; the point itself is excluded by index, so duplicate
    coordinates still count as (zero-distance) neighbours.
    """
    n = len(data)
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n - 1):
        raise ParameterError(f"neighbors must be in [1, {n - 1}], got {k!r}")
    rad = data.radians
    row_sums = np.empty(n)
    for start in range(0, n, BLOCK):
        stop = min(start + BLOCK, n)
        d = pairwise_central_angle(rad[start:stop], rad)
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        nearest = np.sort(np.partition(d, k - 1, axis=1)[:, :k], axis=1)
        row_sums[start:stop] = nearest.sum(axis=1)
    value = float(row_sums.sum()) / (k * n)
    if not value > 0:
        raise DegenerateDataError("k-NN bandwidth is zero (coincident points)")
    return Bandwidth(value)


def kernel_weights(model: DensityModel, x: np.ndarray) -> np.ndarray:
    """exp(-d^2 / (2 beta^2)) between query rows ``x`` and every data point."""
    b = model.bandwidth.radians
    d = pairwise_central_angle(x, model.data.radians)
    return np.exp(-(d * d) / (2.0 * b * b))


def kde_many(model: DensityModel, x) -> np.ndarray:
    x = _as_rad(x)
    out = np.empty(x.shape[0])
    for start in range(0, x.shape[0], BLOCK):
        stop = min(start + BLOCK, x.shape[0])
        out[start:stop] = kernel_weights(model, x[start:stop]).sum(axis=1)
    return out * model.norm


def kde(model: DensityModel, x: GeoPoint) -> float:
    return float(kde_many(model, x)[0])


def _sqdist_derivs(h):
    """First and second derivative of d^2 = (2 asin sqrt h)^2 with respect to h."""
    h = np.clip(h, 0.0, 1.0 - 1e-15)
    small = h < _SERIES_H
    g1 = 4.0 + h * (8.0 / 3.0 + h * (32.0 / 15.0 + h * (64.0 / 35.0)))
    g2 = 8.0 / 3.0 + h * (64.0 / 15.0 + h * (192.0 / 35.0))
    if not small.all():
        hb = np.where(small, 0.5, h)
        q = hb * (1.0 - hb)
        d = 2.0 * np.arcsin(np.sqrt(hb))
        g1 = np.where(small, g1, 2.0 * d / np.sqrt(q))
        g2 = np.where(small, g2, 2.0 / q - d * (1.0 - 2.0 * hb) / q**1.5)
    return g1, g2


def _local_terms(model: DensityModel, x: np.ndarray):
    """Kernel weights and derivatives of h for one query point (lat, lon) in radians."""
    lat, lon = x
    dlat = model.data.radians[:, 0] - lat
    dlon = model.data.radians[:, 1] - lon
    clat_i = np.cos(model.data.radians[:, 0])
    c, s = math.cos(lat), math.sin(lat)
    s2 = np.sin(0.5 * dlon) ** 2
    h = hav_terms(lat, lon, model.data.radians[:, 0], model.data.radians[:, 1])
    h_lat = -0.5 * np.sin(dlat) - s * clat_i * s2
    h_lon = -0.5 * c * clat_i * np.sin(dlon)
    h_latlat = 0.5 * np.cos(dlat) - c * clat_i * s2
    h_latlon = 0.5 * s * clat_i * np.sin(dlon)
    h_lonlon = 0.5 * c * clat_i * np.cos(dlon)
    b2 = model.bandwidth.radians ** 2
    d = 2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
    w = np.exp(-(d * d) / (2.0 * b2))
    grad_h = np.stack([h_lat, h_lon], axis=-1)
    hess_h = np.stack([np.stack([h_latlat, h_latlon], -1), np.stack([h_latlon, h_lonlon], -1)], -2)
    return h, w, grad_h, hess_h, b2


def kde_gradient(model: DensityModel, x) -> np.ndarray:
    """Exact gradient of :func:`kde` with respect to (lat, lon) radians."""
    x = _as_rad(x)[0]
    h, w, grad_h, _, b2 = _local_terms(model, x)
    g1, _ = _sqdist_derivs(h)
    coef = -w * g1 / (2.0 * b2)
    return model.norm * (coef[:, None] * grad_h).sum(axis=0)


def kde_hessian(model: DensityModel, x) -> np.ndarray:
    """Exact 2x2 Hessian of :func:`kde` with respect to (lat, lon) radians.

    Symmetric by construction: only the upper triangle is accumulated.
    """
    x = _as_rad(x)[0]
    h, w, gh, hh, b2 = _local_terms(model, x)
    g1, g2 = _sqdist_derivs(h)
    # E = -d^2 / (2 b^2);  d2(e^E) = e^E (dE dE^T + d2E)
    e1 = -g1 / (2.0 * b2)
    e2 = -g2 / (2.0 * b2)
    gE = e1[:, None] * gh
    hxx = (w * (gE[:, 0] * gE[:, 0] + e2 * gh[:, 0] * gh[:, 0] + e1 * hh[:, 0, 0])).sum()
    hxy = (w * (gE[:, 0] * gE[:, 1] + e2 * gh[:, 0] * gh[:, 1] + e1 * hh[:, 0, 1])).sum()
    hyy = (w * (gE[:, 1] * gE[:, 1] + e2 * gh[:, 1] * gh[:, 1] + e1 * hh[:, 1, 1])).sum()
    return model.norm * np.array([[hxx, hxy], [hxy, hyy]])
