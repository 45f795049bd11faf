"""Synthetic filament scenes with known ground truth.

Geometry is specified in radians in the local (lat, lon) chart; noise is
isotropic Gaussian in that chart.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError
from .geo import Distance, GeoPoint, GeoPointSet

KINDS = ("line-segment", "circle-arc", "gaussian-cloud", "cross")


@dataclass(frozen=True)
class FilamentSpec:
    kind: str = "line-segment"
    n: int = 2000
    noise_sigma: float = 0.0005
    seed: int = 0
    center: tuple[float, float] = (0.0, 0.0)
    # line-segment
    start: tuple[float, float] = (0.0, -0.01)
    end: tuple[float, float] = (0.0, 0.01)
    # circle-arc
    radius: float = 0.01
    arc: tuple[float, float] = (0.0, 2 * math.pi)
    # cross: two perpendicular arms through the center
    half_length: float = 0.01
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown filament kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if not self.noise_sigma >= 0:
            raise ParameterError("noise_sigma must be >= 0")
        for name in ("center", "start", "end", "arc"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> FilamentSpec:
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> FilamentSpec:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def segments(self) -> list[tuple[np.ndarray, np.ndarray]]:
        if self.kind == "line-segment":
            return [(np.array(self.start), np.array(self.end))]
        if self.kind == "cross":
            c = np.array(self.center)
            out = []
            for a in (self.angle, self.angle + math.pi / 2):
                u = self.half_length * np.array([math.sin(a), math.cos(a)])
                out.append((c - u, c + u))
            return out
        raise ParameterError(f"{self.kind} has no segments")


def _on_curve(spec: FilamentSpec, rng: np.random.Generator) -> np.ndarray:
    t = rng.uniform(0.0, 1.0, spec.n)
    if spec.kind == "gaussian-cloud":
        return np.tile(np.array(spec.center), (spec.n, 1))
    if spec.kind == "circle-arc":
        a0, a1 = spec.arc
        phi = a0 + t * (a1 - a0)
        c = np.array(spec.center)
        return c + spec.radius * np.column_stack([np.sin(phi), np.cos(phi)])
    segs = spec.segments()
    which = rng.integers(0, len(segs), spec.n) if len(segs) > 1 else np.zeros(spec.n, dtype=int)
    p0 = np.array([segs[k][0] for k in which])
    p1 = np.array([segs[k][1] for k in which])
    return p0 + t[:, None] * (p1 - p0)


def generate(spec: FilamentSpec) -> GeoPointSet:
    rng = np.random.default_rng(spec.seed)
    pts = _on_curve(spec, rng)
    if spec.noise_sigma > 0:
        pts = pts + rng.normal(0.0, spec.noise_sigma, pts.shape)
    return GeoPointSet(pts)


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    t = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return np.hypot(*(p - (a + t[:, None] * ab)).T)


def curve_distance(points, spec: FilamentSpec) -> np.ndarray:
    """Chart distance (radians) from each (lat, lon) radian row to the noiseless curve."""
    p = np.asarray(points.radians if isinstance(points, GeoPointSet) else points, dtype=np.float64).reshape(-1, 2)
    if spec.kind == "circle-arc":
        c = np.array(spec.center)
        rel = p - c
        r = np.hypot(rel[:, 0], rel[:, 1])
        a0, a1 = spec.arc
        if a1 - a0 >= 2 * math.pi:
            return np.abs(r - spec.radius)
        phi = np.arctan2(rel[:, 0], rel[:, 1])
        inside = np.mod(phi - a0, 2 * math.pi) <= (a1 - a0)
        ends = [c + spec.radius * np.array([math.sin(a), math.cos(a)]) for a in (a0, a1)]
        to_end = np.minimum(*(np.hypot(*(p - e).T) for e in ends))
        return np.where(inside, np.abs(r - spec.radius), to_end)
    if spec.kind in ("line-segment", "cross"):
        return np.min([_segment_distance(p, a, b) for a, b in spec.segments()], axis=0)
    raise ParameterError(f"no reference curve for kind {spec.kind!r}")


def line_distance(points, spec: FilamentSpec) -> np.ndarray:
    """Perpendicular distance to the infinite line(s) carrying the segment(s)."""
    p = np.asarray(points.radians if isinstance(points, GeoPointSet) else points, dtype=np.float64).reshape(-1, 2)
    out = []
    for a, b in spec.segments():
        u = (b - a) / np.hypot(*(b - a))
        rel = p - a
        out.append(np.abs(rel[:, 0] * u[1] - rel[:, 1] * u[0]))
    return np.min(out, axis=0)


def true_curve_distance(p: GeoPoint, spec: FilamentSpec) -> Distance:
    lat, lon = p.radians
    return Distance(float(curve_distance(np.array([[lat, lon]]), spec)[0]), "radians")
