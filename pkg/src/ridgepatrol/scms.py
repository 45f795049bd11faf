"""Subspace-constrained mean shift with density thresholding.

Mesh points are scattered over the data's bounding box, low-density ones are
discarded, and the rest are moved along the Hessian's normal direction until
successive shifts stop changing.  Kernel weights use great-circle distances;
shift vectors and the Hessian live in the flat (lat, lon) radian chart.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .density import BLOCK, Bandwidth, DensityModel, kde_many, knn_bandwidth
from .errors import DegenerateDataError, EmptyResultError, ParameterError, ThresholdTooHighError
from .geo import GeoPoint, GeoPointSet, pairwise_central_angle

log = logging.getLogger(__name__)

# Relative eigenvalue gap below which the Hessian is treated as isotropic.
_ISOTROPIC_GAP = 1e-12


class EmptyCutWarning(UserWarning):
    """A percentile cut selected no ridge points."""


@dataclass(frozen=True)
class ScmsConfig:
    neighbors: int = 10
    bandwidth: Bandwidth | None = None
    convergence: float = 0.01  # degrees
    percentage: float | None = None
    mesh_size: int | None = None  # None -> one mesh point per data point
    threshold_quantile: float = 0.5
    max_iterations: int = 500
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.neighbors, (int, np.integer)) and self.neighbors >= 1):
            raise ParameterError(f"neighbors must be a positive integer, got {self.neighbors!r}")
        if not (math.isfinite(self.convergence) and self.convergence > 0):
            raise ParameterError(f"convergence must be positive, got {self.convergence!r}")
        if self.percentage is not None and not 0 <= self.percentage <= 100:
            raise ParameterError(f"percentage must lie in [0, 100], got {self.percentage!r}")
        if self.mesh_size is not None and self.mesh_size < 1:
            raise ParameterError(f"mesh_size must be >= 1, got {self.mesh_size!r}")
        if not 0 <= self.threshold_quantile <= 1:
            raise ParameterError(f"threshold_quantile must lie in [0, 1], got {self.threshold_quantile!r}")
        if self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be >= 1, got {self.max_iterations!r}")
        if self.bandwidth is not None and not isinstance(self.bandwidth, Bandwidth):
            raise ParameterError("bandwidth must be a Bandwidth instance")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bandwidth"] = None if self.bandwidth is None else self.bandwidth.radians
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ScmsConfig:
        d = dict(d)
        if d.get("bandwidth") is not None:
            d["bandwidth"] = Bandwidth(float(d["bandwidth"]))
        return cls(**d)


@dataclass(frozen=True)
class RidgePointSet:
    points: GeoPointSet
    density: np.ndarray
    converged: np.ndarray = None
    iterations: np.ndarray = None

    def __post_init__(self):
        n = len(self.points)
        if self.converged is None:
            object.__setattr__(self, "converged", np.ones(n, dtype=bool))
        if self.iterations is None:
            object.__setattr__(self, "iterations", np.zeros(n, dtype=np.int64))

    def __len__(self):
        return len(self.points)

    def subset(self, mask) -> RidgePointSet:
        return RidgePointSet(self.points[mask], self.density[mask], self.converged[mask], self.iterations[mask])


@dataclass
class ScmsResult:
    ridges: RidgePointSet
    iterations_run: int
    bandwidth_used: Bandwidth
    threshold_used: float
    discarded_mesh_count: int
    stranded_count: int = 0
    mesh_size_used: int = 0
    cut_empty: bool = False
    config: ScmsConfig = field(default_factory=ScmsConfig)

    @property
    def per_point_iterations(self) -> np.ndarray:
        return self.ridges.iterations

    @property
    def unconverged_count(self) -> int:
        return int((~self.ridges.converged).sum())


def init_mesh(data: GeoPointSet, mesh_size: int, seed: int) -> GeoPointSet:
    """Uniform random points over the lat/lon bounding box of ``data``."""
    if len(data) == 0:
        raise DegenerateDataError("cannot build a mesh over an empty dataset")
    if mesh_size < 1:
        raise ParameterError(f"mesh_size must be >= 1, got {mesh_size!r}")
    rad = data.radians
    lo, hi = rad.min(axis=0), rad.max(axis=0)
    if np.all(lo == hi):
        raise DegenerateDataError("all data points coincide; bounding box is empty")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    return GeoPointSet(rng.uniform(lo, hi, size=(mesh_size, 2)), validate=False)


def threshold_mesh(mesh: GeoPointSet, model: DensityModel, threshold_quantile: float = 0.5):
    """Keep mesh points whose density is at least the given quantile of mesh densities.

    Returns ``(kept, tau)``.
    """
    if len(mesh) == 0:
        raise DegenerateDataError("empty mesh")
    dens = kde_many(model, mesh)
    tau = float(np.quantile(dens, threshold_quantile))
    keep = dens >= tau
    if not keep.any():
        raise ThresholdTooHighError(tau)
    return mesh[keep], tau


def smallest_eigvec(a, b, d):
    """Unit eigenvectors for the smallest eigenvalue of symmetric [[a, b], [b, d]].

    Vectorised over arrays.  Also returns the eigenvalues (smallest, largest)
    and a mask of numerically isotropic matrices, for which the vector is
    meaningless.
    """
    a, b, d = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (a, b, d)))
    half_tr = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), b)
    lam_min = half_tr - rad
    lam_max = half_tr + rad
    v1 = np.stack([b, lam_min - a], axis=-1)
    v2 = np.stack([lam_min - d, b], axis=-1)
    n1 = np.hypot(v1[..., 0], v1[..., 1])
    n2 = np.hypot(v2[..., 0], v2[..., 1])
    use1 = n1 >= n2
    v = np.where(use1[..., None], v1, v2)
    nv = np.where(use1, n1, n2)
    scale = np.maximum(np.abs(a), np.abs(d))
    isotropic = (2.0 * rad <= _ISOTROPIC_GAP * scale) | (nv == 0)
    v = v / np.where(nv == 0, 1.0, nv)[..., None]
    return v, lam_min, lam_max, isotropic


def _update_rows(pts: np.ndarray, model: DensityModel):
    """One projected mean-shift step for each row of ``pts``.

    Returns ``(shift, ok, lam_min)``; ``ok`` is False where every kernel
    weight underflowed.
    """
    data = model.data.radians
    dlat_data = np.ascontiguousarray(data[:, 0])
    dlon_data = np.ascontiguousarray(data[:, 1])
    n = data.shape[0]
    b2 = model.bandwidth.radians ** 2
    # Positive kernel constants cancel in the weighted mean and do not move
    # the eigenvectors, so the bare exponential is used.
    d = pairwise_central_angle(pts, data)
    w = np.exp(-(d * d) / (2.0 * b2))
    wsum = w.sum(axis=1)
    ok = wsum > np.finfo(float).tiny
    safe = np.where(ok, wsum, 1.0)
    mean_lat = (w * dlat_data).sum(axis=1) / safe
    mean_lon = (w * dlon_data).sum(axis=1) / safe
    mu_lat = (pts[:, 0:1] - dlat_data) / b2
    mu_lon = (pts[:, 1:2] - dlon_data) / b2
    diag = wsum / (n * b2)
    h_aa = (w * mu_lat * mu_lat).sum(axis=1) / n - diag
    h_ab = (w * mu_lat * mu_lon).sum(axis=1) / n
    h_bb = (w * mu_lon * mu_lon).sum(axis=1) / n - diag
    v, lam_min, _, iso = smallest_eigvec(h_aa, h_ab, h_bb)
    m = np.stack([mean_lat - pts[:, 0], mean_lon - pts[:, 1]], axis=-1)
    shift = v * (v * m).sum(axis=-1, keepdims=True)
    # Isotropic Hessian: the projection degenerates, take the full mean-shift step.
    shift = np.where(iso[:, None], m, shift)
    shift[~ok] = 0.0
    return shift, ok, lam_min


def mean_shift_hessian(model: DensityModel, x) -> np.ndarray:
    """Kernel-weighted Hessian used to pick the normal direction at ``x``.

    (1/|data|) sum_j w_j (mu_j mu_j^T - I / beta^2), mu_j = (x - theta_j) / beta^2,
    in the flat radian chart.
    """
    x = np.asarray(x.radians if isinstance(x, GeoPoint) else x, dtype=np.float64).reshape(2)
    data = model.data.radians
    b2 = model.bandwidth.radians ** 2
    d = pairwise_central_angle(x[None], data)[0]
    w = np.exp(-(d * d) / (2.0 * b2))
    mu = (x - data) / b2
    n = data.shape[0]
    diag = w.sum() / (n * b2)
    hab = (w * mu[:, 0] * mu[:, 1]).sum() / n
    return np.array([[(w * mu[:, 0] ** 2).sum() / n - diag, hab], [hab, (w * mu[:, 1] ** 2).sum() / n - diag]])


def projector(model: DensityModel, x) -> np.ndarray:
    """Rank-one projector onto the normal direction at ``x``."""
    h = mean_shift_hessian(model, x)
    v, _, _, _ = smallest_eigvec(h[0, 0], h[0, 1], h[1, 1])
    return np.outer(v, v)


def scms_update(point: GeoPoint, model: DensityModel):
    """Move one point by its projected mean-shift vector.

    Returns ``(new_point, shift)`` where shift is a (lat, lon) radian vector.
    Raises :class:`EmptyResultError` if the point is stranded (no kernel mass).
    """
    x = np.array([point.radians])
    shift, ok, _ = _update_rows(x, model)
    if not ok[0]:
        raise EmptyResultError(f"point {point} is stranded: kernel weights underflow")
    new = x[0] + shift[0]
    return GeoPoint.from_radians(float(new[0]), float(new[1])), shift[0]


def percentile_cut(ridges: RidgePointSet, model: DensityModel, p: float) -> RidgePointSet:
    """Keep ridge points whose density is among the top ``p`` percent."""
    if not 0 <= p <= 100:
        raise ParameterError(f"percentage must lie in [0, 100], got {p!r}")
    if len(ridges) == 0:
        raise ParameterError("percentile cut on an empty ridge set")
    dens = kde_many(model, ridges.points)
    top = math.floor(p * len(ridges) / 100.0)
    if top == 0:
        warnings.warn(f"percentage {p} selects no ridge points out of {len(ridges)}", EmptyCutWarning, stacklevel=2)
        return ridges.subset(np.zeros(len(ridges), dtype=bool))
    gamma = np.sort(dens)[::-1][top - 1]
    return ridges.subset(dens >= gamma)


def _iterate_block(args):
    pts, model = args
    return _update_rows(pts, model)


def run_scms(data: GeoPointSet, config: ScmsConfig = ScmsConfig(), *, threads: int = 1) -> ScmsResult:
    """Full ridge estimation pipeline.

    ``threads`` only controls how fixed-size blocks of points are scheduled;
    the result is identical for any value.
    """
    if len(data) < 2:
        raise DegenerateDataError("ridge estimation needs at least two data points")
    bw = config.bandwidth if config.bandwidth is not None else knn_bandwidth(data, config.neighbors)
    model = DensityModel(data, bw)
    mesh_size = config.mesh_size if config.mesh_size is not None else len(data)
    mesh = init_mesh(data, mesh_size, config.seed)
    kept, tau = threshold_mesh(mesh, model, config.threshold_quantile)
    log.info("bandwidth %.6g rad, tau %.6g, %d/%d mesh points kept", bw.radians, tau, len(kept), mesh_size)

    pts = kept.radians.copy()
    m = pts.shape[0]
    prev = np.full((m, 2), np.nan)
    active = np.ones(m, dtype=bool)
    stranded = np.zeros(m, dtype=bool)
    converged = np.zeros(m, dtype=bool)
    iters = np.zeros(m, dtype=np.int64)
    tol = math.radians(config.convergence)

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for n in range(1, config.max_iterations + 1):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            blocks = [idx[s:s + BLOCK] for s in range(0, idx.size, BLOCK)]
            jobs = [(pts[b], model) for b in blocks]
            outs = list(pool.map(_iterate_block, jobs)) if pool else [_iterate_block(j) for j in jobs]
            shift = np.concatenate([o[0] for o in outs])
            ok = np.concatenate([o[1] for o in outs])

            gone = idx[~ok]
            stranded[gone] = True
            active[gone] = False

            moved = idx[ok]
            s = shift[ok]
            pts[moved] += s
            iters[moved] = n
            with np.errstate(invalid="ignore"):
                done = np.hypot(*(prev[moved] - s).T) <= tol
            prev[moved] = s
            converged[moved[done]] = True
            active[moved[done]] = False
            log.debug("iteration %d: %d active", n, int(active.sum()))
    finally:
        if pool:
            pool.shutdown()

    alive = ~stranded
    if not alive.any():
        raise EmptyResultError("every mesh point was stranded")
    pts = pts[alive]
    # Wrap longitudes and clamp latitudes that may drift past the chart edges.
    out = np.abs(pts[:, 1]) > math.pi
    pts[out, 1] = (pts[out, 1] + math.pi) % (2 * math.pi) - math.pi
    pts[:, 0] = np.clip(pts[:, 0], -math.pi / 2, math.pi / 2)
    points = GeoPointSet(pts, validate=False)
    ridges = RidgePointSet(points, kde_many(model, points), converged[alive], iters[alive])
    result = ScmsResult(
        ridges=ridges,
        iterations_run=int(iters.max()) if m else 0,
        bandwidth_used=bw,
        threshold_used=tau,
        discarded_mesh_count=mesh_size - m,
        stranded_count=int(stranded.sum()),
        mesh_size_used=mesh_size,
        config=config,
    )
    if config.percentage is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", EmptyCutWarning)
            result.ridges = percentile_cut(ridges, model, config.percentage)
        if caught:
            result.cut_empty = True
            for w in caught:
                warnings.warn(w.message, w.category, stacklevel=2)
    return result
