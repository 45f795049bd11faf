"""Ridge envelopes as patrol templates: coverage of held-out incidents."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .density import BLOCK
from .errors import EmptyRidgesError, ParameterError
from .geo import Distance, GeoPoint, GeoPointSet, miles_to_radians, pairwise_central_angle
from .ingest import DEFAULT_SAMPLE_SIZE, subsample
from .scms import RidgePointSet, ScmsConfig, ScmsResult, run_scms

log = logging.getLogger(__name__)


def _ridge_array(ridges) -> np.ndarray:
    pts = ridges.points if isinstance(ridges, RidgePointSet) else ridges
    if len(pts) == 0:
        raise EmptyRidgesError("ridge set is empty")
    return pts.radians


def nearest_distances(incidents: GeoPointSet, ridges) -> np.ndarray:
    """Central angle (radians) from every incident to its closest ridge point."""
    r = _ridge_array(ridges)
    x = incidents.radians
    out = np.empty(x.shape[0])
    for s in range(0, x.shape[0], BLOCK):
        out[s:s + BLOCK] = pairwise_central_angle(x[s:s + BLOCK], r).min(axis=1)
    return out


def nearest_ridge_distance(incident: GeoPoint, ridges, unit: str = "miles") -> Distance:
    d = nearest_distances(GeoPointSet.from_points([incident]), ridges)[0]
    return Distance(float(d), "radians").to(unit)


def coverage_from_distances(dist_rad: np.ndarray, radii_rad) -> np.ndarray:
    """Fraction of distances <= each radius."""
    srt = np.sort(dist_rad)
    return np.searchsorted(srt, np.asarray(radii_rad, dtype=np.float64), side="right") / srt.size


def coverage_at(incidents: GeoPointSet, ridges, radius: Distance) -> float:
    if len(incidents) == 0:
        raise ParameterError("no incidents to cover")
    return float(coverage_from_distances(nearest_distances(incidents, ridges), [radius.radians])[0])


def default_radii(lo: float = 0.1, hi: float = 1.0, step: float = 0.01) -> np.ndarray:
    """Envelope radii in miles, inclusive of both ends."""
    if step <= 0 or hi < lo:
        raise ParameterError("need step > 0 and hi >= lo")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 10)


def _mean(samples: np.ndarray) -> np.ndarray:
    """Column means, exact for constant columns (plain summation can drift by an ulp)."""
    mean = samples.mean(axis=0)
    const = np.ptp(samples, axis=0) == 0
    mean[const] = samples[0, const]
    return mean


def confidence_band(samples: np.ndarray, level: float = 0.95, method: str = "t"):
    """Per-column interval over runs (rows).

    ``method="t"`` gives mean +/- t * sd / sqrt(runs); ``"percentile"`` gives
    the empirical two-sided quantiles.  Both are clipped to [0, 1].
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    runs = samples.shape[0]
    if runs < 2:
        raise ParameterError("a confidence band needs at least two runs")
    mean = _mean(samples)
    if method == "t":
        half = stats.t.ppf(0.5 + level / 2, runs - 1) * samples.std(axis=0, ddof=1) / math.sqrt(runs)
        half[np.ptp(samples, axis=0) == 0] = 0.0
        low, high = mean - half, mean + half
    elif method == "percentile":
        alpha = (1 - level) / 2
        low, high = np.quantile(samples, [alpha, 1 - alpha], axis=0)
        low, high = np.minimum(low, mean), np.maximum(high, mean)
    else:
        raise ParameterError(f"unknown interval method {method!r}")
    return np.clip(low, 0.0, 1.0), np.clip(high, 0.0, 1.0)


@dataclass
class CoverageCurve:
    radii: np.ndarray  # miles
    per_run_coverage: np.ndarray  # runs x radii
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray

    @classmethod
    def from_runs(cls, radii, per_run, level=0.95, method="t") -> CoverageCurve:
        per_run = np.asarray(per_run, dtype=np.float64)
        low, high = confidence_band(per_run, level, method)
        return cls(np.asarray(radii, dtype=np.float64), per_run, _mean(per_run), low, high)


@dataclass
class IterationStats:
    per_run_iterations: list[int]
    min: float
    q1: float
    median: float
    q3: float
    max: float

    @classmethod
    def from_counts(cls, counts) -> IterationStats:
        """Quartiles by linear interpolation between order statistics (inclusive)."""
        c = np.asarray(counts, dtype=np.float64)
        q = np.percentile(c, [0, 25, 50, 75, 100], method="linear")
        return cls([int(v) for v in counts], *map(float, q))

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def coverage_curve(train: GeoPointSet, test: GeoPointSet, config: ScmsConfig = ScmsConfig(), runs: int = 10,
                   radii=None, *, sample_size: int = DEFAULT_SAMPLE_SIZE, test_size: int = DEFAULT_SAMPLE_SIZE,
                   base_seed: int = 0, seed_step: int = 1, test_seed: int | None = None,
                   threads: int = 1, ci_method: str = "t", return_results: bool = False):
    """Fit ridges on ``runs`` seeded training subsamples and sweep envelope radii.

    Run ``r`` uses seed ``base_seed + r * seed_step`` for both its training
    subsample and its mesh; ``seed_step=0`` repeats one run.  The test set is
    subsampled once so the band reflects training variation only.
    """
    if runs < 2:
        raise ParameterError("coverage_curve needs runs >= 2")
    radii = default_radii() if radii is None else np.asarray(radii, dtype=np.float64)
    if np.any(np.diff(radii) < 0):
        raise ParameterError("radii must be sorted ascending")
    test_seed = base_seed if test_seed is None else test_seed
    test_sub = subsample(test, min(test_size, len(test)), test_seed)
    n_train = min(sample_size, len(train))
    radii_rad = miles_to_radians(radii)

    def one(r: int):
        seed = base_seed + r * seed_step
        sub = subsample(train, n_train, seed)
        res = run_scms(sub, replace(config, seed=seed))
        cov = coverage_from_distances(nearest_distances(test_sub, res.ridges), radii_rad)
        log.info("run %d (seed %d): %d ridge points, %d iterations", r, seed, len(res.ridges), res.iterations_run)
        return cov, res

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(one, range(runs)))
    else:
        outs = [one(r) for r in range(runs)]
    curve = CoverageCurve.from_runs(radii, [o[0] for o in outs], method=ci_method)
    iters = IterationStats.from_counts([o[1].iterations_run for o in outs])
    if return_results:
        results: list[ScmsResult] = [o[1] for o in outs]
        return curve, iters, results
    return curve, iters
