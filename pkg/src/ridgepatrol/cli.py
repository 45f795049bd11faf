"""Command-line entry point: ``ridgepatrol {bandwidth,estimate,evaluate,synth}``.

Data goes to files or stdout; diagnostics go to stderr.  CSV coordinates are
(lat, lon); GeoJSON coordinates are (lon, lat) per that format.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .density import Bandwidth, knn_bandwidth
from .errors import DegenerateDataError, DomainError, IngestError, MissingFileError, ParameterError, RidgeError
from .evaluation import coverage_curve, default_radii
from .geo import GeoPointSet
from .ingest import DEFAULT_SAMPLE_SIZE, filter_part1, load_csv, load_label_map, subsample, to_point_set
from .scms import ScmsConfig, run_scms
from .synth import FilamentSpec, generate

log = logging.getLogger("ridgepatrol")

EXIT_INGEST = 3
EXIT_PARAMETER = 4
EXIT_DEGENERATE = 5
EXIT_ALGORITHM = 6


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def _fmt(x) -> str:
    return repr(float(x))


def _sha256(path) -> str:
    if not Path(path).is_file():
        raise MissingFileError(f"no such file: {path}")
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------- ingest glue

def _ingest_args(p: argparse.ArgumentParser, year_flags=("--year",)):
    g = p.add_argument_group("input")
    g.add_argument("--type-col", default="Primary Type")
    g.add_argument("--lat-col", default="Latitude")
    g.add_argument("--lon-col", default="Longitude")
    g.add_argument("--date-col", default="Date")
    for flag in year_flags:
        g.add_argument(flag, type=int, default=None, help="keep rows whose date falls in this year")
    g.add_argument("--labels", default=None, help="label map file (LABEL = category per line)")
    g.add_argument("--all-types", action="store_true", help="skip the Part I type filter")
    g.add_argument("--sample", type=int, default=DEFAULT_SAMPLE_SIZE,
                   help="uniform subsample size (clipped to the data size)")
    g.add_argument("--seed", type=int, default=0)


def _ingest_settings(ns, year=None) -> dict:
    return {
        "schema": {"type": ns.type_col, "lat": ns.lat_col, "lon": ns.lon_col, "date": ns.date_col},
        "year": year,
        "labels": ns.labels,
        "all_types": ns.all_types,
    }


def _load_points(path, settings: dict) -> GeoPointSet:
    records, report = load_csv(path, settings["schema"], settings["year"])
    log.info("%s: %d rows read, %d outside year, %d dropped for missing fields",
             path, report.rows_read, report.rows_outside_year, report.rows_dropped_missing)
    if not settings["all_types"]:
        mapping = load_label_map(settings["labels"])
        records, report = filter_part1(records, mapping, report)
        log.info("%d Part I records (%d unmapped dropped)", len(records), report.rows_dropped_unmapped)
    if not records:
        raise DegenerateDataError(f"{path}: no usable records")
    return to_point_set(records)


def _sampled(points: GeoPointSet, n: int, seed: int) -> GeoPointSet:
    if n < 1:
        raise ParameterError(f"--sample must be >= 1, got {n}")
    if n > len(points):
        log.info("sample size %d exceeds %d points; using all", n, len(points))
        n = len(points)
    return subsample(points, n, seed)


# ---------------------------------------------------------------- scms glue

def _scms_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("ridge estimation")
    g.add_argument("--neighbors", type=int, default=10)
    g.add_argument("--bandwidth", type=float, default=None, help="fixed bandwidth (disables k-NN selection)")
    g.add_argument("--bandwidth-unit", choices=("degrees", "miles", "radians"), default="degrees")
    g.add_argument("--convergence", type=float, default=0.01, help="in degrees")
    g.add_argument("--percentage", type=float, default=None, help="keep the top p%% densest ridge points")
    g.add_argument("--mesh-size", type=int, default=None)
    g.add_argument("--threshold-quantile", type=float, default=0.5)
    g.add_argument("--max-iter", type=int, default=500)
    g.add_argument("--threads", type=int, default=None, help="worker threads (output is identical for any value)")


def _scms_config(ns) -> ScmsConfig:
    bw = None
    if ns.bandwidth is not None:
        if not ns.bandwidth > 0:
            raise ParameterError("--bandwidth must be positive")
        bw = {"degrees": Bandwidth.from_degrees, "miles": Bandwidth.from_miles, "radians": Bandwidth}[
            ns.bandwidth_unit](ns.bandwidth)
    return ScmsConfig(
        neighbors=ns.neighbors,
        bandwidth=bw,
        convergence=ns.convergence,
        percentage=ns.percentage,
        mesh_size=ns.mesh_size,
        threshold_quantile=ns.threshold_quantile,
        max_iterations=ns.max_iter,
        seed=ns.seed,
    )


def write_ridges_csv(path, ridges):
    deg = ridges.points.degrees
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lat", "lon", "density"])
        for (lat, lon), dens in zip(deg, ridges.density):
            w.writerow([_fmt(lat), _fmt(lon), _fmt(dens)])


def write_ridges_geojson(path, ridges):
    deg = ridges.points.degrees
    doc = {
        "type": "FeatureCollection",
        "features": [{
            "type": "Feature",
            "geometry": {"type": "MultiPoint", "coordinates": [[float(lon), float(lat)] for lat, lon in deg]},
            "properties": {"coordinate_order": "lon,lat", "density": [float(d) for d in ridges.density]},
        }],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def _write_ridges(path, ridges):
    if str(path).lower().endswith((".geojson", ".json")):
        write_ridges_geojson(path, ridges)
    else:
        write_ridges_csv(path, ridges)


# ---------------------------------------------------------------- commands

def cmd_bandwidth(ns) -> int:
    pts = _sampled(_load_points(ns.input, _ingest_settings(ns, ns.year)), ns.sample, ns.seed)
    bw = knn_bandwidth(pts, ns.neighbors)
    out = sys.stdout
    out.write(f"points {len(pts)}\nneighbors {ns.neighbors}\n")
    out.write(f"degrees {_fmt(bw.degrees)}\nmiles {_fmt(bw.miles)}\nradians {_fmt(bw.radians)}\n")
    return 0


def _estimate_manifest(ns) -> dict:
    return {
        "tool": "ridgepatrol",
        "version": _version(),
        "command": "estimate",
        "input": {"path": str(ns.input), "sha256": _sha256(ns.input)},
        "ingest": {**_ingest_settings(ns, ns.year), "sample": ns.sample, "seed": ns.seed},
        "scms": _scms_config(ns).to_dict(),
        "outputs": [str(p) for p in ns.out],
        "threads": ns.threads or 1,
    }


def _run_estimate(manifest: dict, threads: int) -> int:
    ing = manifest["ingest"]
    path = manifest["input"]["path"]
    if _sha256(path) != manifest["input"]["sha256"]:
        log.warning("%s differs from the file recorded in the manifest", path)
    pts = _sampled(_load_points(path, ing), ing["sample"], ing["seed"])
    config = ScmsConfig.from_dict(manifest["scms"])
    res = run_scms(pts, config, threads=threads)
    log.info("%d ridge points, %d iterations, %d unconverged, %d stranded",
             len(res.ridges), res.iterations_run, res.unconverged_count, res.stranded_count)
    if res.cut_empty:
        log.warning("percentage cut selected no ridge points")
    for p in manifest["outputs"]:
        _write_ridges(p, res.ridges)
    manifest["result"] = {
        "ridge_points": len(res.ridges),
        "iterations_run": res.iterations_run,
        "bandwidth_radians": res.bandwidth_used.radians,
        "threshold": res.threshold_used,
        "discarded_mesh": res.discarded_mesh_count,
        "stranded": res.stranded_count,
        "unconverged": res.unconverged_count,
    }
    return 0


def cmd_estimate(ns) -> int:
    if ns.from_manifest:
        with open(ns.from_manifest) as fh:
            manifest = json.load(fh)
        if ns.out:
            manifest["outputs"] = [str(p) for p in ns.out]
        threads = ns.threads or manifest.get("threads", 1)
    else:
        if ns.input is None:
            raise ParameterError("estimate needs an input CSV or --from-manifest")
        if not ns.out:
            ns.out = ["ridges.csv"]
        manifest = _estimate_manifest(ns)
        threads = ns.threads or 1
    manifest["started"] = _now()
    rc = _run_estimate(manifest, threads)
    manifest["finished"] = _now()
    if ns.manifest:
        with open(ns.manifest, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return rc


def cmd_evaluate(ns) -> int:
    if ns.runs < 2:
        raise ParameterError("--runs must be >= 2")
    train = _load_points(ns.train, _ingest_settings(ns, ns.train_year))
    test = _load_points(ns.test, _ingest_settings(ns, ns.test_year))
    radii = default_radii(ns.radii_min, ns.radii_max, ns.radii_step)
    config = _scms_config(ns)
    curve, iters, results = coverage_curve(
        train, test, config, ns.runs, radii, sample_size=ns.sample, test_size=ns.test_sample,
        base_seed=ns.seed, seed_step=ns.seed_step, threads=ns.threads or 1, ci_method=ns.ci, return_results=True)
    out = Path(ns.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "coverage.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["radius_miles", "mean_coverage", "ci_low", "ci_high"] + [f"run_{r}" for r in range(ns.runs)])
        for j, r in enumerate(curve.radii):
            w.writerow([_fmt(r), _fmt(curve.mean[j]), _fmt(curve.ci_low[j]), _fmt(curve.ci_high[j])]
                       + [_fmt(v) for v in curve.per_run_coverage[:, j]])
    with open(out / "iterations.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "seed", "iterations", "ridge_points", "unconverged"])
        for r, res in enumerate(results):
            w.writerow([r, res.config.seed, res.iterations_run, len(res.ridges), res.unconverged_count])
    log.info("iterations: min %g q1 %g median %g q3 %g max %g", iters.min, iters.q1, iters.median, iters.q3, iters.max)
    if ns.manifest:
        doc = {
            "tool": "ridgepatrol", "version": _version(), "command": "evaluate",
            "train": {"path": str(ns.train), "sha256": _sha256(ns.train), "year": ns.train_year},
            "test": {"path": str(ns.test), "sha256": _sha256(ns.test), "year": ns.test_year},
            "ingest": _ingest_settings(ns), "sample": ns.sample, "test_sample": ns.test_sample,
            "base_seed": ns.seed, "seed_step": ns.seed_step, "runs": ns.runs,
            "radii": [ns.radii_min, ns.radii_max, ns.radii_step], "ci": ns.ci,
            "scms": config.to_dict(), "threads": ns.threads or 1, "finished": _now(),
        }
        with open(ns.manifest, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_synth(ns) -> int:
    if ns.spec:
        spec = FilamentSpec.from_json(ns.spec)
    else:
        kw = {"kind": ns.kind, "n": ns.n, "noise_sigma": ns.noise, "seed": ns.seed}
        for name in ("center", "start", "end", "arc"):
            if getattr(ns, name) is not None:
                kw[name] = tuple(getattr(ns, name))
        for name in ("radius", "half_length", "angle"):
            if getattr(ns, name) is not None:
                kw[name] = getattr(ns, name)
        spec = FilamentSpec(**kw)
    pts = generate(spec)
    with open(ns.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Primary Type", "Latitude", "Longitude"])
        for lat, lon in pts.degrees:
            w.writerow(["SYNTHETIC", _fmt(lat), _fmt(lon)])
    if ns.save_spec:
        with open(ns.save_spec, "w") as fh:
            json.dump(spec.to_dict(), fh, indent=2)
            fh.write("\n")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ridgepatrol", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bandwidth", help="print the k-NN bandwidth of a dataset")
    p.add_argument("input")
    p.add_argument("--neighbors", type=int, default=10)
    _ingest_args(p)
    p.set_defaults(func=cmd_bandwidth)

    p = sub.add_parser("estimate", help="extract density ridges")
    p.add_argument("input", nargs="?")
    _ingest_args(p)
    _scms_args(p)
    p.add_argument("--out", action="append", default=[], help="ridges.csv or ridges.geojson (repeatable)")
    p.add_argument("--manifest", default=None, help="write the resolved run manifest here")
    p.add_argument("--from-manifest", default=None, help="re-run a previously written manifest")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="coverage of held-out incidents by ridge envelopes")
    p.add_argument("train")
    p.add_argument("test")
    _ingest_args(p, year_flags=("--train-year", "--test-year"))
    _scms_args(p)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--radii-min", type=float, default=0.1)
    p.add_argument("--radii-max", type=float, default=1.0)
    p.add_argument("--radii-step", type=float, default=0.01)
    p.add_argument("--test-sample", type=int, default=DEFAULT_SAMPLE_SIZE)
    p.add_argument("--seed-step", type=int, default=1)
    p.add_argument("--ci", choices=("t", "percentile"), default="t")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="write a synthetic filament scene as CSV")
    p.add_argument("--spec", default=None, help="JSON scene description (overrides other flags)")
    p.add_argument("--kind", default="line-segment", choices=("line-segment", "circle-arc", "gaussian-cloud", "cross"))
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.0005, help="radians")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--center", type=float, nargs=2, default=None, metavar=("LAT", "LON"))
    p.add_argument("--start", type=float, nargs=2, default=None, metavar=("LAT", "LON"))
    p.add_argument("--end", type=float, nargs=2, default=None, metavar=("LAT", "LON"))
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--arc", type=float, nargs=2, default=None, metavar=("FROM", "TO"))
    p.add_argument("--half-length", type=float, default=None)
    p.add_argument("--angle", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--save-spec", default=None)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        level=logging.WARNING - 10 * min(ns.verbose, 2))
    try:
        return ns.func(ns)
    except IngestError as e:
        log.error("%s", e)
        return EXIT_INGEST
    except (ParameterError, DomainError) as e:
        log.error("%s", e)
        return EXIT_PARAMETER
    except DegenerateDataError as e:
        log.error("%s", e)
        return EXIT_DEGENERATE
    except RidgeError as e:
        log.error("%s", e)
        return EXIT_ALGORITHM


if __name__ == "__main__":
    sys.exit(main())
