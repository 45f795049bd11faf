"""Density ridge estimation for geospatial point data and coverage evaluation of ridge envelopes."""

from .density import Bandwidth, DensityModel, kde, kde_gradient, kde_hessian, kde_many, knn_bandwidth
from .errors import (
    DegenerateDataError,
    DomainError,
    EmptyResultError,
    EmptyRidgesError,
    IngestError,
    MalformedHeaderError,
    MissingFileError,
    ParameterError,
    RidgeError,
    SchemaError,
    ThresholdTooHighError,
)
from .evaluation import (
    CoverageCurve,
    IterationStats,
    confidence_band,
    coverage_at,
    coverage_curve,
    default_radii,
    nearest_ridge_distance,
)
from .geo import (
    EARTH_RADIUS_KM,
    EARTH_RADIUS_MILES,
    Distance,
    GeoPoint,
    GeoPointSet,
    central_angle_law_of_cosines,
    degrees_to_radians,
    haversine,
    miles_to_radians,
    radians_to_miles,
)
from .ingest import FilterReport, IncidentRecord, filter_part1, load_csv, subsample
from .scms import (
    RidgePointSet,
    ScmsConfig,
    ScmsResult,
    init_mesh,
    percentile_cut,
    run_scms,
    scms_update,
    threshold_mesh,
)
from .synth import FilamentSpec, generate, true_curve_distance
