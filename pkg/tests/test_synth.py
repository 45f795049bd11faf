import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ridgepatrol.errors import ParameterError
from ridgepatrol.geo import GeoPoint
from ridgepatrol.synth import FilamentSpec, curve_distance, generate, line_distance, true_curve_distance


def polyline_distance(p, verts):
    a, b = verts[:-1], verts[1:]
    ab = b - a
    t = np.clip(((p - a) * ab).sum(1) / (ab * ab).sum(1), 0, 1)
    return np.hypot(*(p - (a + t[:, None] * ab)).T).min()


def test_noiseless_line_on_segment():
    spec = FilamentSpec("line-segment", n=500, noise_sigma=0.0, start=(0.001, -0.01), end=(-0.002, 0.012))
    pts = generate(spec)
    assert np.allclose(curve_distance(pts, spec), 0, atol=1e-15)


@pytest.mark.parametrize("kind", ["line-segment", "circle-arc", "cross"])
def test_noiseless_points_have_zero_distance(kind):
    spec = FilamentSpec(kind, n=300, noise_sigma=0.0, seed=2)
    assert np.allclose(curve_distance(generate(spec), spec), 0, atol=1e-15)


def test_cloud_single_point_repeatable():
    spec = FilamentSpec("gaussian-cloud", n=1, noise_sigma=0.001, seed=4, center=(0.2, 0.3))
    a, b = generate(spec), generate(spec)
    assert a == b and len(a) == 1
    assert not np.array_equal(a.radians[0], [0.2, 0.3])


def test_circle_mean_radius():
    sigma, r, n = 0.0005, 0.01, 2000
    spec = FilamentSpec("circle-arc", n=n, noise_sigma=sigma, radius=r, seed=8)
    radii = np.hypot(*(generate(spec).radians - np.array(spec.center)).T)
    # The radius of a noisy point is biased outward by sigma^2 / (2 r) to second order.
    assert abs(radii.mean() - (r + sigma**2 / (2 * r))) < 2 * sigma / math.sqrt(n)


def test_center_of_circle_is_radius_away():
    spec = FilamentSpec("circle-arc", radius=0.01, center=(0.1, 0.2))
    assert true_curve_distance(GeoPoint.from_radians(0.1, 0.2), spec).radians == pytest.approx(0.01)


@pytest.mark.parametrize("kind, arc", [("circle-arc", (0.0, 2 * math.pi)), ("circle-arc", (0.3, 2.0)),
                                       ("line-segment", None), ("cross", None)])
def test_against_dense_polyline(rng, kind, arc):
    spec = FilamentSpec(kind, arc=arc or (0.0, 2 * math.pi), angle=0.4)
    if kind == "circle-arc":
        phi = np.linspace(*spec.arc, 100_001)
        curves = [np.array(spec.center) + spec.radius * np.column_stack([np.sin(phi), np.cos(phi)])]
    else:
        curves = [np.linspace(a, b, 100_001) for a, b in spec.segments()]
    for _ in range(10):
        p = rng.normal(0, 0.012, 2)
        expected = min(polyline_distance(p, c) for c in curves)
        assert curve_distance(p[None], spec)[0] == pytest.approx(expected, abs=1e-6)


def test_line_distance_is_perpendicular():
    spec = FilamentSpec("line-segment", start=(0.0, -0.01), end=(0.0, 0.01))
    assert line_distance(np.array([[0.003, 0.05]]), spec)[0] == pytest.approx(0.003)
    assert curve_distance(np.array([[0.003, 0.05]]), spec)[0] > 0.04


def test_cloud_has_no_curve():
    with pytest.raises(ParameterError):
        curve_distance(np.zeros((1, 2)), FilamentSpec("gaussian-cloud"))


def test_unknown_kind():
    with pytest.raises(ParameterError):
        FilamentSpec("spiral")


@given(st.sampled_from(["line-segment", "circle-arc", "cross", "gaussian-cloud"]), st.integers(0, 2**32 - 1))
def test_seeded_and_valid(kind, seed):
    spec = FilamentSpec(kind, n=50, seed=seed)
    a = generate(spec)
    assert a == generate(spec)
    if kind != "gaussian-cloud":
        assert np.all(curve_distance(a, spec) >= 0)


def test_filament_spec_round_trip(tmp_path):
    spec = FilamentSpec("cross", n=10, half_length=0.02, angle=0.3)
    assert FilamentSpec.from_dict(spec.to_dict()) == spec
