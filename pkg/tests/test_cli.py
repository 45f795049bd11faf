import csv
import json

import numpy as np
import pytest

from ridgepatrol import cli
from ridgepatrol.geo import GeoPoint, haversine


@pytest.fixture(scope="module")
def scene(tmp_path_factory):
    d = tmp_path_factory.mktemp("scene")
    path = d / "line.csv"
    assert cli.main(["synth", "--kind", "line-segment", "--n", "400", "--noise", "0.0005",
                     "--seed", "2", "--out", str(path)]) == 0
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_bandwidth_two_points(tmp_path, capsys):
    p = tmp_path / "two.csv"
    p.write_text("Primary Type,Latitude,Longitude\nTHEFT,41.88,-87.63\nROBBERY,41.79,-87.60\n")
    assert cli.main(["bandwidth", str(p), "--neighbors", "1"]) == 0
    out = dict(line.split() for line in capsys.readouterr().out.splitlines())
    expected = haversine(GeoPoint(41.88, -87.63), GeoPoint(41.79, -87.60)).miles
    assert float(out["miles"]) == pytest.approx(expected, rel=1e-12)
    assert out["neighbors"] == "1"


def test_bandwidth_is_reproducible(scene, capsys):
    args = ["bandwidth", str(scene), "--all-types", "--sample", "200", "--seed", "4"]
    cli.main(args)
    first = capsys.readouterr().out
    cli.main(args)
    assert capsys.readouterr().out == first
    assert "neighbors 10" in first


def test_part1_filter_drops_synthetic_labels(scene):
    assert cli.main(["bandwidth", str(scene)]) == cli.EXIT_DEGENERATE


def test_synth_deterministic(tmp_path, scene):
    again = tmp_path / "again.csv"
    cli.main(["synth", "--kind", "line-segment", "--n", "400", "--noise", "0.0005", "--seed", "2", "--out", str(again)])
    assert again.read_bytes() == scene.read_bytes()


def test_synth_from_spec(tmp_path):
    spec = tmp_path / "spec.json"
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["synth", "--kind", "circle-arc", "--radius", "0.005", "--n", "50", "--out", str(out1),
                     "--save-spec", str(spec)]) == 0
    assert json.loads(spec.read_text())["radius"] == 0.005
    assert cli.main(["synth", "--spec", str(spec), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


class TestEstimate:
    def test_outputs_and_manifest_replay(self, tmp_path, scene):
        csv_out, gj_out, man = tmp_path / "r.csv", tmp_path / "r.geojson", tmp_path / "m.json"
        rc = cli.main(["estimate", str(scene), "--all-types", "--sample", "300", "--convergence", "0.001",
                       "--out", str(csv_out), "--out", str(gj_out), "--manifest", str(man)])
        assert rc == 0
        rows = read_csv(csv_out)
        assert list(rows[0]) == ["lat", "lon", "density"]
        gj = json.loads(gj_out.read_text())
        coords = gj["features"][0]["geometry"]["coordinates"]
        assert gj["features"][0]["geometry"]["type"] == "MultiPoint"
        assert len(coords) == len(rows)
        # GeoJSON is lon,lat; CSV is lat,lon.
        assert coords[0] == [float(rows[0]["lon"]), float(rows[0]["lat"])]

        manifest = json.loads(man.read_text())
        assert manifest["scms"]["neighbors"] == 10 and manifest["scms"]["percentage"] is None
        replay = tmp_path / "replay.csv"
        assert cli.main(["estimate", "--from-manifest", str(man), "--out", str(replay)]) == 0
        assert replay.read_bytes() == csv_out.read_bytes()

    def test_percentage(self, tmp_path, scene):
        full, cut = tmp_path / "full.csv", tmp_path / "cut.csv"
        base = ["estimate", str(scene), "--all-types", "--convergence", "0.001", "--mesh-size", "200"]
        cli.main(base + ["--out", str(full)])
        cli.main(base + ["--percentage", "5", "--out", str(cut)])
        n_full, n_cut = len(read_csv(full)), len(read_csv(cut))
        assert n_cut == int(0.05 * n_full)

    def test_bandwidth_units(self, tmp_path, scene):
        man = tmp_path / "m.json"
        cli.main(["estimate", str(scene), "--all-types", "--bandwidth", "0.001", "--bandwidth-unit", "radians",
                  "--convergence", "0.001", "--mesh-size", "50", "--out", str(tmp_path / "r.csv"),
                  "--manifest", str(man)])
        assert json.loads(man.read_text())["scms"]["bandwidth"] == 0.001

    @pytest.mark.parametrize("args, code", [
        (["estimate", "missing.csv"], cli.EXIT_INGEST),
        (["estimate", "{scene}", "--all-types", "--neighbors", "0"], cli.EXIT_PARAMETER),
        (["estimate", "{scene}", "--all-types", "--bandwidth", "-1"], cli.EXIT_PARAMETER),
        (["estimate", "{scene}", "--all-types", "--percentage", "120"], cli.EXIT_PARAMETER),
        (["estimate", "{scene}"], cli.EXIT_DEGENERATE),
    ])
    def test_exit_codes(self, tmp_path, scene, args, code):
        args = [a.format(scene=scene) for a in args] + ["--out", str(tmp_path / "o.csv")]
        assert cli.main(args) == code

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("Latitude,Longitude\n1,2\n")
        assert cli.main(["estimate", str(p), "--out", str(tmp_path / "o.csv")]) == cli.EXIT_INGEST


def test_evaluate(tmp_path, scene):
    out = tmp_path / "eval"
    rc = cli.main(["evaluate", str(scene), str(scene), "--all-types", "--runs", "2", "--sample", "300",
                   "--test-sample", "200", "--convergence", "0.001", "--mesh-size", "150",
                   "--out-dir", str(out), "--manifest", str(tmp_path / "e.json")])
    assert rc == 0
    rows = read_csv(out / "coverage.csv")
    assert len(rows) == 91
    assert list(rows[0]) == ["radius_miles", "mean_coverage", "ci_low", "ci_high", "run_0", "run_1"]
    mean = np.array([float(r["mean_coverage"]) for r in rows])
    assert np.all(np.diff(mean) >= 0)
    assert float(rows[0]["radius_miles"]) == 0.1 and float(rows[-1]["radius_miles"]) == 1.0
    iters = read_csv(out / "iterations.csv")
    assert [int(r["seed"]) for r in iters] == [0, 1]


def test_evaluate_needs_two_runs(tmp_path, scene):
    assert cli.main(["evaluate", str(scene), str(scene), "--all-types", "--runs", "1",
                     "--out-dir", str(tmp_path)]) == cli.EXIT_PARAMETER
