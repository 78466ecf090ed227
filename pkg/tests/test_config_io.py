import json

import numpy as np
import pytest

from muhs import io
from muhs.config import ConfigError, build, config_hash, parse_config
from muhs.evolution import SolverConfig, simulate
from muhs.grid import make_grid
from muhs.initial_data import cosine_data


def minimal(**overrides):
    doc = {
        "grid": {"n_points": 64},
        "equation": {"lambda": 0.5},
        "time": {"t_end": 0.1, "dt": 0.01},
        "initial": {"kind": "cosine", "params": {"a": 1.0, "b": 0.02}},
    }
    for dotted, value in overrides.items():
        node = doc
        *head, last = dotted.split(".")
        for key in head:
            node = node.setdefault(key, {})
        node[last] = value
    return doc


def write_doc(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_minimal_config_applies_defaults(tmp_path):
    run = parse_config(write_doc(tmp_path, minimal()))
    cfg = run.solver
    assert cfg.dealias is True and cfg.snapshot_stride == 10
    assert cfg.blowup_guard is None and cfg.mollify_n is None and cfg.precision == "double"
    assert cfg.guard_for(1.0, 0.0) == pytest.approx(2000.0)
    assert run.initial.kind == "cosine" and run.output_dir is None
    assert run.source == tmp_path / "run.json"


@pytest.mark.parametrize("key, value, path", [
    ("equation.lambda", -1, "equation.lambda"),
    ("grid.n_points", 255, "grid.n_points"),
    ("grid.n_points", 4, "grid.n_points"),
    ("time.t_end", 0, "time.t_end"),
    ("time.cfl_safety", 1.5, "time.cfl_safety"),
    ("initial.kind", "gaussian", "initial.kind"),
    ("initial.mollify_n", 2, "initial.mollify_n"),
    ("solver.precision", "quad", "solver.precision"),
    ("solver.bogus", 1, "solver"),
    ("initial.params", {"a": 1.0}, "initial.params"),
])
def test_schema_errors_name_the_path(key, value, path):
    with pytest.raises(ConfigError) as info:
        build(minimal(**{key: value}))
    assert info.value.path == path
    assert str(info.value).startswith(path)


def test_lambda_zero_admitted():
    assert build(minimal(**{"equation.lambda": 0})).solver.lam == 0.0


def test_dt_and_cfl_are_exclusive():
    with pytest.raises(ConfigError) as info:
        build(minimal(**{"time.cfl_safety": 0.5}))
    assert info.value.path == "time"
    doc = minimal(**{"time.cfl_safety": 0.5})
    del doc["time"]["dt"]
    assert build(doc).solver.cfl_safety == 0.5


def test_peakon_zero_amplitude_rejected():
    doc = minimal(**{"initial.kind": "peakon", "initial.params": {"p": 0, "x0": 0.5}})
    with pytest.raises(ConfigError) as info:
        build(doc)
    assert info.value.path == "initial.params.p"


def test_file_initial_data_resolved_relative_to_config(tmp_path):
    grid = make_grid(64)
    io.write_field(tmp_path / "u0.csv", 1 + 0.01 * np.sin(2 * np.pi * grid.nodes))
    doc = minimal(**{"initial.kind": "file", "initial.params": {"path": "u0.csv"}})
    run = parse_config(write_doc(tmp_path, doc))
    assert run.initial.kind == "file"
    missing = minimal(**{"initial.kind": "file", "initial.params": {"path": "nope.csv"}})
    with pytest.raises(ConfigError) as info:
        parse_config(write_doc(tmp_path, missing))
    assert info.value.path == "initial.params.path"


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_config_hash_is_canonical():
    a = minimal()
    b = json.loads(json.dumps(a, sort_keys=True))
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(minimal(**{"equation.lambda": 0.6}))


def test_format_float_round_trips():
    rng = np.random.default_rng(1)
    for x in np.concatenate([rng.standard_normal(200), [np.pi, 1e-300, -5e300, 0.1]]):
        assert float(io.format_float(x)) == x
    assert io.format_float(0.1) == "0.10000000000000001"


def test_csv_round_trip(tmp_path):
    rows = np.random.default_rng(2).standard_normal((5, 3))
    path = io.write_csv(tmp_path / "x.csv", ("a", "b", "c"), rows)
    header, back = io.read_csv(path)
    assert header == ["a", "b", "c"]
    np.testing.assert_array_equal(back, rows)
    assert path.read_text().splitlines()[0] == "a,b,c"


def test_json_maps_nan_to_null(tmp_path):
    path = io.write_json(tmp_path / "x.json", {"b": np.float64("nan"), "a": np.int64(3),
                                               "c": np.array([1.5, np.inf])})
    assert json.loads(path.read_text()) == {"a": 3, "b": None, "c": [1.5, None]}
    assert path.read_text().index('"a"') < path.read_text().index('"b"')


def test_trajectory_round_trip(tmp_path):
    ic = cosine_data(make_grid(32), 1.0, 0.02)
    traj = simulate(SolverConfig(lam=0.5, n_points=32, t_end=0.05, dt=0.01, snapshot_stride=2), ic)
    files = io.write_trajectory(tmp_path, traj)
    assert [p.name for p in files] == ["u_0.csv", "u_2.csv", "u_4.csv", "u_5.csv", "trajectory.json"]
    index, snaps = io.load_trajectory(tmp_path)
    np.testing.assert_array_equal(snaps, traj.snapshots)
    assert index["status"] == "completed" and index["times"] == list(traj.times)


def test_manifest_reports_missing_outputs(tmp_path):
    (tmp_path / "a.csv").write_text("")
    manifest = io.RunManifest("abc", "simulate", str(tmp_path), "start", outputs=["a.csv", "b.csv"])
    assert manifest.missing_outputs() == ["b.csv"]
    data = json.loads(manifest.write().read_text())
    assert data["command"] == "simulate" and data["outputs"] == ["a.csv", "b.csv"]
