import json
import os

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from artifacts.report_writer import write_json
from artifacts.vtk_io import read_cell_field, read_structured_points, write_scalar_field, write_structured_points
from cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, run
from errors import ConfigError
from homog.study_report import CSV_COLUMNS
from mesh.cell_grid import build_cell_grid
from mesh.domain_grid import build_domain_grid, l_shape_mask
from mesh.fields import ScalarField, interpolate
from settings.config_loader import env_workers, load_config, parse_config

BASE = {"schema_version": 1, "coefficient": "laminate(1,4)", "cell": {"m": 8}, "domain": {"s": 8},
        "problem": {"inverse_eps": [2, 4, 8]}, "solver": {"tolerance": 1e-12}}


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("HOMOG_OUT", "HOMOG_WORKERS"):
        monkeypatch.delenv(name, raising=False)


def _config_file(tmp_path, overrides=None, name="config.json"):
    data = {**BASE, **(overrides or {})}
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


class TestSettings:
    def test_defaults_are_filled(self):
        config = parse_config({"schema_version": 1, "coefficient": "identity"})
        assert config.seed == 0
        assert config.data["cell"]["m"] == 16
        assert config.data["problem"]["inverse_eps"] == [4, 8, 16, 32]
        assert config.data["lipschitz"]["alpha"] is None

    def test_partial_sections_keep_other_defaults(self):
        config = parse_config({"schema_version": 1, "coefficient": "identity", "domain": {"s": 32}})
        assert config.data["domain"] == {"shape": "unit_square", "dimension": 2, "s": 32}

    @pytest.mark.parametrize("raw, field", [
        ({"schema_version": 1}, "<root>"),
        ({"schema_version": 2, "coefficient": "identity"}, "schema_version"),
        ({"schema_version": 1, "coefficient": "identity", "colour": "red"}, "<root>"),
        ({"schema_version": 1, "coefficient": "identity", "cell": {"m": 1}}, "cell.m"),
        ({"schema_version": 1, "coefficient": "identity", "cell": {"size": 4}}, "cell"),
        ({"schema_version": 1, "coefficient": "identity", "solver": {"tolerance": 2.0}}, "solver.tolerance"),
        ({"schema_version": 1, "coefficient": "identity", "problem": {"inverse_eps": [4, 4]}},
         "problem.inverse_eps"),
        ({"schema_version": 1, "coefficient": "identity", "domain": {"shape": "disk"}}, "domain.shape"),
    ])
    def test_schema_errors_name_the_field(self, raw, field):
        with pytest.raises(ConfigError) as info:
            parse_config(raw)
        assert info.value.field == field

    def test_problem_spec_mapping(self):
        spec = parse_config(BASE).problem_spec()
        assert spec.coefficient == "laminate(1,4)"
        assert spec.inverse_eps == (2, 4, 8)
        assert spec.cell_resolution == 8
        assert spec.solver.tolerance == 1e-12

    def test_semantic_errors_surface_from_the_problem(self):
        config = parse_config({**BASE, "cell": {"m": 3}})
        with pytest.raises(ConfigError) as info:
            config.problem_spec()
        assert info.value.field == "cell.m"

    def test_acceptance_overrides(self):
        config = parse_config({**BASE, "acceptance": {"min_slope_h1": 0.3}})
        thresholds = config.thresholds("unit_square")
        assert thresholds.min_slope_h1 == 0.3
        assert thresholds.max_slope_h1 == 1.2
        assert parse_config(BASE).thresholds("l_shape").require_pairwise_positive

    def test_seed_override(self):
        config = parse_config(BASE)
        assert config.with_seed(None) is config
        assert config.with_seed(9).seed == 9
        assert config.seed == 0

    def test_missing_and_malformed_files(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            load_config(str(tmp_path / "absent.json"))
        assert info.value.field == "--config"
        broken = tmp_path / "broken.json"
        broken.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(str(broken))

    def test_env_workers(self, monkeypatch):
        assert env_workers() is None
        monkeypatch.setenv("HOMOG_WORKERS", "3")
        assert env_workers() == 3
        monkeypatch.setenv("HOMOG_WORKERS", "many")
        with pytest.raises(ConfigError):
            env_workers()


class TestArtifacts:
    def test_cell_field_survives_a_dump(self, tmp_path, rng):
        grid = build_cell_grid(2, 6)
        field = ScalarField(grid, rng.standard_normal(grid.num_nodes))
        path = str(tmp_path / "psi.vtk")
        write_scalar_field(path, field, "psi")
        loaded = read_cell_field(path)
        assert loaded.grid.divisions == 6
        assert_array_equal(loaded.values, field.values)

    def test_one_dimensional_dump(self, tmp_path):
        field = interpolate(build_cell_grid(1, 4), lambda y: y[:, 0] ** 2)
        path = str(tmp_path / "line.vtk")
        write_scalar_field(path, field)
        assert_array_equal(read_cell_field(path, "phi").values, field.values)

    def test_masked_dump_marks_active_nodes(self, tmp_path):
        grid = build_domain_grid(2, 2, 2, l_shape_mask(2))
        path = str(tmp_path / "l.vtk")
        write_structured_points(path, grid, {"x": grid.coordinates[:, 0]})
        dump = read_structured_points(path)
        assert dump.dimensions == (5, 5, 1)
        assert dump.arrays["active"].sum() == grid.num_nodes
        assert dump.arrays["active"][4, 4, 0] == 0.0
        with pytest.raises(ConfigError):
            read_cell_field(path)

    def test_reader_rejects_other_files(self, tmp_path):
        path = tmp_path / "notes.vtk"
        path.write_text("hello\n")
        with pytest.raises(ConfigError):
            read_structured_points(str(path))
        with pytest.raises(ConfigError):
            read_structured_points(str(tmp_path / "absent.vtk"))

    def test_json_is_plain(self, tmp_path):
        path = str(tmp_path / "out" / "x.json")
        write_json(path, {"a": np.float64(1.5), "b": np.arange(2), "c": float("nan")})
        assert _read_json(path) == {"a": 1.5, "b": [0, 1], "c": None}


class TestCommands:
    def test_correctors(self, tmp_path):
        out = str(tmp_path / "out")
        assert run(["correctors", "--config", _config_file(tmp_path), "--out", out, "--serial"]) == EXIT_OK
        tensor = _read_json(os.path.join(out, "tensor.json"))
        assert_allclose(tensor["row_major"], [1.6, 0.0, 0.0, 2.5], atol=1e-8)
        assert tensor["m"] == 8
        assert len(tensor["iterations"]) == 2
        assert tensor["reuss_bound"][0][0] == pytest.approx(1.6)
        assert tensor["voigt_bound"][0][0] == pytest.approx(2.5)
        chi = read_cell_field(os.path.join(out, "chi_1.vtk"))
        assert chi.grid.divisions == 8
        assert abs(chi.mean()) < 1e-12

    def test_correctors_with_richardson(self, tmp_path):
        out = str(tmp_path / "out")
        path = _config_file(tmp_path, {"cell": {"m": 8, "richardson": [4, 8, 16]}})
        assert run(["correctors", "--config", path, "--out", out]) == EXIT_OK
        richardson = _read_json(os.path.join(out, "tensor.json"))["richardson"]
        assert richardson["m"] == [4, 8, 16]
        assert_allclose(richardson["tensors"][-1], [[1.6, 0.0], [0.0, 2.5]], atol=1e-8)

    def test_study_writes_artifacts(self, tmp_path):
        out = str(tmp_path / "out")
        path = _config_file(tmp_path, {"coefficient": "identity"})
        assert run(["study", "--config", path, "--out", out, "--seed", "5"]) == EXIT_OK
        errors = pd.read_csv(os.path.join(out, "errors.csv"))
        assert list(errors.columns) == CSV_COLUMNS
        assert_allclose(errors["eps"], [0.5, 0.25, 0.125])
        summary = _read_json(os.path.join(out, "summary.json"))
        assert summary["command"] == "study"
        assert summary["seed"] == 5
        assert summary["degenerate"]
        assert summary["config"] == parse_config({**BASE, "coefficient": "identity"}).with_seed(5).data
        assert set(summary["versions"]) == {"python", "numpy", "scipy", "pandas"}
        assert os.path.exists(os.path.join(out, "diagnostics.csv"))
        assert summary["timing_columns"] == ["seconds"]

    def test_defect(self, tmp_path, capsys):
        field_path = str(tmp_path / "ramp.vtk")
        write_scalar_field(field_path, interpolate(build_cell_grid(2, 8), lambda y: y[:, 0]))
        out = str(tmp_path / "out")
        assert run(["defect", "--field", field_path, "--out", out]) == EXIT_OK
        frame = pd.read_csv(os.path.join(out, "defect.csv"))
        assert frame["field"].iloc[0] == "ramp.vtk"
        assert frame["defect_axis_1"].iloc[0] == pytest.approx(1.0)
        assert frame["projection_distance"].iloc[0] == pytest.approx(np.sqrt(13.0 / 12.0), rel=1e-8)
        assert "defect_axis_1" in capsys.readouterr().out

    def test_out_dir_from_environment(self, tmp_path, monkeypatch):
        field_path = str(tmp_path / "flat.vtk")
        write_scalar_field(field_path, interpolate(build_cell_grid(2, 4), lambda y: np.ones(y.shape[0])))
        target = tmp_path / "from_env"
        monkeypatch.setenv("HOMOG_OUT", str(target))
        assert run(["defect", "--field", field_path, "--out", str(tmp_path / "ignored")]) == EXIT_OK
        assert (target / "defect.csv").exists()
        assert not (tmp_path / "ignored").exists()

    def test_twoscale(self, tmp_path):
        out = str(tmp_path / "out")
        path = _config_file(tmp_path, {"seed": 7, "twoscale": {"function": "sin_sin", "inverse_eps": [4, 8, 16],
                                                               "s": 4, "m_y": 4, "dump_cells": [0, 3]}})
        assert run(["twoscale", "--config", path, "--out", out]) in (0, 1)
        frame = pd.read_csv(os.path.join(out, "twoscale.csv"))
        assert list(frame["eps"]) == [0.25, 0.125, 0.0625]
        summary = _read_json(os.path.join(out, "summary.json"))
        assert summary["passed"]["poincare_ratio_stable"]
        index = _read_json(os.path.join(out, "unfolded_index.json"))
        assert [entry["cell"] for entry in index["cells"]] == [0, 3]
        assert read_cell_field(os.path.join(out, "unfolded_cell_3.vtk")).grid.divisions == 4

    @pytest.mark.parametrize("argv", [
        ["study"],
        ["defect"],
        ["study", "--config", "/nonexistent/config.json"],
        ["correctors", "--config", "CONFIG", "--workers", "0"],
    ])
    def test_config_errors_exit_with_three(self, tmp_path, argv):
        argv = [_config_file(tmp_path) if arg == "CONFIG" else arg for arg in argv]
        assert run(argv + ["--out", str(tmp_path / "out")]) == EXIT_CONFIG

    @pytest.mark.parametrize("argv", [
        ["study", "--workers", "two"],
        ["nonsense"],
        [],
        ["study", "--colour", "red"],
    ])
    def test_usage_errors_exit_with_three(self, tmp_path, argv, capsys):
        assert run(argv + ["--out", str(tmp_path / "out")]) == EXIT_CONFIG
        assert "usage:" in capsys.readouterr().err

    def test_invalid_schema_exits_with_three(self, tmp_path):
        path = _config_file(tmp_path, {"solver": {"tolerance": 0}})
        assert run(["correctors", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_CONFIG

    def test_solver_failure_exits_with_two(self, tmp_path):
        path = _config_file(tmp_path, {"solver": {"tolerance": 1e-12, "max_iterations": 1}})
        assert run(["correctors", "--config", path, "--out", str(tmp_path / "out"), "--serial"]) == EXIT_NUMERIC
