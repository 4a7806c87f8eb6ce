"""File-format round trips, parse diagnostics, and CLI behavior."""

import json
import subprocess
import sys

import numpy as np
import pytest

from fewmode import io
from fewmode.cli import main
from fewmode.dynamics import (
    EmitterSpec,
    solve_fewmode_single_excitation,
    solve_ww_exact,
    tilde_populations,
    tilde_transform,
)
from fewmode.errors import DataWarning, ParseError, StageError, ValidationError
from fewmode.field import GreensFunctionTable
from fewmode.pipeline import run_pipeline
from fewmode.spectral import ModelParameters, SpectralDensityTable, compute_poles, evaluate_jmod
from fewmode.synthetic import fano_three_mode, sampling_grid


@pytest.fixture(scope="module")
def fano_table():
    params = fano_three_mode()
    grid = sampling_grid(params, n_points=2001)
    return evaluate_jmod(params, grid)


@pytest.fixture(scope="module")
def fano_csv(fano_table, tmp_path_factory):
    path = tmp_path_factory.mktemp("inputs") / "fano.csv"
    io.write_spectrum(path, fano_table)
    return str(path)


@pytest.fixture(scope="module")
def green_csv(tmp_path_factory):
    w = np.linspace(0.8, 2.4, 801)
    line = 1e-7 * (0.07) ** 2 / ((w - 1.55) ** 2 + 0.07**2)
    img = np.zeros((2, w.size, 3))
    img[0, :, 0] = line
    img[1, :, 2] = 0.5 * line
    gtable = GreensFunctionTable(
        point_ids=("origin", "probe"),
        coordinates=np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 5.0]]),
        omega_grid=w,
        im_g_projected=img,
    )
    path = tmp_path_factory.mktemp("green") / "green.csv"
    io.write_green_table(path, gtable)
    return str(path)


@pytest.fixture(scope="module")
def fitted_params_json(fano_csv, tmp_path_factory):
    """One shared CLI fit; later tests reuse the artifact."""
    out = tmp_path_factory.mktemp("fit")
    params = str(out / "params.json")
    report = str(out / "report.json")
    code = main(["fit", fano_csv, "--n-modes", "3", "--seed", "3",
                 "--out", params, "--report", report])
    assert code == 0
    return params, report


class TestSpectrumFormat:
    def test_round_trip_exact(self, fano_table, tmp_path):
        path = tmp_path / "s.csv"
        io.write_spectrum(path, fano_table)
        back = io.read_spectrum(path)
        assert np.array_equal(back.omega_grid, fano_table.omega_grid)
        assert np.array_equal(back.j_values, fano_table.j_values)

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("omega,J\n1.0,0.5\n")
        with pytest.raises(ParseError, match="header"):
            io.read_spectrum(path)

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("")
        with pytest.raises(ParseError, match="empty"):
            io.read_spectrum(path)

    def test_rejects_header_only(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("omega_eV,J_eV\n")
        with pytest.raises(ParseError, match="no data rows"):
            io.read_spectrum(path)

    def test_non_numeric_cell_reports_line(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("omega_eV,J_eV\n1.0,0.5\n1.1,oops\n1.2,0.7\n")
        with pytest.raises(ParseError, match="line 3"):
            io.read_spectrum(path)

    def test_wrong_column_count_reports_line(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("omega_eV,J_eV\n1.0,0.5\n1.1,0.6,9\n")
        with pytest.raises(ParseError, match="line 3.*expected 2 columns"):
            io.read_spectrum(path)

    def test_tiny_negative_clamped_with_warning(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("omega_eV,J_eV\n1.0,0.5\n1.1,-5e-16\n1.2,0.7\n")
        with pytest.warns(DataWarning, match="clamped"):
            table = io.read_spectrum(path)
        assert table.j_values[1] == 0.0

    def test_large_negative_rejected_with_line(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("omega_eV,J_eV\n1.0,0.5\n1.1,-0.05\n1.2,0.7\n")
        with pytest.raises(ParseError, match="line 3"):
            io.read_spectrum(path)

    def test_unsorted_rows_sorted_with_warning(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("omega_eV,J_eV\n1.2,0.7\n1.0,0.5\n")
        with pytest.warns(DataWarning, match="sort"):
            table = io.read_spectrum(path)
        assert np.array_equal(table.omega_grid, [1.0, 1.2])

    def test_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("omega_eV,J_eV\n1.0,0.5\n\n1.2,0.7\n\n")
        table = io.read_spectrum(path)
        assert table.omega_grid.size == 2


class TestParamsFormat:
    def test_round_trip_exact(self, tmp_path):
        params = fano_three_mode()
        path = tmp_path / "p.json"
        io.write_params(path, params)
        back = io.read_params(path)
        assert np.array_equal(back.omega, params.omega)
        assert np.array_equal(back.kappa, params.kappa)
        assert np.array_equal(back.g, params.g)

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"n_modes": 1, "omega": [[1.0]], "kappa": [0.1]}))
        with pytest.raises(ParseError, match="missing keys: g"):
            io.read_params(path)

    def test_asymmetric_omega_rejected(self, tmp_path):
        path = tmp_path / "p.json"
        payload = {"n_modes": 2, "omega": [[1.0, 0.1], [0.2, 1.5]],
                   "kappa": [0.1, 0.1], "g": [0.01, 0.01]}
        path.write_text(json.dumps(payload))
        with pytest.raises(ParseError, match="symmetric"):
            io.read_params(path)

    def test_shape_mismatch_rejected(self, tmp_path):
        path = tmp_path / "p.json"
        payload = {"n_modes": 3, "omega": [[1.0]], "kappa": [0.1], "g": [0.01]}
        path.write_text(json.dumps(payload))
        with pytest.raises(ParseError, match="3x3"):
            io.read_params(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text("{not json")
        with pytest.raises(ParseError, match="invalid JSON"):
            io.read_params(path)

    def test_non_integer_n_modes_rejected(self, tmp_path):
        path = tmp_path / "p.json"
        payload = {"n_modes": 1.5, "omega": [[1.0]], "kappa": [0.1], "g": [0.01]}
        path.write_text(json.dumps(payload))
        with pytest.raises(ParseError, match="positive integer"):
            io.read_params(path)


class TestGreenFormat:
    def test_round_trip_exact(self, green_csv, tmp_path):
        g1 = io.read_green_table(green_csv)
        path = tmp_path / "g.csv"
        io.write_green_table(path, g1)
        g2 = io.read_green_table(path)
        assert g1.point_ids == g2.point_ids
        assert np.array_equal(g1.coordinates, g2.coordinates)
        assert np.array_equal(g1.omega_grid, g2.omega_grid)
        assert np.array_equal(g1.im_g_projected, g2.im_g_projected)

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("point_id,x,y,z,omega,gx,gy,gz\na,0,0,0,1,0,0,0\n")
        with pytest.raises(ParseError, match="header"):
            io.read_green_table(path)

    def test_rejects_grid_mismatch_between_points(self, tmp_path):
        path = tmp_path / "g.csv"
        rows = [io.GREEN_HEADER,
                "a,0,0,0,1.0,1e-9,0,0", "a,0,0,0,1.1,1e-9,0,0",
                "b,1,0,0,1.0,1e-9,0,0", "b,1,0,0,1.2,1e-9,0,0"]
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(ParseError, match="different frequency grid"):
            io.read_green_table(path)

    def test_rejects_moving_point(self, tmp_path):
        path = tmp_path / "g.csv"
        rows = [io.GREEN_HEADER,
                "a,0,0,0,1.0,1e-9,0,0", "a,0,0,1,1.1,1e-9,0,0"]
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(ParseError, match="moved"):
            io.read_green_table(path)

    def test_unsorted_rows_sorted_with_warning(self, tmp_path):
        path = tmp_path / "g.csv"
        rows = [io.GREEN_HEADER,
                "a,0,0,0,1.1,2e-9,0,0", "a,0,0,0,1.0,1e-9,0,0"]
        path.write_text("\n".join(rows) + "\n")
        with pytest.warns(DataWarning, match="sort"):
            gtable = io.read_green_table(path)
        assert np.array_equal(gtable.omega_grid, [1.0, 1.1])
        assert gtable.im_g_projected[0, 0, 0] == 1e-9

    def test_point_order_is_first_appearance(self, tmp_path):
        path = tmp_path / "g.csv"
        rows = [io.GREEN_HEADER,
                "z_last,0,0,0,1.0,1e-9,0,0", "z_last,0,0,0,1.1,1e-9,0,0",
                "a_first,1,0,0,1.0,1e-9,0,0", "a_first,1,0,0,1.1,1e-9,0,0"]
        path.write_text("\n".join(rows) + "\n")
        gtable = io.read_green_table(path)
        assert gtable.point_ids == ("z_last", "a_first")


class TestTrajectoryFormat:
    def test_model_trajectory_columns(self, tmp_path):
        params = fano_three_mode()
        traj = solve_fewmode_single_excitation(
            params, EmitterSpec(1.55), 20.0, 0.5)
        path = tmp_path / "t.csv"
        io.write_trajectory(path, traj)
        cols = io.read_table_csv(path)
        assert list(cols) == ["t_fs", "pop_e", "pop_mode_1", "pop_mode_2", "pop_mode_3"]
        assert np.allclose(cols["pop_e"], traj.emitter_population, rtol=0, atol=0)
        assert np.allclose(cols["pop_mode_2"], traj.mode_populations[:, 1], rtol=0, atol=0)

    def test_tilde_columns_appended(self, tmp_path):
        params = fano_three_mode()
        traj = solve_fewmode_single_excitation(
            params, EmitterSpec(1.55), 20.0, 0.5)
        tilde = tilde_populations(traj, tilde_transform(params))
        path = tmp_path / "t.csv"
        io.write_trajectory(path, traj, tilde_pops=tilde)
        cols = io.read_table_csv(path)
        assert "pop_tilde_3" in cols
        assert np.allclose(cols["pop_tilde_1"], tilde[:, 0], rtol=0, atol=0)

    @pytest.mark.filterwarnings("ignore::fewmode.errors.CoverageWarning")
    def test_continuum_trajectory_has_no_mode_columns(self, fano_table, tmp_path):
        traj = solve_ww_exact(fano_table, EmitterSpec(1.55), 20.0, 0.1)
        path = tmp_path / "t.csv"
        io.write_trajectory(path, traj)
        cols = io.read_table_csv(path)
        assert list(cols) == ["t_fs", "pop_e"]

    def test_tilde_shape_mismatch_rejected(self, tmp_path):
        params = fano_three_mode()
        traj = solve_fewmode_single_excitation(
            params, EmitterSpec(1.55), 20.0, 0.5)
        with pytest.raises(ValidationError, match="time grid"):
            io.write_trajectory(tmp_path / "t.csv", traj,
                                tilde_pops=np.zeros((3, 3)))


class TestPolesFormat:
    def test_round_trip(self, tmp_path):
        poles = compute_poles(fano_three_mode())
        path = tmp_path / "poles.csv"
        io.write_poles(path, poles)
        cols = io.read_table_csv(path)
        assert list(cols) == ["re_eV", "im_eV", "residue_re", "residue_im"]
        assert np.array_equal(cols["re_eV"], poles.values.real)
        assert np.array_equal(cols["im_eV"], poles.values.imag)
        assert np.array_equal(cols["residue_re"], poles.residues.real)
        assert np.array_equal(cols["residue_im"], poles.residues.imag)


class TestCliFit:
    def test_fit_recovers_spectrum(self, fano_table, fitted_params_json):
        params_path, report_path = fitted_params_json
        params = io.read_params(params_path)
        refit = evaluate_jmod(params, fano_table.omega_grid)
        rel = np.linalg.norm(refit.j_values - fano_table.j_values)
        rel /= np.linalg.norm(fano_table.j_values)
        assert rel < 1e-6
        report = io.read_json(report_path)
        assert report["converged"] is True
        assert report["n_modes"] == 3
        assert report["poles"] is not None

    def test_nonconvergence_exits_2(self, fano_csv, tmp_path):
        code = main(["fit", fano_csv, "--n-modes", "3", "--max-iterations", "2",
                     "--out", str(tmp_path / "p.json")])
        assert code == 2

    def test_missing_input_exits_1(self, tmp_path):
        code = main(["fit", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "p.json")])
        assert code == 1

    def test_demo_and_path_conflict(self, fano_csv, tmp_path):
        code = main(["fit", fano_csv, "--demo", "--out", str(tmp_path / "p.json")])
        assert code == 1

    def test_bad_n_modes_is_usage_error(self, fano_csv, tmp_path, capsys):
        code = main(["fit", fano_csv, "--n-modes", "three",
                     "--out", str(tmp_path / "p.json")])
        assert code == 1
        capsys.readouterr()


class TestCliEvalPoles:
    def test_eval_matches_library(self, fitted_params_json, tmp_path):
        params_path, _ = fitted_params_json
        out = tmp_path / "j.csv"
        assert main(["eval", "--params", params_path, "--out", str(out),
                     "--omega-min", "1.0", "--omega-max", "2.0",
                     "--points", "501"]) == 0
        got = io.read_spectrum(out)
        params = io.read_params(params_path)
        want = evaluate_jmod(params, np.linspace(1.0, 2.0, 501))
        assert np.array_equal(got.j_values, want.j_values)

    def test_eval_default_grid_spans_resonances(self, fitted_params_json, tmp_path):
        params_path, _ = fitted_params_json
        out = tmp_path / "j.csv"
        assert main(["eval", "--params", params_path, "--out", str(out)]) == 0
        got = io.read_spectrum(out)
        assert got.omega_grid.size == 4001
        assert got.omega_grid[0] < 1.35 and got.omega_grid[-1] > 1.76

    def test_eval_half_range_is_usage_error(self, fitted_params_json, tmp_path):
        params_path, _ = fitted_params_json
        code = main(["eval", "--params", params_path, "--out",
                     str(tmp_path / "j.csv"), "--omega-min", "1.0"])
        assert code == 1

    def test_poles_match_library(self, fitted_params_json, tmp_path):
        params_path, _ = fitted_params_json
        out = tmp_path / "poles.csv"
        assert main(["poles", "--params", params_path, "--out", str(out)]) == 0
        cols = io.read_table_csv(out)
        poles = compute_poles(io.read_params(params_path))
        assert np.array_equal(cols["re_eV"], poles.values.real)
        assert np.all(cols["im_eV"] < 0)


class TestCliDynamics:
    def test_model_route_matches_library(self, fitted_params_json, tmp_path):
        params_path, _ = fitted_params_json
        out = tmp_path / "traj.csv"
        assert main(["dynamics", "--params", params_path, "--omega-eg", "1.55",
                     "--tmax", "50", "--dt", "0.5", "--out", str(out),
                     "--tilde"]) == 0
        cols = io.read_table_csv(out)
        params = io.read_params(params_path)
        traj = solve_fewmode_single_excitation(
            params, EmitterSpec(1.55), 50.0, 0.5)
        assert np.array_equal(cols["pop_e"], traj.emitter_population)
        assert "pop_tilde_3" in cols

    @pytest.mark.filterwarnings("ignore::fewmode.errors.CoverageWarning")
    def test_exact_route(self, fano_csv, tmp_path):
        out = tmp_path / "traj.csv"
        assert main(["dynamics", "--spectrum", fano_csv, "--exact",
                     "--omega-eg", "1.55", "--tmax", "50", "--dt", "0.1",
                     "--out", str(out)]) == 0
        cols = io.read_table_csv(out)
        assert list(cols) == ["t_fs", "pop_e"]
        assert cols["pop_e"][0] == 1.0

    def test_params_and_exact_conflict(self, fitted_params_json, fano_csv, tmp_path):
        params_path, _ = fitted_params_json
        code = main(["dynamics", "--params", params_path, "--spectrum", fano_csv,
                     "--exact", "--omega-eg", "1.55", "--tmax", "10",
                     "--dt", "0.1", "--out", str(tmp_path / "t.csv")])
        assert code == 1

    def test_spectrum_without_exact_is_usage_error(self, fano_csv, tmp_path):
        code = main(["dynamics", "--spectrum", fano_csv, "--omega-eg", "1.55",
                     "--tmax", "10", "--dt", "0.1",
                     "--out", str(tmp_path / "t.csv")])
        assert code == 1

    def test_tilde_needs_mode_amplitudes(self, fano_csv, tmp_path):
        code = main(["dynamics", "--spectrum", fano_csv, "--exact", "--tilde",
                     "--omega-eg", "1.55", "--tmax", "10", "--dt", "0.1",
                     "--out", str(tmp_path / "t.csv")])
        assert code == 1

    def test_unresolvable_dt_is_usage_error(self, fano_csv, tmp_path, recwarn):
        code = main(["dynamics", "--spectrum", fano_csv, "--exact",
                     "--omega-eg", "1.55", "--tmax", "10", "--dt", "5.0",
                     "--out", str(tmp_path / "t.csv")])
        assert code == 1


class TestCliField:
    def test_traces_match_library(self, fitted_params_json, green_csv, tmp_path):
        params_path, _ = fitted_params_json
        out = tmp_path / "intensity.csv"
        assert main(["field", "--params", params_path, "--green", green_csv,
                     "--mu", "0.1", "--omega-eg", "1.55", "--tmax", "40",
                     "--dt", "0.1", "--out", str(out)]) == 0
        cols = io.read_table_csv(out)
        assert set(cols["point_id"]) == {"origin", "probe"}
        assert np.all(cols["intensity_W_per_m2"] >= 0.0)

    def test_point_selection(self, fitted_params_json, green_csv, tmp_path):
        params_path, _ = fitted_params_json
        out = tmp_path / "intensity.csv"
        assert main(["field", "--params", params_path, "--green", green_csv,
                     "--mu", "0.1", "--omega-eg", "1.55", "--tmax", "40",
                     "--dt", "0.1", "--points", "probe", "--out", str(out)]) == 0
        cols = io.read_table_csv(out)
        assert set(cols["point_id"]) == {"probe"}

    def test_unknown_point_is_usage_error(self, fitted_params_json, green_csv, tmp_path):
        params_path, _ = fitted_params_json
        code = main(["field", "--params", params_path, "--green", green_csv,
                     "--mu", "0.1", "--omega-eg", "1.55", "--tmax", "40",
                     "--dt", "0.1", "--points", "nowhere",
                     "--out", str(tmp_path / "i.csv")])
        assert code == 1

    def test_map_emits_one_raster_per_time(self, fitted_params_json, green_csv, tmp_path):
        params_path, _ = fitted_params_json
        out = tmp_path / "map.csv"
        assert main(["field", "--params", params_path, "--green", green_csv,
                     "--mu", "0.1", "--omega-eg", "1.55", "--tmax", "40",
                     "--dt", "0.1", "--out", str(out), "--map",
                     "--times", "5,20", "--normalize"]) == 0
        for t in ("5", "20"):
            raster = io.read_table_csv(tmp_path / f"map_t{t}fs.csv")
            assert list(raster)[-1] == "intensity_normalized"
            assert raster["point_id"].size == 2
        assert not out.exists()

    def test_map_without_times_is_usage_error(self, fitted_params_json, green_csv, tmp_path):
        params_path, _ = fitted_params_json
        code = main(["field", "--params", params_path, "--green", green_csv,
                     "--mu", "0.1", "--omega-eg", "1.55", "--tmax", "40",
                     "--dt", "0.1", "--out", str(tmp_path / "m.csv"), "--map"])
        assert code == 1


class TestCliPipeline:
    @pytest.mark.filterwarnings("ignore::fewmode.errors.CoverageWarning")
    def test_three_mode_round_trip(self, fano_csv, tmp_path, capsys):
        out_dir = tmp_path / "run"
        code = main(["pipeline", fano_csv, "--n-modes", "3", "--seed", "3",
                     "--out-dir", str(out_dir), "--omega-eg", "1.55",
                     "--tmax", "300", "--dt", "0.1"])
        assert code == 0
        printed = json.loads(capsys.readouterr().out)
        summary = io.read_json(out_dir / "summary.json")
        assert printed == summary
        assert summary["max_population_deviation"] < 1e-3
        for name in ("params.json", "report.json", "j_fit.csv",
                     "traj_exact.csv", "traj_model.csv", "summary.json"):
            assert (out_dir / name).exists()
        # artifacts re-ingest
        io.read_params(out_dir / "params.json")
        io.read_spectrum(out_dir / "j_fit.csv")
        io.read_table_csv(out_dir / "traj_exact.csv")

    @pytest.mark.filterwarnings("ignore::fewmode.errors.CoverageWarning")
    def test_noninteracting_stage_deviates_more(self, fano_csv, tmp_path, capsys):
        full = tmp_path / "full"
        diag = tmp_path / "diag"
        assert main(["pipeline", fano_csv, "--n-modes", "3", "--seed", "3",
                     "--out-dir", str(full), "--omega-eg", "1.55",
                     "--tmax", "150", "--dt", "0.1"]) == 0
        assert main(["pipeline", fano_csv, "--n-modes", "3", "--seed", "3",
                     "--stage", "non-interacting", "--out-dir", str(diag),
                     "--omega-eg", "1.55", "--tmax", "150", "--dt", "0.1"]) == 0
        capsys.readouterr()
        dev_full = io.read_json(full / "summary.json")["max_population_deviation"]
        dev_diag = io.read_json(diag / "summary.json")["max_population_deviation"]
        assert dev_diag > 10.0 * dev_full

    def test_missing_input_leaves_no_artifacts(self, tmp_path):
        out_dir = tmp_path / "run"
        code = main(["pipeline", str(tmp_path / "nope.csv"),
                     "--out-dir", str(out_dir), "--omega-eg", "1.55",
                     "--tmax", "10", "--dt", "0.1"])
        assert code == 1
        assert not out_dir.exists()

    @pytest.mark.filterwarnings("ignore::fewmode.errors.CoverageWarning")
    def test_nonconvergence_exits_2_with_artifacts(self, fano_csv, tmp_path, capsys):
        out_dir = tmp_path / "run"
        code = main(["pipeline", fano_csv, "--n-modes", "3",
                     "--max-iterations", "2", "--out-dir", str(out_dir),
                     "--omega-eg", "1.55", "--tmax", "20", "--dt", "0.1"])
        capsys.readouterr()
        assert code == 2
        assert io.read_json(out_dir / "summary.json")["converged"] is False

    @pytest.mark.filterwarnings("ignore::fewmode.errors.CoverageWarning")
    def test_stage_error_tags_the_stage(self, fano_table):
        # dt too coarse for the verification solver: the exact-dynamics
        # stage raises and the pipeline wraps it with the stage tag
        with pytest.raises(StageError, match="exact-dynamics") as excinfo:
            run_pipeline(fano_table, omega_eg=1.55, t_max=10.0, dt=5.0)
        assert isinstance(excinfo.value.original, ValidationError)


class TestCliGlobals:
    def test_version_exits_0(self, capsys):
        assert main(["--version"]) == 0
        assert "fewmode" in capsys.readouterr().out

    def test_no_subcommand_is_usage_error(self, capsys):
        assert main([]) == 1
        capsys.readouterr()

    def test_json_errors_on_missing_file(self, tmp_path, capsys):
        code = main(["--json-errors", "fit", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "p.json")])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["type"] == "io"
        assert "nope.csv" in err["error"]["message"]

    def test_json_errors_on_validation(self, fitted_params_json, tmp_path, capsys):
        params_path, _ = fitted_params_json
        code = main(["--json-errors", "eval", "--params", params_path,
                     "--out", str(tmp_path / "j.csv"), "--omega-min", "2.0",
                     "--omega-max", "1.0"])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["type"] == "validation"

    def test_strict_profile_accepted(self, fitted_params_json, tmp_path):
        params_path, _ = fitted_params_json
        assert main(["--tol-profile", "strict", "poles", "--params", params_path,
                     "--out", str(tmp_path / "p.csv")]) == 0

    def test_threads_limit_accepted(self, fitted_params_json, tmp_path):
        params_path, _ = fitted_params_json
        assert main(["--threads", "1", "poles", "--params", params_path,
                     "--out", str(tmp_path / "p.csv")]) == 0

    def test_demo_fit_runs_without_input_data(self, tmp_path):
        code = main(["fit", "--demo", "--n-modes", "6", "--seed", "1",
                     "--out", str(tmp_path / "p.json")])
        assert code == 0
        assert io.read_params(tmp_path / "p.json").n_modes == 6


def test_console_entry_point_subprocess(tmp_path):
    """The installed script works end to end in a fresh process."""
    proc = subprocess.run([sys.executable, "-m", "fewmode", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("fewmode")
