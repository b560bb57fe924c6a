import json

import pytest
from click.testing import CliRunner

from stbeam import __version__
from stbeam.artifacts import file_sha256
from stbeam.commands import list_commands_names


def invoke(cli, *args):
    return CliRunner().invoke(cli, list(args))


def light_fig1(scenario_data):
    data = scenario_data("fig1.json")
    data["fig1"]["angles"] = {"values": [-3, 0, 3]}
    data["fig1"]["bce_time_offsets_s"] = [0, 5e-6]
    return data


def test_commands_are_registered(load_stbeam):
    assert sorted(list_commands_names(load_stbeam)) == ["check-invariance", "compare-fig1", "simulate", "track-peak"]


def test_version(load_stbeam):
    result = invoke(load_stbeam, "--version")
    assert result.exit_code == 0
    assert __version__ in result.output


class TestSimulate:
    def test_writes_cube_metrics_and_manifest(self, load_stbeam, scenarios_dir, tmp_path):
        prefix = tmp_path / "run"
        result = invoke(load_stbeam, "simulate", "--config", str(scenarios_dir / "fda_default.json"), "--out", str(prefix))
        assert result.exit_code == 0, result.output
        assert "simulate: fda-default" in result.output

        cube = (tmp_path / "run_cube.csv").read_bytes()
        assert b"\r\n" not in cube
        lines = cube.decode("utf-8").splitlines()
        assert lines[0] == "range_m,angle_deg,time_s,magnitude,magnitude_db"
        assert len(lines) == 1 + 1001

        metrics = (tmp_path / "run_metrics.csv").read_text(encoding="utf-8").splitlines()
        assert len(metrics) == 3

        manifest = json.loads((tmp_path / "run_manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "simulate"
        assert manifest["scenario"] == "fda-default"
        assert manifest["model"] == "farfield"
        assert manifest["seed"] == 20240101
        assert manifest["parameters"]["grid_shape"] == [1001, 1, 1]
        assert manifest["constants"]["speed_of_light_m_per_s"] == 299792458.0
        outputs = {o["name"]: o for o in manifest["outputs"]}
        assert set(outputs) == {"run_cube.csv", "run_metrics.csv"}
        for name, entry in outputs.items():
            assert entry["sha256"] == file_sha256(tmp_path / name)
            assert entry["bytes"] == (tmp_path / name).stat().st_size

    def test_seed_and_model_overrides(self, load_stbeam, scenarios_dir, tmp_path):
        prefix = tmp_path / "run"
        result = invoke(
            load_stbeam,
            "simulate",
            "--config",
            str(scenarios_dir / "fda_default.json"),
            "--out",
            str(prefix),
            "--seed",
            "99",
            "--model",
            "exact",
        )
        assert result.exit_code == 0, result.output
        manifest = json.loads((tmp_path / "run_manifest.json").read_text(encoding="utf-8"))
        assert manifest["seed"] == 99
        assert manifest["model"] == "exact"

    def test_yaml_scenario(self, load_stbeam, write_scenario, tmp_path):
        text = (
            "schema_version: 1\n"
            "name: yaml-run\n"
            "array: {kind: phased, n_elements: 8, carrier: 1.0e+10}\n"
            "grid:\n"
            "  ranges: {min: 1000, max: 1200, step: 100}\n"
            "  angles: {values: [-5, 0, 5]}\n"
            "  times: {values: [0, 1.0e-6]}\n"
        )
        path = write_scenario(text, "run.yaml")
        result = invoke(load_stbeam, "simulate", "--config", str(path), "--out", str(tmp_path / "y"))
        assert result.exit_code == 0, result.output
        assert len((tmp_path / "y_cube.csv").read_text(encoding="utf-8").splitlines()) == 1 + 18

    def test_missing_grid_is_a_config_error(self, load_stbeam, scenarios_dir, tmp_path):
        result = invoke(load_stbeam, "simulate", "--config", str(scenarios_dir / "phased_cw.json"), "--out", str(tmp_path / "x"))
        assert result.exit_code == 2
        assert "grid" in result.output

    def test_invalid_scenario_exit_code(self, load_stbeam, write_scenario, tmp_path):
        path = write_scenario({"schema_version": 1, "array": {"kind": "fda"}})
        result = invoke(load_stbeam, "simulate", "--config", str(path), "--out", str(tmp_path / "x"))
        assert result.exit_code == 2
        assert "carrier" in result.output
        assert not list(tmp_path.glob("x_*"))

    def test_json_syntax_error(self, load_stbeam, write_scenario, tmp_path):
        path = write_scenario('{"schema_version": 1,,}', "bad.json")
        result = invoke(load_stbeam, "simulate", "--config", str(path), "--out", str(tmp_path / "x"))
        assert result.exit_code == 2
        assert "line 1" in result.output

    def test_far_field_domain_error(self, load_stbeam, write_scenario, tmp_path):
        path = write_scenario(
            {
                "schema_version": 1,
                "array": {"kind": "fda", "carrier": 10e9},
                "grid": {"ranges": {"values": [0.01]}, "angles": {"values": [60]}, "times": {"values": [0]}},
            }
        )
        result = invoke(load_stbeam, "simulate", "--config", str(path), "--out", str(tmp_path / "x"))
        assert result.exit_code == 3
        assert "ExactSpherical" in result.output

    def test_measurement_error(self, load_stbeam, write_scenario, tmp_path):
        path = write_scenario(
            {
                "schema_version": 1,
                "array": {"kind": "fda", "carrier": 10e9},
                "grid": {"ranges": {"values": [1000, 2000]}, "angles": {"values": [0]}, "times": {"values": [0]}},
                "fwhm_cuts": [{"angle_deg": 0}],
            }
        )
        result = invoke(load_stbeam, "simulate", "--config", str(path), "--out", str(tmp_path / "x"))
        assert result.exit_code == 3

    def test_missing_config_option(self, load_stbeam):
        result = invoke(load_stbeam, "simulate")
        assert result.exit_code == 2
        assert "--config" in result.output


class TestCheckInvariance:
    def test_fda_holds(self, load_stbeam, scenarios_dir, tmp_path):
        result = invoke(
            load_stbeam, "check-invariance", "--config", str(scenarios_dir / "fda_default.json"), "--out", str(tmp_path / "inv")
        )
        assert result.exit_code == 0, result.output
        rows = (tmp_path / "inv_invariance.csv").read_text(encoding="utf-8").splitlines()
        assert rows[0].startswith("check,model,samples_checked,max_relative_deviation")
        assert len(rows) == 2
        assert (tmp_path / "inv_probe.csv").exists()
        manifest = json.loads((tmp_path / "inv_manifest.json").read_text(encoding="utf-8"))
        assert manifest["parameters"]["exit_code"] == 0
        assert [o["name"] for o in manifest["outputs"]] == ["inv_invariance.csv", "inv_probe.csv"]

    def test_phased_cw_is_degenerate(self, load_stbeam, scenarios_dir, tmp_path):
        result = invoke(
            load_stbeam, "check-invariance", "--config", str(scenarios_dir / "phased_cw.json"), "--out", str(tmp_path / "inv")
        )
        assert result.exit_code == 4
        assert "degenerate" in result.output

    def test_exact_model(self, load_stbeam, scenarios_dir, tmp_path):
        result = invoke(
            load_stbeam,
            "check-invariance",
            "--config",
            str(scenarios_dir / "invariance_exact.json"),
            "--out",
            str(tmp_path / "inv"),
        )
        assert result.exit_code == 0, result.output
        rows = (tmp_path / "inv_invariance.csv").read_text(encoding="utf-8").splitlines()
        assert len(rows) == 3

    def test_exact_model_single_element_is_not_violated(self, load_stbeam, write_scenario, tmp_path):
        path = write_scenario(
            {
                "schema_version": 1,
                "model": "exact",
                "array": {"kind": "explicit", "spacing": 0.015, "carrier": 10e9, "elements": [{"amplitude": 1.0}]},
            }
        )
        result = invoke(load_stbeam, "check-invariance", "--config", str(path), "--out", str(tmp_path / "inv"))
        assert result.exit_code == 4, result.output
        assert "VIOLATED" not in result.output
        manifest = json.loads((tmp_path / "inv_manifest.json").read_text(encoding="utf-8"))
        assert manifest["parameters"]["exit_code"] == 4


class TestTrackPeak:
    def test_fda_track(self, load_stbeam, scenarios_dir, tmp_path):
        result = invoke(load_stbeam, "track-peak", "--config", str(scenarios_dir / "track_fda.json"), "--out", str(tmp_path / "t"))
        assert result.exit_code == 0, result.output
        assert len((tmp_path / "t_track.csv").read_text(encoding="utf-8").splitlines()) == 1 + 21
        summary = (tmp_path / "t_track_summary.csv").read_text(encoding="utf-8").splitlines()
        assert summary[0] == "fitted_speed_m_per_s,fitted_speed_over_c,angle_drift_deg,degenerate"
        assert not (tmp_path / "t_angle_drift_sweep.csv").exists()

    def test_static_pattern_exit_code(self, load_stbeam, scenarios_dir, tmp_path):
        result = invoke(
            load_stbeam, "track-peak", "--config", str(scenarios_dir / "static_single.json"), "--out", str(tmp_path / "t")
        )
        assert result.exit_code == 4
        assert (tmp_path / "t_manifest.json").exists()

    def test_boundary_peak_is_a_runtime_error(self, load_stbeam, write_scenario, scenario_data, tmp_path):
        data = scenario_data("track_fda.json")
        data["grid"]["ranges"] = {"min": 29500, "max": 29700, "step": 2.99792458}
        result = invoke(load_stbeam, "track-peak", "--config", str(write_scenario(data)), "--out", str(tmp_path / "t"))
        assert result.exit_code == 3
        assert "boundary" in result.output


class TestCompareFig1:
    def test_outputs(self, load_stbeam, write_scenario, scenario_data, tmp_path):
        path = write_scenario(light_fig1(scenario_data))
        result = invoke(load_stbeam, "compare-fig1", "--config", str(path), "--out", str(tmp_path / "f"))
        assert result.exit_code == 0, result.output
        for suffix in ("fda_cut", "gaussian_cut", "rect_cut", "summary", "bce"):
            assert (tmp_path / f"f_fig1_{suffix}.csv").exists()
        cut = (tmp_path / "f_fig1_gaussian_cut.csv").read_text(encoding="utf-8").splitlines()
        assert cut[0] == "range_m,magnitude,magnitude_norm,magnitude_db"
        assert len(cut) == 1 + 6001
        manifest = json.loads((tmp_path / "f_manifest.json").read_text(encoding="utf-8"))
        assert manifest["parameters"]["fdhm_s"] == 16.7e-6
        assert len(manifest["outputs"]) == 5

    def test_fdhm_option(self, load_stbeam, write_scenario, scenario_data, tmp_path):
        path = write_scenario(light_fig1(scenario_data))
        result = invoke(load_stbeam, "compare-fig1", "--config", str(path), "--out", str(tmp_path / "f"), "--fdhm", "33.4e-6")
        assert result.exit_code == 0, result.output
        manifest = json.loads((tmp_path / "f_manifest.json").read_text(encoding="utf-8"))
        assert manifest["parameters"]["fdhm_s"] == 33.4e-6
        assert manifest["parameters"]["bce_box_width_m"] == pytest.approx(299792458.0 * 33.4e-6)


@pytest.mark.parametrize(
    "command,scenario",
    [
        ("simulate", "fda_default.json"),
        ("check-invariance", "invariance_exact.json"),
        ("track-peak", "tma_sweep.json"),
        ("compare-fig1", None),
    ],
)
def test_threads_do_not_change_output_bytes(load_stbeam, scenarios_dir, write_scenario, scenario_data, tmp_path, command, scenario):
    config = scenarios_dir / scenario if scenario else write_scenario(light_fig1(scenario_data))
    produced = {}
    for threads in ("1", "0"):
        out_dir = tmp_path / f"threads_{threads}"
        result = invoke(load_stbeam, command, "--config", str(config), "--out", str(out_dir / "run"), "--threads", threads)
        assert result.exit_code in (0, 4), result.output
        produced[threads] = {p.name: p.read_bytes() for p in sorted(out_dir.iterdir())}
    assert produced["1"].keys() == produced["0"].keys()
    assert "run_manifest.json" in produced["1"]
    for name, content in produced["1"].items():
        assert produced["0"][name] == content, name
