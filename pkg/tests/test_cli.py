import hashlib
import json

import pytest

from diamond_cavity import __version__
from diamond_cavity.cli import main

from conftest import example_config


def _run(capsys, tmp_path, command, config, *extra):
    code = main([command, "--config", config, "--out", str(tmp_path), "--jobs", "1", *extra])
    return code, capsys.readouterr()


def _last_json(stderr):
    lines = [line for line in stderr.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


def _check_manifest(tmp_path, experiment, *files):
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["experiment"] == experiment
    names = [item["file"] for item in manifest["outputs"]]
    assert names == sorted(files)
    for item in manifest["outputs"]:
        data = (tmp_path / item["file"]).read_bytes()
        assert item["sha256"] == hashlib.sha256(data).hexdigest()
    return manifest


class TestCommands:
    def test_validate(self, capsys, tmp_path):
        code, out = _run(capsys, tmp_path, "validate", example_config("validate_two_photon"))
        assert code == 0
        assert "detuning" in out.out.lower()
        _check_manifest(tmp_path, "validate", "validity_report.csv")
        header = (tmp_path / "validity_report.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "check,margin,pass_threshold,warn_threshold,status,description"

    @pytest.mark.parametrize("name", ["coeffs_two_photon", "coeffs_confocal"])
    def test_coeffs(self, capsys, tmp_path, name):
        code, _ = _run(capsys, tmp_path, "coeffs", example_config(name))
        assert code == 0
        _check_manifest(tmp_path, "coeffs", "coefficients.csv")

    def test_map_state_zero_coupling(self, capsys, tmp_path):
        code, _ = _run(capsys, tmp_path, "map-state", example_config("zero_coupling"))
        assert code == 0
        _check_manifest(tmp_path, "map-state", "mapping_report.csv", "photon_transfer.csv")

    def test_fom_point(self, capsys, tmp_path):
        code, _ = _run(capsys, tmp_path, "fom", example_config("fom_confocal_point"))
        assert code == 0
        _check_manifest(tmp_path, "fom", "fom_point.csv")

    def test_fom_small_sweep(self, capsys, tmp_path, write_config, confocal_block):
        config = write_config({
            "schema_version": "1.0",
            "experiment": "fom",
            "cavity": confocal_block,
            "fom": {
                "mode": "sweep",
                "sweep": {
                    "length_mm": {"start": 20.0, "stop": 50.0, "num": 2},
                    "t2_prime_ppm": {"start": 100.0, "stop": 1000.0, "num": 2, "scale": "log"},
                },
            },
        })
        out_dir = tmp_path / "out"
        code, _ = _run(capsys, out_dir, "fom", config)
        assert code == 0
        _check_manifest(out_dir, "fom", "fom_sweep.csv")
        rows = (out_dir / "fom_sweep.csv").read_text(encoding="utf-8").splitlines()
        assert len(rows) == 1 + 4

    def test_sweep_output_is_reproducible(self, capsys, tmp_path, write_config, confocal_block):
        config = write_config({
            "schema_version": "1.0",
            "experiment": "fom",
            "cavity": confocal_block,
            "fom": {
                "mode": "sweep",
                "sweep": {
                    "length_mm": {"start": 20.0, "stop": 90.0, "num": 3},
                    "t2_prime_ppm": {"start": 100.0, "stop": 3000.0, "num": 3, "scale": "log"},
                },
            },
        })
        outputs = []
        for name, jobs in (("first", "1"), ("second", "1"), ("parallel", "2")):
            out_dir = tmp_path / name
            assert main(["fom", "--config", config, "--out", str(out_dir), "--jobs", jobs]) == 0
            outputs.append((out_dir / "fom_sweep.csv").read_bytes())
        capsys.readouterr()
        assert outputs[0] == outputs[1]
        assert outputs[0] == outputs[2]

    def test_tpi_scan_small(self, capsys, tmp_path, write_config):
        physical = {
            "g_over_2pi_hz": 1.0e7,
            "g_prime_over_g": 1.0,
            "delta_over_g": 30.0,
            "omega_over_g": 100.0,
            "omega_prime_over_g": 100.0,
        }
        config = write_config({
            "schema_version": "1.0",
            "experiment": "tpi-scan",
            "scan": {"n_ph_max": 2, "parameter_sets": [{"label": "delta30", "physical": physical}]},
        })
        out_dir = tmp_path / "out"
        code, out = _run(capsys, out_dir, "tpi-scan", config)
        assert code == 0
        assert "delta30" in out.out
        _check_manifest(out_dir, "tpi-scan", "tpi_deviation.csv")
        rows = (out_dir / "tpi_deviation.csv").read_text(encoding="utf-8").splitlines()
        assert rows[0] == "label,n_ph,t_pi,deviation_percent,t_pi_g,population,jump"
        assert len(rows) == 3


class TestFailures:
    def test_missing_config(self, capsys, tmp_path):
        code, out = _run(capsys, tmp_path, "validate", str(tmp_path / "absent.json"))
        assert code == 2
        failure = _last_json(out.err)
        assert failure["success"] is False
        assert failure["error_type"] == "config"

    @pytest.mark.parametrize("mutation", [
        {"extra": 1},
        {"schema_version": "2.0"},
        {"experiment": "coeffs"},
    ])
    def test_config_errors(self, capsys, tmp_path, write_config, mutation):
        with open(example_config("validate_two_photon"), encoding="utf-8") as f:
            data = json.load(f)
        data.update(mutation)
        code, out = _run(capsys, tmp_path / "out", "validate", write_config(data))
        assert code == 2
        assert _last_json(out.err)["error_type"] == "config"
        assert not (tmp_path / "out" / "manifest.json").exists()

    def test_parameter_error_in_run(self, capsys, tmp_path, write_config):
        with open(example_config("validate_two_photon"), encoding="utf-8") as f:
            data = json.load(f)
        data["physical"]["delta_over_g"] = 0.0
        code, out = _run(capsys, tmp_path / "out", "validate", write_config(data))
        assert code == 2
        failure = _last_json(out.err)
        assert failure["error_type"] == "parameter"
        assert "Delta" in failure["error"]

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out
