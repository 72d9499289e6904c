import glob
import json
import math
import os

import pytest

from diamond_cavity.config_manager import (
    DEFAULT_TEMPLATE,
    ConfigManager,
    canonical_hash,
    parse_amplitudes,
)
from diamond_cavity.errors import ConfigError
from diamond_cavity.physics.diamond_model import effective_coefficients

from conftest import EXAMPLES_DIR, example_config


def _physical(**overrides):
    block = {
        "g_over_2pi_hz": 1.0e7,
        "g_prime_over_g": 1.0,
        "delta_over_g": 11.0,
        "omega_over_g": 55.0,
        "omega_prime_over_g": 55.0,
    }
    block.update(overrides)
    return block


def _run(experiment="coeffs", **blocks):
    return {"schema_version": "1.0", "experiment": experiment, **blocks}


class TestRunConfig:
    @pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(EXAMPLES_DIR, "*.json"))),
                             ids=lambda p: os.path.basename(p))
    def test_shipped_examples_parse(self, manager, path):
        config = manager.load_run_config(path)
        assert config.path == os.path.abspath(path)
        assert len(config.config_hash) == 64

    def test_defaults_are_merged(self, manager):
        config = manager.parse_run_config(_run(physical=_physical(), numerics={"rtol": 1e-6}))
        assert config.numerics["rtol"] == 1e-6
        assert config.numerics["atol"] == 1e-10
        assert config.validate["expected_photons_a"] == 1.0

    def test_unknown_root_key(self, manager):
        with pytest.raises(ConfigError, match="unknown key 'path'"):
            manager.parse_run_config(_run(physical=_physical(), path="x"))

    def test_unknown_nested_key_names_full_path(self, manager):
        with pytest.raises(ConfigError, match="physical.omega_r"):
            manager.parse_run_config(_run(physical=_physical(omega_r=1.0)))

    def test_wrong_type(self, manager):
        with pytest.raises(ConfigError, match="n_atoms"):
            manager.parse_run_config(_run(physical=_physical(n_atoms=1.5)))

    def test_boolean_is_not_a_number(self, manager):
        with pytest.raises(ConfigError):
            manager.parse_run_config(_run(physical=_physical(delta_over_g=True)))

    @pytest.mark.parametrize("version", ["2.0", "abc"])
    def test_schema_version(self, manager, version):
        raw = _run(physical=_physical())
        raw["schema_version"] = version
        with pytest.raises(ConfigError):
            manager.parse_run_config(raw)

    def test_unknown_experiment(self, manager):
        with pytest.raises(ConfigError, match="unknown experiment"):
            manager.parse_run_config(_run("simulate", physical=_physical()))

    def test_experiment_mismatch(self, manager):
        with pytest.raises(ConfigError, match="'validate' command"):
            manager.parse_run_config(_run(physical=_physical()), expected_experiment="validate")

    def test_missing_required_physical_key(self, manager):
        block = _physical()
        del block["delta_over_g"]
        with pytest.raises(ConfigError, match="delta_over_g"):
            manager.parse_run_config(_run(physical=block))

    def test_map_state_needs_amplitudes(self, manager):
        with pytest.raises(ConfigError, match="input_amplitudes"):
            manager.parse_run_config(_run("map-state", physical=_physical()))

    def test_fom_sweep_needs_both_axes(self, manager, confocal_block):
        fom = {"mode": "sweep", "sweep": {"length_mm": {"start": 1.0, "stop": 2.0, "num": 2}}}
        with pytest.raises(ConfigError, match="t2_prime_ppm"):
            manager.parse_run_config(_run("fom", cavity=confocal_block, fom=fom))

    def test_tpi_scan_set_needs_label(self, manager):
        scan = {"parameter_sets": [{"physical": _physical()}]}
        with pytest.raises(ConfigError, match="label"):
            manager.parse_run_config(_run("tpi-scan", scan=scan))

    def test_missing_file(self, manager, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            manager.load_run_config(str(tmp_path / "absent.json"))

    def test_invalid_json(self, manager, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid JSON"):
            manager.load_run_config(str(path))

    def test_hash_ignores_key_order(self):
        assert canonical_hash({"a": 1, "b": [1, 2]}) == canonical_hash({"b": [1, 2], "a": 1})
        assert canonical_hash({"a": 1}) != canonical_hash({"a": 2})


class TestPhysicalBlock:
    def test_units(self, manager):
        params = manager.physical_params(_physical(gamma_over_g=2.0, n_atoms=4, cutoff=3))
        g = 2.0 * math.pi * 1.0e7
        assert params.g == pytest.approx(g)
        assert params.delta == pytest.approx(11.0 * g)
        assert params.gamma == pytest.approx(2.0 * g)
        assert (params.n_atoms, params.cutoff) == (4, 3)

    def test_gamma_dprime_split(self, manager):
        params = manager.physical_params(_physical(gamma_dprime_over_g=1.0))
        assert params.gamma3 == params.gamma3_prime
        assert params.gamma_dprime == pytest.approx(params.g)

    def test_gamma_dprime_conflict(self, manager):
        with pytest.raises(ConfigError):
            manager.physical_params(_physical(gamma_dprime_over_g=1.0, gamma3_over_g=0.5))

    def test_zero_delta1_keyword(self, manager):
        params = manager.physical_params(_physical(g_prime_over_g=2.8, delta_over_g=700.0, omega_over_g=3500.0,
                                                   omega_prime_over_g="zero_delta1"))
        coeffs = effective_coefficients(params)
        assert abs(coeffs.delta1) <= 1e-9 * abs(coeffs.delta2)

    def test_unknown_keyword(self, manager):
        with pytest.raises(ConfigError, match="zero_delta1"):
            manager.physical_params(_physical(omega_prime_over_g="auto"))


class TestPresets:
    def test_atom_preset(self, manager):
        preset = manager.atom_preset("rb87_diamond")
        assert preset.gamma_prime / (2.0 * math.pi) == pytest.approx(6.06e6)
        assert len(preset.levels) == 4

    def test_mirror_spec_override_radius(self, manager):
        mirrors = manager.mirror_spec("high_finesse_macro", 800.0, radius_mm=60.0)
        assert mirrors.radius_m == pytest.approx(0.06)
        assert mirrors.t2_prime_ppm == 800

    def test_kind_mismatch(self, manager):
        with pytest.raises(ConfigError, match="kind"):
            manager.load_preset("rb87_diamond", "mirror")

    @pytest.mark.parametrize("name", ["../rb87_diamond", "", "nested/name"])
    def test_invalid_names(self, manager, name):
        with pytest.raises(ConfigError):
            manager.load_preset(name, "atom")

    def test_missing_preset(self, manager):
        with pytest.raises(ConfigError, match="not found"):
            manager.load_preset("cs133", "atom")

    def test_cavity_overrides(self, manager, confocal_block):
        base = manager.cavity_system(confocal_block)
        longer = manager.cavity_system(confocal_block, length_mm=80.0)
        assert longer.geometry.length_m == pytest.approx(0.08)
        assert longer.params.g < base.params.g


class TestTemplatesAndWrites:
    def test_missing_template_falls_back(self, tmp_path):
        manager = ConfigManager(templates_dir=str(tmp_path))
        assert manager.defaults["numerics"] == DEFAULT_TEMPLATE["numerics"]
        assert manager.defaults["__config_version"] == "1.0"

    def test_shipped_template_matches_defaults(self, manager):
        assert manager.defaults["numerics"] == DEFAULT_TEMPLATE["numerics"]

    def test_atomic_write(self, manager, tmp_path):
        path = tmp_path / "manifest.json"
        assert manager.atomic_write_json(str(path), {"b": 1, "a": [1, 2]})
        assert json.loads(path.read_text(encoding="utf-8")) == {"a": [1, 2], "b": 1}
        assert [p.name for p in tmp_path.iterdir()] == ["manifest.json"]

    def test_atomic_write_failure_returns_false(self, manager, tmp_path):
        assert not manager.atomic_write_json(str(tmp_path / "missing" / "x.json"), {"a": 1})


class TestAmplitudes:
    def test_real_and_complex_entries(self):
        assert parse_amplitudes([0.6, [0.0, 0.8]]) == [0.6 + 0j, 0.8j]

    def test_bad_entry(self):
        with pytest.raises(ConfigError, match=r"\[1\]"):
            parse_amplitudes([1.0, "x"])

    def test_empty(self):
        with pytest.raises(ConfigError):
            parse_amplitudes([])

    def test_example_amplitudes(self, manager):
        config = manager.load_run_config(example_config("mapping_n1"))
        assert parse_amplitudes(config.mapping["input_amplitudes"]) == [0.5] * 4
