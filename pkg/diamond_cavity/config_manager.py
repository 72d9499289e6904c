"""
配置管理模块
运行配置的加载与校验、数值默认值模板、原子/腔镜预设、清单与报告的原子写入
"""

import hashlib
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .errors import ConfigError
from .physics.cavity_params import (
    AtomPreset,
    CavityGeometry,
    CavitySystem,
    MirrorSpec,
    derive_system,
)
from .physics.diamond_model import PhysicalParams, omega_prime_for_zero_delta1
from .utils.common import WARN_PREFIX, get_logger

log = get_logger(__name__)

SUPPORTED_SCHEMA_MAJOR = 1
TWO_PI = 2.0 * math.pi
EXPERIMENTS = ("map-state", "tpi-scan", "fom", "validate", "coeffs")


# ==================== 配置结构定义 ====================
# 叶子为允许的类型（元组），嵌套 dict 为子块；"[...]" 形式的列表单独处理

_NUMBER = "number"
_INT = "int"
_BOOL = "bool"
_STR = "str"
_NUMBER_OR_STR = "number|str"
_LIST = "list"

PHYSICAL_SCHEMA = {
    "g_over_2pi_hz": _NUMBER,
    "g_prime_over_g": _NUMBER,
    "delta_over_g": _NUMBER,
    "omega_over_g": _NUMBER,
    "omega_prime_over_g": _NUMBER_OR_STR,
    "gamma_over_g": _NUMBER,
    "gamma_prime_over_g": _NUMBER,
    "gamma3_over_g": _NUMBER,
    "gamma3_prime_over_g": _NUMBER,
    "gamma_dprime_over_g": _NUMBER,
    "n_atoms": _INT,
    "cutoff": _INT,
}
PHYSICAL_REQUIRED = ("g_over_2pi_hz", "delta_over_g", "omega_over_g", "omega_prime_over_g")

CAVITY_SCHEMA = {
    "length_mm": _NUMBER,
    "t2_prime_ppm": _NUMBER,
    "n_atoms": _INT,
    "delta_over_g": _NUMBER,
    "omega_over_delta": _NUMBER,
    "atom_preset": _STR,
    "mirror_preset": _STR,
    "radius_mm": _NUMBER,
    "include_kappa_gamma": _BOOL,
}
CAVITY_REQUIRED = ("length_mm", "t2_prime_ppm", "n_atoms", "delta_over_g", "omega_over_delta")

AXIS_SCHEMA = {"start": _NUMBER, "stop": _NUMBER, "num": _INT, "scale": _STR}

RUN_SCHEMA = {
    "schema_version": _STR,
    "experiment": _STR,
    "description": _STR,
    "physical": PHYSICAL_SCHEMA,
    "cavity": CAVITY_SCHEMA,
    "numerics": {
        "rtol": _NUMBER,
        "atol": _NUMBER,
        "t_points": _INT,
        "curve_span_tpi": _NUMBER,
        "search_window_low": _NUMBER,
        "search_window_high": _NUMBER,
        "search_steps_per_tpi": _INT,
    },
    "mapping": {"input_amplitudes": _LIST, "phase_frame": _STR, "t_max_us": _NUMBER},
    "scan": {"parameter_sets": _LIST, "n_ph_max": _INT, "jump_threshold_percent": _NUMBER},
    "fom": {
        "mode": _STR,
        "quadrature": _BOOL,
        "sweep": {"length_mm": AXIS_SCHEMA, "t2_prime_ppm": AXIS_SCHEMA},
        "t2_prime_scan": AXIS_SCHEMA,
    },
    "validate": {"expected_photons_a": _NUMBER, "expected_photons_b": _NUMBER},
}

PARAMETER_SET_SCHEMA = {"label": _STR, "physical": PHYSICAL_SCHEMA}

DEFAULT_TEMPLATE = {
    "__config_version": "1.0",
    "numerics": {
        "rtol": 1e-8,
        "atol": 1e-10,
        "t_points": 201,
        "curve_span_tpi": 2.0,
        "search_window_low": 0.8,
        "search_window_high": 1.2,
        "search_steps_per_tpi": 200,
    },
    "mapping": {"phase_frame": "lab"},
    "scan": {"n_ph_max": 9, "jump_threshold_percent": 1.0},
    "fom": {"mode": "point", "quadrature": True},
    "validate": {"expected_photons_a": 1.0, "expected_photons_b": 1.0},
}


def _type_ok(kind: str, value: Any) -> bool:
    is_number = isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == _NUMBER:
        return is_number and math.isfinite(value)
    if kind == _INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == _BOOL:
        return isinstance(value, bool)
    if kind == _STR:
        return isinstance(value, str)
    if kind == _NUMBER_OR_STR:
        return isinstance(value, str) or (is_number and math.isfinite(value))
    if kind == _LIST:
        return isinstance(value, list)
    return False


def validate_block(data: Any, schema: dict, path: str = "") -> None:
    """按 schema 递归校验，未知键与类型错误均抛出 ConfigError（错误信息带完整路径）"""
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object, got {type(data).__name__}")
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown key '{where}'")
        expected = schema[key]
        if isinstance(expected, dict):
            validate_block(value, expected, where)
        elif not _type_ok(expected, value):
            raise ConfigError(f"'{where}' must be of type {expected}, got {value!r}")


def _require(block: dict, keys, path: str) -> None:
    missing = [k for k in keys if k not in block]
    if missing:
        raise ConfigError(f"{path}: missing required key(s) {', '.join(missing)}")


def canonical_hash(data: dict) -> str:
    """sha256(规范化 JSON)"""
    text = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_amplitudes(raw: List[Any], path: str = "mapping.input_amplitudes") -> List[complex]:
    """振幅列表: 实数或 [实部, 虚部]"""
    out = []
    for i, item in enumerate(raw):
        if _type_ok(_NUMBER, item):
            out.append(complex(item))
        elif isinstance(item, list) and len(item) == 2 and all(_type_ok(_NUMBER, v) for v in item):
            out.append(complex(item[0], item[1]))
        else:
            raise ConfigError(f"{path}[{i}] must be a number or a [re, im] pair, got {item!r}")
    if not out:
        raise ConfigError(f"{path} is empty")
    return out


@dataclass
class RunConfig:
    experiment: str
    schema_version: str
    numerics: Dict[str, Any]
    physical: Optional[Dict[str, Any]] = None
    cavity: Optional[Dict[str, Any]] = None
    mapping: Dict[str, Any] = field(default_factory=dict)
    scan: Dict[str, Any] = field(default_factory=dict)
    fom: Dict[str, Any] = field(default_factory=dict)
    validate: Dict[str, Any] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)
    path: Optional[str] = None

    @property
    def config_hash(self) -> str:
        return canonical_hash(self.raw)


class ConfigManager:
    def __init__(self, templates_dir: Optional[str] = None):
        # 包目录
        self.dir_path = os.path.dirname(os.path.abspath(__file__))

        # ---模板与预设目录（包内置）---
        self.templates_dir = templates_dir or os.path.join(self.dir_path, "config")
        self.presets_dir = os.path.join(self.templates_dir, "presets")

        # 存储模板版本号
        self._template_versions = {}

        # ---加载默认配置（从模板文件）---
        self.defaults = self._load_template("run_config", DEFAULT_TEMPLATE)

    # --- 统一日志输出 ---
    def _log(self, msg: str):
        log.warning(f"{WARN_PREFIX} {msg}")

    # ---模板加载---
    def _load_template(self, template_name: str, fallback: dict = None) -> dict:
        """
        从模板文件加载默认配置

        参数:
            template_name: 模板名称（不含扩展名和 _template 后缀）
            fallback: 加载失败时的回退默认值

        返回:
            配置字典（包含 __config_version 用于版本管理）
        """
        template_path = os.path.join(self.templates_dir, f"{template_name}_template.json")
        try:
            with open(template_path, "r", encoding="utf-8") as f:
                data = json.load(f)
                self._template_versions[template_name] = data.get("__config_version", "1.0")
                return data
        except Exception as e:
            self._log(f"loading template {template_name} failed: {str(e)}, using built-in defaults")
            if fallback is None:
                fallback = {}
            if "__config_version" not in fallback:
                fallback = {"__config_version": "1.0", **fallback}
            self._template_versions[template_name] = fallback["__config_version"]
            return json.loads(json.dumps(fallback))

    def _defaults_for(self, block: str) -> dict:
        return dict(self.defaults.get(block, DEFAULT_TEMPLATE.get(block, {})))

    # ---原子写入---
    def atomic_write_json(self, file_path: str, data: dict) -> bool:
        """
        原子性写入 JSON 文件

        在目标目录下写临时文件再整体移动：写入失败或中断时旧文件保持不变

        返回:
            bool: 保存成功返回 True，失败返回 False
        """
        temp_fd = None
        temp_path = None

        try:
            # ---步骤1：写入临时文件---
            temp_fd, temp_path = tempfile.mkstemp(
                dir=os.path.dirname(os.path.abspath(file_path)),
                suffix='.tmp',
                prefix='.tmp_'
            )
            with os.fdopen(temp_fd, 'w', encoding='utf-8', newline='\n') as f:
                json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
                f.write("\n")
                temp_fd = None

            # ---步骤2：原子性替换---
            shutil.move(temp_path, file_path)
            temp_path = None
            return True

        except Exception as e:
            self._log(f"atomic JSON write failed [{os.path.basename(file_path)}]: {str(e)}")
            return False

        finally:
            if temp_fd is not None:
                try:
                    os.close(temp_fd)
                except OSError:
                    pass
            if temp_path is not None and os.path.exists(temp_path):
                try:
                    os.unlink(temp_path)
                except OSError:
                    pass

    # ---运行配置---
    def load_run_config(self, path: str, expected_experiment: Optional[str] = None) -> RunConfig:
        """读取并校验运行配置；任何计算之前调用"""
        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON ({path}): {e}")
        config = self.parse_run_config(raw, expected_experiment)
        config.path = os.path.abspath(path)
        return config

    def parse_run_config(self, raw: dict, expected_experiment: Optional[str] = None) -> RunConfig:
        validate_block(raw, RUN_SCHEMA)
        _require(raw, ("schema_version", "experiment"), "<root>")
        version = raw["schema_version"]
        try:
            major = int(version.split(".")[0])
        except ValueError:
            raise ConfigError(f"schema_version '{version}' is not a version string")
        if major != SUPPORTED_SCHEMA_MAJOR:
            raise ConfigError(f"schema_version {version} is not supported (expected {SUPPORTED_SCHEMA_MAJOR}.x)")
        experiment = raw["experiment"]
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment '{experiment}', expected one of {', '.join(EXPERIMENTS)}")
        if expected_experiment is not None and experiment != expected_experiment:
            raise ConfigError(f"config is for '{experiment}' but the '{expected_experiment}' command was invoked")

        numerics = {**self._defaults_for("numerics"), **raw.get("numerics", {})}
        config = RunConfig(
            experiment=experiment,
            schema_version=version,
            numerics=numerics,
            physical=raw.get("physical"),
            cavity=raw.get("cavity"),
            mapping={**self._defaults_for("mapping"), **raw.get("mapping", {})},
            scan={**self._defaults_for("scan"), **raw.get("scan", {})},
            fom={**self._defaults_for("fom"), **raw.get("fom", {})},
            validate={**self._defaults_for("validate"), **raw.get("validate", {})},
            raw=raw,
        )
        self._check_experiment(config)
        return config

    def _check_experiment(self, config: RunConfig) -> None:
        exp = config.experiment
        if config.physical is not None:
            _require(config.physical, PHYSICAL_REQUIRED, "physical")
        if config.cavity is not None:
            _require(config.cavity, CAVITY_REQUIRED, "cavity")
        if exp == "map-state":
            if config.physical is None:
                raise ConfigError("map-state needs a 'physical' block")
            if "input_amplitudes" not in config.mapping:
                raise ConfigError("map-state needs mapping.input_amplitudes")
            parse_amplitudes(config.mapping["input_amplitudes"])
        elif exp == "tpi-scan":
            sets = config.scan.get("parameter_sets")
            if sets is None and config.physical is None:
                raise ConfigError("tpi-scan needs scan.parameter_sets or a 'physical' block")
            for i, item in enumerate(sets or []):
                validate_block(item, PARAMETER_SET_SCHEMA, f"scan.parameter_sets[{i}]")
                _require(item, ("label", "physical"), f"scan.parameter_sets[{i}]")
                _require(item["physical"], PHYSICAL_REQUIRED, f"scan.parameter_sets[{i}].physical")
        elif exp == "fom":
            if config.cavity is None:
                raise ConfigError("fom needs a 'cavity' block")
            mode = config.fom.get("mode")
            if mode not in ("point", "sweep"):
                raise ConfigError(f"fom.mode must be 'point' or 'sweep', got {mode!r}")
            if mode == "sweep":
                sweep = config.fom.get("sweep")
                if not sweep:
                    raise ConfigError("fom sweep mode needs fom.sweep with length_mm and t2_prime_ppm axes")
                for axis in ("length_mm", "t2_prime_ppm"):
                    if axis not in sweep:
                        raise ConfigError(f"fom.sweep.{axis} is missing")
                    _require(sweep[axis], ("start", "stop", "num"), f"fom.sweep.{axis}")
            if "t2_prime_scan" in config.fom:
                _require(config.fom["t2_prime_scan"], ("start", "stop", "num"), "fom.t2_prime_scan")
        elif exp in ("validate", "coeffs"):
            if config.physical is None and config.cavity is None:
                raise ConfigError(f"{exp} needs a 'physical' or a 'cavity' block")

    # ---预设---
    def load_preset(self, name: str, kind: str) -> dict:
        """读取 config/presets/<name>.json 并检查 kind"""
        if not name or os.path.basename(name) != name:
            raise ConfigError(f"invalid preset name {name!r}")
        path = os.path.join(self.presets_dir, f"{name}.json")
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"preset '{name}' not found in {self.presets_dir}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"preset '{name}' is not valid JSON: {e}")
        if data.get("kind") != kind:
            raise ConfigError(f"preset '{name}' is of kind {data.get('kind')!r}, expected {kind!r}")
        return data

    def atom_preset(self, name: str) -> AtomPreset:
        data = self.load_preset(name, "atom")
        try:
            return AtomPreset(
                name=data.get("name", name),
                omega=TWO_PI * data["omega_over_2pi_hz"],
                omega_prime=TWO_PI * data["omega_prime_over_2pi_hz"],
                gamma=TWO_PI * data["gamma_over_2pi_hz"],
                gamma_prime=TWO_PI * data["gamma_prime_over_2pi_hz"],
                gamma_dprime=TWO_PI * data["gamma_dprime_over_2pi_hz"],
                tau_s=(data.get("tau1_s", math.nan), data.get("tau2_s", math.nan), data.get("tau3_s", math.nan)),
                levels=tuple(data.get("levels", ())),
            )
        except KeyError as e:
            raise ConfigError(f"atom preset '{name}' is missing key {e}")

    def mirror_spec(self, name: str, t2_prime_ppm: float, radius_mm: Optional[float] = None) -> MirrorSpec:
        data = self.load_preset(name, "mirror")
        try:
            radius_m = radius_mm * 1e-3 if radius_mm is not None else data["radius_m"]
            return MirrorSpec.symmetric(data["loss_ppm"], data["t_small_ppm"], t2_prime_ppm, radius_m,
                                        name=data.get("name", name))
        except KeyError as e:
            raise ConfigError(f"mirror preset '{name}' is missing key {e}")

    # ---参数块 → 领域对象---
    def physical_params(self, block: dict) -> PhysicalParams:
        """以 g 为单位的参数块 → PhysicalParams（rad/s）"""
        validate_block(block, PHYSICAL_SCHEMA, "physical")
        _require(block, PHYSICAL_REQUIRED, "physical")
        g = TWO_PI * block["g_over_2pi_hz"]
        g_prime = block.get("g_prime_over_g", 1.0)
        delta = block["delta_over_g"]
        omega = block["omega_over_g"]
        omega_prime = block["omega_prime_over_g"]
        if isinstance(omega_prime, str):
            if omega_prime != "zero_delta1":
                raise ConfigError(f"physical.omega_prime_over_g must be a number or 'zero_delta1', got {omega_prime!r}")
            omega_prime = omega_prime_for_zero_delta1(omega, delta, 1.0, g_prime)
        gamma3 = block.get("gamma3_over_g", 0.0)
        gamma3_prime = block.get("gamma3_prime_over_g", 0.0)
        if "gamma_dprime_over_g" in block:
            # γ″ 在 γ₃ 与 γ₃′ 之间平分（与腔参数流水线一致）
            if "gamma3_over_g" in block or "gamma3_prime_over_g" in block:
                raise ConfigError("physical: give either gamma_dprime_over_g or gamma3_over_g/gamma3_prime_over_g, not both")
            gamma3 = gamma3_prime = 0.5 * block["gamma_dprime_over_g"]
        return PhysicalParams.in_units_of_g(
            g, g_prime, delta, omega, omega_prime,
            gamma=block.get("gamma_over_g", 0.0),
            gamma_prime=block.get("gamma_prime_over_g", 0.0),
            gamma3=gamma3,
            gamma3_prime=gamma3_prime,
            n_atoms=block.get("n_atoms", 1),
            cutoff=block.get("cutoff", 2),
        )

    def cavity_system(self, block: dict, length_mm: Optional[float] = None,
                      t2_prime_ppm: Optional[float] = None) -> CavitySystem:
        """腔参数块 → CavitySystem；length_mm / t2_prime_ppm 用于扫描时覆盖"""
        validate_block(block, CAVITY_SCHEMA, "cavity")
        _require(block, CAVITY_REQUIRED, "cavity")
        length_mm = block["length_mm"] if length_mm is None else length_mm
        t2_prime_ppm = block["t2_prime_ppm"] if t2_prime_ppm is None else t2_prime_ppm
        preset = self.atom_preset(block.get("atom_preset", "rb87_diamond"))
        mirrors = self.mirror_spec(block.get("mirror_preset", "high_finesse_macro"), t2_prime_ppm,
                                   block.get("radius_mm"))
        return derive_system(
            CavityGeometry.from_mm(length_mm), mirrors, preset, block["n_atoms"],
            block["delta_over_g"], block["omega_over_delta"],
            include_kappa_gamma=block.get("include_kappa_gamma", False),
        )


# 创建全局配置管理器实例
config_manager = ConfigManager()
