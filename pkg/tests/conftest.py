"""
测试公共夹具
参数组以 g 为单位给出；g/2π = 10 MHz 与运行配置示例一致
"""

import json
import logging
import math
import os

import pytest

from diamond_cavity.config_manager import ConfigManager
from diamond_cavity.physics.diamond_model import PhysicalParams
from diamond_cavity.utils.common import LOGGER_NAME

G_10MHZ = 2.0 * math.pi * 1.0e7

EXAMPLES_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                            "diamond_cavity", "config", "examples")


def params_in_g(g_prime, delta, omega, omega_prime, gamma=0.0, gamma_prime=0.0, gamma_dprime=0.0,
                n_atoms=1, cutoff=2, g=G_10MHZ) -> PhysicalParams:
    """(g′, Δ, Ω, Ω′, γ, γ′, γ″) 以 g 为单位，γ″ 平分到 γ₃ 与 γ₃′"""
    return PhysicalParams.in_units_of_g(
        g, g_prime, delta, omega, omega_prime, gamma=gamma, gamma_prime=gamma_prime,
        gamma3=0.5 * gamma_dprime, gamma3_prime=0.5 * gamma_dprime, n_atoms=n_atoms, cutoff=cutoff,
    )


def example_config(name: str) -> str:
    return os.path.join(EXAMPLES_DIR, f"{name}.json")


@pytest.fixture
def two_photon_params():
    """两光子转移参数 (1, 11, 55, 55, 1, 1, 1)g，单原子"""
    return params_in_g(1.0, 11.0, 55.0, 55.0, 1.0, 1.0, 1.0, n_atoms=1, cutoff=2)


@pytest.fixture(autouse=True)
def reset_package_logger():
    """configure_logging 会绑定当前 stderr；每个测试结束后复位，避免写入已关闭的捕获流"""
    yield
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)
    logger.propagate = True


@pytest.fixture
def manager():
    return ConfigManager()


@pytest.fixture
def write_config(tmp_path):
    """把字典写成 JSON 配置文件并返回路径"""

    def _write(data: dict, name: str = "run.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def confocal_block():
    return {
        "length_mm": 50.0,
        "t2_prime_ppm": 800.0,
        "n_atoms": 1000,
        "delta_over_g": 700.0,
        "omega_over_delta": 5.0,
        "atom_preset": "rb87_diamond",
        "mirror_preset": "high_finesse_macro",
    }
