"""
腔参数模块
镜面规格 + 几何 + 原子预设 → g, g′, κ, η, η′, η_tot, κ_γ 与完整的 PhysicalParams

ppm 量在读入时转为精确有理数（fractions.Fraction），1 − √(R₁R₂) 这类接近零的差在有理数上先行化简
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Tuple, Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from ..errors import ParameterError
from ..utils.common import get_logger
from .diamond_model import (
    EffectiveCoefficients,
    PhysicalParams,
    effective_coefficients,
    omega_prime_for_zero_delta1,
)
from .inout_fom import LangevinMatrix, langevin_matrix

log = get_logger(__name__)

PPM = Fraction(1, 1_000_000)
TWO_PI = 2.0 * math.pi

Number = Union[int, float, str, Fraction]


def to_ppm(value: Number) -> Fraction:
    """把 ppm 数值转为精确有理数（浮点数经十进制字符串转换，避免二进制误差）"""
    if isinstance(value, Fraction):
        return value
    # numpy 标量的 repr 带类型前缀（np.float64(...)），先转为内建类型
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise ParameterError(f"ppm value must be finite, got {value}")
        return Fraction(repr(value))
    if isinstance(value, np.integer):
        return Fraction(int(value))
    return Fraction(value)


# ==================== 规格类型 ====================

@dataclass(frozen=True)
class MirrorSpec:
    """
    两面镜子的透射与损耗（ppm）
    模式 a: t1, t2；模式 b: t1_prime（高反镜）, t2_prime（输出镜）；loss 为两模共用的损耗 L
    """

    t1_ppm: Fraction
    t2_ppm: Fraction
    t1_prime_ppm: Fraction
    t2_prime_ppm: Fraction
    loss_ppm: Fraction
    radius_m: float
    name: str = "custom"

    def __post_init__(self):
        for key in ("t1_ppm", "t2_ppm", "t1_prime_ppm", "t2_prime_ppm", "loss_ppm"):
            value = to_ppm(getattr(self, key))
            if not 0 <= value < 1_000_000:
                raise ParameterError(f"{key} must lie in [0, 1e6) ppm, got {float(value)}")
            object.__setattr__(self, key, value)
        if not math.isfinite(self.radius_m) or self.radius_m <= 0:
            raise ParameterError(f"mirror radius must be positive, got {self.radius_m}")
        for key, reflectivity in (("R1", self.r1), ("R2", self.r2), ("R1'", self.r1_prime), ("R2'", self.r2_prime)):
            if not 0 < reflectivity < 1:
                raise ParameterError(f"reflectivity {key} = {float(reflectivity)} outside (0, 1)")

    @classmethod
    def symmetric(cls, loss_ppm: Number, t_small_ppm: Number, t2_prime_ppm: Number, radius_m: float,
                  name: str = "custom") -> "MirrorSpec":
        """模式 a 两镜与模式 b 高反镜透射均为 T_small"""
        return cls(t_small_ppm, t_small_ppm, t_small_ppm, t2_prime_ppm, loss_ppm, radius_m, name)

    def with_t2_prime(self, t2_prime_ppm: Number) -> "MirrorSpec":
        return MirrorSpec(self.t1_ppm, self.t2_ppm, self.t1_prime_ppm, to_ppm(t2_prime_ppm), self.loss_ppm,
                          self.radius_m, self.name)

    def _reflectivity(self, transmission: Fraction) -> Fraction:
        return 1 - (self.loss_ppm + transmission) * PPM

    @property
    def r1(self) -> Fraction:
        return self._reflectivity(self.t1_ppm)

    @property
    def r2(self) -> Fraction:
        return self._reflectivity(self.t2_ppm)

    @property
    def r1_prime(self) -> Fraction:
        return self._reflectivity(self.t1_prime_ppm)

    @property
    def r2_prime(self) -> Fraction:
        return self._reflectivity(self.t2_prime_ppm)


@dataclass(frozen=True)
class AtomPreset:
    """原子预设: ω、ω′ 与 γ、γ′、γ″ 为 rad/s，寿命仅作记录"""

    name: str
    omega: float
    omega_prime: float
    gamma: float
    gamma_prime: float
    gamma_dprime: float
    tau_s: Tuple[float, float, float] = (math.nan, math.nan, math.nan)
    levels: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for key in ("omega", "omega_prime", "gamma", "gamma_prime"):
            value = getattr(self, key)
            if not math.isfinite(value) or value <= 0:
                raise ParameterError(f"atom preset '{self.name}': {key} must be positive, got {value}")
        if not math.isfinite(self.gamma_dprime) or self.gamma_dprime < 0:
            raise ParameterError(f"atom preset '{self.name}': gamma_dprime must be >= 0")


@dataclass(frozen=True)
class CavityGeometry:
    length_m: float

    def __post_init__(self):
        if not math.isfinite(self.length_m) or self.length_m <= 0:
            raise ParameterError(f"cavity length must be positive, got {self.length_m}")

    @classmethod
    def from_mm(cls, length_mm: float) -> "CavityGeometry":
        return cls(length_mm * 1e-3)


@dataclass(frozen=True)
class DampingRates:
    kappa: float
    eta: float
    eta_prime: float
    eta_tot: float


@dataclass(frozen=True)
class CavitySystem:
    """某一器件点的全部派生量"""

    geometry: CavityGeometry
    mirrors: MirrorSpec
    preset: AtomPreset
    params: PhysicalParams
    coeffs: EffectiveCoefficients
    volume: float
    volume_prime: float
    damping: DampingRates
    kappa_gamma: float
    include_kappa_gamma: bool = False

    @property
    def kappa_effective(self) -> float:
        """闭合（激光关闭）存储期间的 a 模衰减: κ，或 κ + κ_γ"""
        return self.damping.kappa + (self.kappa_gamma if self.include_kappa_gamma else 0.0)

    def langevin(self) -> LangevinMatrix:
        return langevin_matrix(self.coeffs, self.params, self.kappa_effective, self.damping.eta,
                               self.damping.eta_prime)

    def summary_over_2pi(self) -> dict:
        """(g, g′, Δ, Ω, Ω′, γ, γ′, γ″, η_tot, κ, κ_γ) / 2π，单位 Hz"""
        p = self.params
        return {
            "g": p.g / TWO_PI,
            "g_prime": p.g_prime / TWO_PI,
            "delta": p.delta / TWO_PI,
            "omega": p.omega / TWO_PI,
            "omega_prime": p.omega_prime / TWO_PI,
            "gamma": p.gamma / TWO_PI,
            "gamma_prime": p.gamma_prime / TWO_PI,
            "gamma_dprime": p.gamma_dprime / TWO_PI,
            "eta_tot": self.damping.eta_tot / TWO_PI,
            "kappa": self.damping.kappa / TWO_PI,
            "kappa_gamma": self.kappa_gamma / TWO_PI,
        }


# ==================== 公式 ====================

def mode_volume(length_m: float, radius_m: float, omega: float) -> float:
    """V = πcl√(l(2r−l))/(4ω)"""
    if omega <= 0:
        raise ParameterError(f"mode frequency must be positive, got {omega}")
    if length_m <= 0:
        raise ParameterError(f"cavity length must be positive, got {length_m}")
    if length_m >= 2.0 * radius_m:
        raise ParameterError(f"unstable resonator: l = {length_m} m >= 2r = {2.0 * radius_m} m")
    return math.pi * SPEED_OF_LIGHT * length_m * math.sqrt(length_m * (2.0 * radius_m - length_m)) / (4.0 * omega)


def coupling_g(omega: float, gamma: float, volume: float) -> float:
    """g = √(3πc³γ/(2ω²V))"""
    if omega <= 0 or gamma <= 0 or volume <= 0:
        raise ParameterError("coupling needs positive omega, gamma and mode volume")
    return math.sqrt(3.0 * math.pi * SPEED_OF_LIGHT ** 3 * gamma / (2.0 * omega * omega * volume))


def round_trip_rate(r1: Fraction, r2: Fraction, length_m: float) -> float:
    """
    两镜腔的场衰减率 c(1 − √(R₁R₂))/(l(R₁R₂)^{1/4})

    R₁ = R₂ = R 时化为 c(1−R)/(l√R)；1 − √x 按 (1−x)/(1+√x) 计算
    """
    product = r1 * r2
    if not 0 < product < 1:
        raise ParameterError(f"mirror reflectivity product {float(product)} outside (0, 1)")
    root = math.sqrt(float(product))
    one_minus_root = float(1 - product) / (1.0 + root)
    return SPEED_OF_LIGHT * one_minus_root / (length_m * math.sqrt(root))


def damping_rates(mirrors: MirrorSpec, length_m: float) -> DampingRates:
    """
    κ 由模式 a 的两镜给出；η_tot 由模式 b 的两镜给出，按输出镜透射 T′₂ 与其余损耗 2L+T′₁ 分配:
    η = T′₂η_tot/𝒩，η′ = (2L+T′₁)η_tot/𝒩，𝒩 = 2L+T′₁+T′₂
    """
    if not math.isfinite(length_m) or length_m <= 0:
        raise ParameterError(f"cavity length must be positive, got {length_m}")
    kappa = round_trip_rate(mirrors.r1, mirrors.r2, length_m)
    eta_tot = round_trip_rate(mirrors.r1_prime, mirrors.r2_prime, length_m)
    other = 2 * mirrors.loss_ppm + mirrors.t1_prime_ppm
    total = other + mirrors.t2_prime_ppm
    if total == 0:
        raise ParameterError("mode b has neither loss nor transmission; eta split undefined")
    eta = eta_tot * float(mirrors.t2_prime_ppm / total)
    eta_prime = eta_tot * float(other / total)
    return DampingRates(kappa, eta, eta_prime, eta_tot)


def kappa_gamma(n_atoms: int, gamma: float, g: float, delta: float) -> float:
    """κ_γ ≈ nγ(g/Δ)²"""
    if delta == 0.0:
        raise ParameterError("kappa_gamma needs Delta != 0")
    return n_atoms * gamma * g * g / (delta * delta)


def derive_system(geometry: CavityGeometry, mirrors: MirrorSpec, preset: AtomPreset, n_atoms: int,
                  delta_over_g: float, omega_over_delta: float, include_kappa_gamma: bool = False,
                  cutoff: int = 1) -> CavitySystem:
    """
    几何与镜面 → V, V′ → g, g′；Δ = (Δ/g)·g，Ω = (Ω/Δ)·Δ，Ω′ 取使 δ₁ = 0 的值；
    γ″ 在 γ₃ 与 γ₃′ 之间平分
    """
    length, radius = geometry.length_m, mirrors.radius_m
    volume = mode_volume(length, radius, preset.omega)
    volume_prime = mode_volume(length, radius, preset.omega_prime)
    g = coupling_g(preset.omega, preset.gamma, volume)
    g_prime = coupling_g(preset.omega_prime, preset.gamma_prime, volume_prime)
    delta = delta_over_g * g
    omega = omega_over_delta * delta
    omega_prime = omega_prime_for_zero_delta1(omega, delta, g, g_prime)
    params = PhysicalParams(
        g=g, g_prime=g_prime, delta=delta, omega=omega, omega_prime=omega_prime,
        gamma=preset.gamma, gamma_prime=preset.gamma_prime,
        gamma3=0.5 * preset.gamma_dprime, gamma3_prime=0.5 * preset.gamma_dprime,
        n_atoms=n_atoms, cutoff=cutoff,
    )
    coeffs = effective_coefficients(params)
    damping = damping_rates(mirrors, length)
    k_gamma = kappa_gamma(n_atoms, preset.gamma, g, delta)
    if k_gamma >= damping.kappa:
        log.debug(f"kappa_gamma {k_gamma:.3e} is not below kappa {damping.kappa:.3e}")
    return CavitySystem(geometry, mirrors, preset, params, coeffs, volume, volume_prime, damping, k_gamma,
                        include_kappa_gamma)
