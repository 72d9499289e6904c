"""
输入-输出模块
Langevin 漂移矩阵 M、品质因数 F（求积 / Sylvester / 近似公式）、波导时间模式与输出损耗信道

约定: 模式算符满足 d/dτ (a, b)ᵀ = −M (a, b)ᵀ + 噪声，时间模式为 u(τ) = [e^{−Mτ}]₁₂，
F = η∫₀^∞ |[e^{−Mτ}]₁₂|² dτ（代码中为 0 起始指标 [0, 1]）
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad

from ..errors import CutoffTooSmallError, DimensionMismatchError, ParameterError, UnstableMatrixError
from ..utils.common import get_logger
from .diamond_model import (
    EffectiveCoefficients,
    PhysicalParams,
    ValidityCheck,
    ValidityReport,
)
from .operator_core import (
    DensityOperator,
    HilbertSpace,
    destroy,
    matrix_exponential,
    spectral_abscissa,
    sylvester_solve,
)

log = get_logger(__name__)

# 求积上限 T* = QUAD_HORIZON / 谱横坐标
QUAD_HORIZON = 40.0
MAX_PANELS = 20000

# 腔条件余量（比值 / η_tot）的 pass / warn 阈值
CAVITY_CONDITION_THRESHOLDS = (10.0, 3.0)


@dataclass(frozen=True)
class LangevinMatrix:
    m: np.ndarray
    zeta1: float
    theta1: float
    zeta2: float
    theta2: float
    kappa: float
    eta: float
    eta_prime: float
    delta1: float
    delta2: float

    @property
    def eta_tot(self) -> float:
        return self.eta + self.eta_prime

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.m)

    @property
    def abscissa(self) -> float:
        return spectral_abscissa(self.m)

    @property
    def is_stable(self) -> bool:
        return self.abscissa > 0.0

    def rates(self) -> dict:
        return {
            "zeta1": self.zeta1, "theta1": self.theta1, "zeta2": self.zeta2, "theta2": self.theta2,
            "kappa": self.kappa, "eta": self.eta, "eta_prime": self.eta_prime, "eta_tot": self.eta_tot,
        }


@dataclass(frozen=True)
class FomResult:
    f_quadrature: float
    f_sylvester: float
    f_approx: float
    profile_norm: float

    @property
    def method_delta(self) -> float:
        return abs(self.f_quadrature - self.f_sylvester)

    @property
    def approx_gap(self) -> float:
        return self.f_approx - self.f_sylvester


# ==================== Langevin 矩阵 ====================

def langevin_matrix(coeffs: EffectiveCoefficients, params: PhysicalParams, kappa: float, eta: float,
                    eta_prime: float) -> LangevinMatrix:
    """
    M₁₁ = (κ+ζ₁+ζ₂)/2，M₁₂ = M₂₁ = (√(ζ₁θ₁)+√(ζ₂θ₂))/2 − iδ₂，M₂₂ = (η_tot+θ₁+θ₂)/2 − iδ₁
    ζ₁ = nγ′α₃²g²，θ₁ = nγ′α₁²g′²，ζ₂ = nγα₂²g²，θ₂ = nγα₃²g′²
    """
    for name, value in (("kappa", kappa), ("eta", eta), ("eta_prime", eta_prime)):
        if not math.isfinite(value) or value < 0:
            raise ParameterError(f"cavity rate {name} must be finite and >= 0, got {value}")
    n, g, gp = params.n_atoms, params.g, params.g_prime
    zeta1 = n * params.gamma_prime * coeffs.alpha3 ** 2 * g * g
    theta1 = n * params.gamma_prime * coeffs.alpha1 ** 2 * gp * gp
    zeta2 = n * params.gamma * coeffs.alpha2 ** 2 * g * g
    theta2 = n * params.gamma * coeffs.alpha3 ** 2 * gp * gp
    eta_tot = eta + eta_prime
    cross = 0.5 * (math.sqrt(zeta1 * theta1) + math.sqrt(zeta2 * theta2)) - 1j * coeffs.delta2
    m = np.array([
        [0.5 * (kappa + zeta1 + zeta2), cross],
        [cross, 0.5 * (eta_tot + theta1 + theta2) - 1j * coeffs.delta1],
    ], dtype=complex)
    lm = LangevinMatrix(m, zeta1, theta1, zeta2, theta2, kappa, eta, eta_prime, coeffs.delta1, coeffs.delta2)
    if not lm.is_stable:
        log.warning(f"Langevin matrix is not stable (spectral abscissa {lm.abscissa:.3e})")
    return lm


def _require_stable(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
        raise DimensionMismatchError(f"figure of merit needs a square matrix of size >= 2, got {m.shape}")
    abscissa = spectral_abscissa(m)
    if not abscissa > 0.0:
        raise UnstableMatrixError(f"M is not stable: min Re(eigenvalue) = {abscissa:.3e} <= 0")
    return abscissa


def _check_eta(eta: float) -> None:
    if not math.isfinite(eta) or eta < 0:
        raise ParameterError(f"eta must be finite and >= 0, got {eta}")


# ==================== 品质因数 ====================

def _element(m: np.ndarray, tau: float) -> complex:
    return complex(matrix_exponential(-m * tau)[0, 1])


def _element_function(m: np.ndarray):
    """τ ↦ [e^{−Mτ}]₁₂；本征基条件良好时用谱分解求值，否则逐点矩阵指数"""
    values, vectors = np.linalg.eig(m)
    if np.linalg.cond(vectors) < 1e4:
        weights = vectors[0, :] * np.linalg.inv(vectors)[:, 1]
        return lambda tau: complex(np.sum(weights * np.exp(-values * tau)))
    return lambda tau: _element(m, tau)


def fom_quadrature(m: np.ndarray, eta: float, abs_tol: float = 1e-9) -> float:
    """
    F = η∫₀^∞ |[e^{−Mτ}]₁₂|² dτ

    [0, T*]（T* = 40/谱横坐标）按最快时间尺度分段做自适应 Gauss-Kronrod 求积，
    尾部以 |u(T*)|²/(2a) 的指数界补上
    """
    _check_eta(eta)
    m = np.asarray(m, dtype=complex)
    abscissa = _require_stable(m)
    if eta == 0.0:
        return 0.0
    horizon = QUAD_HORIZON / abscissa
    radius = float(np.max(np.abs(np.linalg.eigvals(m))))
    panels = int(min(max(math.ceil(horizon * radius / math.pi), 1), MAX_PANELS))
    edges = np.linspace(0.0, horizon, panels + 1)

    element = _element_function(m)

    def integrand(tau):
        return abs(element(tau)) ** 2

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _err = quad(integrand, lo, hi, epsabs=abs_tol / (eta * panels * 10.0), epsrel=1e-12, limit=200)
        total += value
    tail = integrand(horizon) / (2.0 * abscissa)
    return float(eta * (total + tail))


def fom_sylvester(m: np.ndarray, eta: float) -> float:
    """F = η·𝒳[0,1,1,0]，𝒳 为 (M⊗I)X + X(I⊗M†) = I 的解；适用于任意 d×d 稳定 M"""
    _check_eta(eta)
    _require_stable(m)
    if eta == 0.0:
        return 0.0
    x = sylvester_solve(np.asarray(m, dtype=complex))
    return float(eta * x[0, 1, 1, 0].real)


def fom_approx(lm: LangevinMatrix) -> float:
    """
    F ≈ (η/η_tot)[1 − (√(ζ₁θ₁)+√(ζ₂θ₂))²/(2δ₂²) − η_tot(κ+ζ₁+ζ₂)/(4δ₂²+η_tot(κ+ζ₁+ζ₂))]

    适用区间 η_tot ≫ δ₂ ≫ κ, ζ, θ（不强制）
    """
    if lm.delta2 == 0.0:
        raise ParameterError("approximate figure of merit needs delta2 != 0")
    if lm.eta_tot <= 0.0:
        raise ParameterError("approximate figure of merit needs eta_tot > 0")
    d2 = lm.delta2 * lm.delta2
    cross = (math.sqrt(lm.zeta1 * lm.theta1) + math.sqrt(lm.zeta2 * lm.theta2)) ** 2
    loss_a = lm.kappa + lm.zeta1 + lm.zeta2
    return (lm.eta / lm.eta_tot) * (1.0 - cross / (2.0 * d2) - lm.eta_tot * loss_a / (4.0 * d2 + lm.eta_tot * loss_a))


def compute_fom(lm: LangevinMatrix, quadrature: bool = True) -> FomResult:
    """三种方法的 F；quadrature=False 时跳过求积（扫描中使用），对应字段为 NaN"""
    f_syl = fom_sylvester(lm.m, lm.eta)
    f_quad = fom_quadrature(lm.m, lm.eta) if quadrature else math.nan
    f_apx = fom_approx(lm) if lm.delta2 != 0.0 and lm.eta_tot > 0 else math.nan
    for name, value in (("F_sylvester", f_syl), ("F_quadrature", f_quad)):
        if not math.isnan(value) and not -1e-9 <= value <= 1.0 + 1e-9:
            raise ParameterError(f"{name} = {value} outside [0, 1]")
    profile_norm = f_quad / f_syl if quadrature and f_syl > 0 else math.nan
    if quadrature and abs(f_quad - f_syl) > 1e-8:
        log.warning(f"quadrature and Sylvester figures of merit differ by {abs(f_quad - f_syl):.3e}")
    return FomResult(f_quad, f_syl, f_apx, profile_norm)


# ==================== 时间模式 ====================

def temporal_profile(m: np.ndarray, tau) -> np.ndarray:
    """
    归一化时间模式 u(τ) = [e^{−Mτ}]₁₂ / √(∫|[e^{−Mτ}]₁₂|²dτ)

    归一化常数取自 Sylvester 解，与 τ 网格无关；返回与 tau 同形状的复数组
    """
    m = np.asarray(m, dtype=complex)
    _require_stable(m)
    norm_sq = float(sylvester_solve(m)[0, 1, 1, 0].real)
    if norm_sq <= 0.0:
        raise ParameterError("temporal profile is identically zero (M has no 1-2 coupling)")
    taus = np.asarray(tau, dtype=float)
    if np.any(taus < 0):
        raise ParameterError("temporal profile is defined for tau >= 0")
    flat = np.array([_element(m, t) for t in taus.ravel()], dtype=complex)
    return (flat / math.sqrt(norm_sq)).reshape(taus.shape)


# ==================== 输出损耗信道 ====================

def _loss_superoperator(cutoff: int) -> np.ndarray:
    """ℒρ = aρa† − ½a†aρ − ½ρa†a，按行优先向量化（vec(AρB) = (A⊗Bᵀ)vec ρ）"""
    a = destroy(cutoff)
    num = a.conj().T @ a
    eye = np.eye(cutoff + 1, dtype=complex)
    return np.kron(a, a.conj()) - 0.5 * np.kron(num, eye) - 0.5 * np.kron(eye, num.T)


def loss_channel(loss: float, cutoff: int) -> np.ndarray:
    """e^{loss·ℒ} 的超算符矩阵"""
    return matrix_exponential(loss * _loss_superoperator(cutoff))


def apply_output_loss(rho0: DensityOperator, f: float, cutoff: Optional[int] = None) -> DensityOperator:
    """
    ρ_out = e^{(1−F)ℒ}ρ₀（截断空间上的精确超算符指数）

    cutoff 大于输入空间时先补零；最高 Fock 能级布居超过 1e-6 视为截断过小
    """
    if not 0.0 <= f <= 1.0:
        raise ParameterError(f"F must lie in [0, 1], got {f}")
    factors = rho0.space.factors
    if len(factors) != 1 or factors[0].kind != "mode" or rho0.space.is_restricted:
        raise DimensionMismatchError("output loss acts on a single unrestricted mode")
    rho = rho0.matrix
    current = factors[0].dim - 1
    cutoff = current if cutoff is None else int(cutoff)
    if cutoff < current:
        support = np.flatnonzero(np.abs(np.diag(rho)) > 0)
        if support.size and support[-1] > cutoff:
            raise CutoffTooSmallError(f"cutoff {cutoff} is below the input support (level {support[-1]})")
        rho = rho[:cutoff + 1, :cutoff + 1]
    elif cutoff > current:
        padded = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        padded[:current + 1, :current + 1] = rho
        rho = padded
    top = float(abs(rho[cutoff, cutoff]))
    if top > 1e-6:
        raise CutoffTooSmallError(f"population {top:.3e} at the top Fock level {cutoff}; raise the cutoff")
    d = cutoff + 1
    out = (loss_channel(1.0 - f, cutoff) @ rho.ravel()).reshape(d, d)
    result = DensityOperator(HilbertSpace.single_mode(cutoff, factors[0].label), out)
    drift = abs(result.trace() - complex(np.trace(rho)))
    if drift > 1e-8:
        log.warning(f"output loss trace drift {drift:.3e}")
    return result


def choi_matrix(f: float, cutoff: int) -> np.ndarray:
    """Choi 矩阵 Σ_ij |i><j| ⊗ E(|i><j|)，E = e^{(1−F)ℒ}；半正定即完全正"""
    if not 0.0 <= f <= 1.0:
        raise ParameterError(f"F must lie in [0, 1], got {f}")
    d = cutoff + 1
    channel = loss_channel(1.0 - f, cutoff)
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            image = channel[:, i * d + j].reshape(d, d)
            choi[i * d:(i + 1) * d, j * d:(j + 1) * d] = image
    return choi


# ==================== 腔条件 ====================

def cavity_conditions(params: PhysicalParams, coeffs: EffectiveCoefficients, kappa: float,
                      eta_tot: float) -> ValidityReport:
    """η_tot ≪ ng²/γ、η_tot ≪ ng′²/γ′、η_tot ≪ δ₂²/κ 的余量（比值 / η_tot）"""
    n = params.n_atoms

    def ratio(num: float, den: float) -> float:
        if den == 0.0:
            return math.inf
        return num / den

    checks = (
        ValidityCheck("cooperativity_a", ratio(ratio(n * params.g ** 2, params.gamma), eta_tot),
                      *CAVITY_CONDITION_THRESHOLDS, "(n g^2 / gamma) / eta_tot"),
        ValidityCheck("cooperativity_b", ratio(ratio(n * params.g_prime ** 2, params.gamma_prime), eta_tot),
                      *CAVITY_CONDITION_THRESHOLDS, "(n g'^2 / gamma') / eta_tot"),
        ValidityCheck("storage", ratio(ratio(coeffs.delta2 ** 2, kappa), eta_tot),
                      *CAVITY_CONDITION_THRESHOLDS, "(delta2^2 / kappa) / eta_tot"),
    )
    return ValidityReport(checks)
