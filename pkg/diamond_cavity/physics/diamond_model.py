"""
菱形能级模型模块
全模型哈密顿量与 Lindblad 算符、绝热消除后的有效系数与有效模型、缀饰态基、有效性判据

能级约定: |0> 基态，|1>、|2> 中间态，|3> 上能级；|1>..|3> 的激发权重均为 1（激光为经典场）
a 模耦合 |0>↔|2>（强度 g），b 模耦合 |0>↔|1>（强度 g′），激光 Ω 耦合 |2>↔|3>，Ω′ 耦合 |1>↔|3>
所有频率与速率均为角频率（rad/s）；以 g 为单位的参数通过 PhysicalParams.in_units_of_g 换算
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionMismatchError, ParameterError, SingularityError
from ..utils.common import get_logger
from .operator_core import (
    HilbertSpace,
    Operator,
    destroy,
    flip,
)

log = get_logger(__name__)


# ==================== 参数类型 ====================

@dataclass(frozen=True)
class PhysicalParams:
    """模型原始参数（rad/s），γ″ = γ₃ + γ₃′"""

    g: float
    g_prime: float
    delta: float
    omega: float
    omega_prime: float
    gamma: float = 0.0
    gamma_prime: float = 0.0
    gamma3: float = 0.0
    gamma3_prime: float = 0.0
    n_atoms: int = 1
    cutoff: int = 2

    def __post_init__(self):
        for name in ("g", "g_prime", "delta", "omega", "omega_prime",
                     "gamma", "gamma_prime", "gamma3", "gamma3_prime"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("g", "g_prime", "omega", "omega_prime"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative (real, non-negative couplings)")
        for name in ("gamma", "gamma_prime", "gamma3", "gamma3_prime"):
            if getattr(self, name) < 0:
                raise ParameterError(f"decay rate {name} must be non-negative")
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ParameterError(f"n_atoms must be an integer >= 1, got {self.n_atoms}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 0:
            raise ParameterError(f"cutoff must be an integer >= 0, got {self.cutoff}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        object.__setattr__(self, "cutoff", int(self.cutoff))

    @property
    def gamma_dprime(self) -> float:
        return self.gamma3 + self.gamma3_prime

    @property
    def n(self) -> int:
        return self.n_atoms

    @classmethod
    def in_units_of_g(cls, g: float, g_prime: float, delta: float, omega: float, omega_prime: float,
                      gamma: float = 0.0, gamma_prime: float = 0.0, gamma3: float = 0.0,
                      gamma3_prime: float = 0.0, n_atoms: int = 1, cutoff: int = 2) -> "PhysicalParams":
        """除 g 外所有频率以 g 为单位给出，g 本身为 rad/s"""
        return cls(g=g, g_prime=g_prime * g, delta=delta * g, omega=omega * g, omega_prime=omega_prime * g,
                   gamma=gamma * g, gamma_prime=gamma_prime * g, gamma3=gamma3 * g,
                   gamma3_prime=gamma3_prime * g, n_atoms=n_atoms, cutoff=cutoff)

    def replace(self, **changes) -> "PhysicalParams":
        return dataclasses.replace(self, **changes)

    def lasers_off(self) -> "PhysicalParams":
        return self.replace(omega=0.0, omega_prime=0.0)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class EffectiveCoefficients:
    """绝热消除后的闭式系数；lambdas 在激光关闭时为 None（缀饰态无定义）"""

    n_atoms: int
    xi: float
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    alpha6: float
    delta0: float
    delta1: float
    delta2: float
    delta_r: float
    epsilon: float
    gamma_eff: float
    gamma_tot: float
    lambdas: Optional[Tuple[float, float, float, float, float, float]] = None

    @property
    def alphas(self) -> Tuple[float, ...]:
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4, self.alpha5, self.alpha6)

    @property
    def frame_offset(self) -> float:
        """H_lab = −δ_r C†C + δ₀′(a†a + b†b) 中的 δ₀′"""
        return self.delta0 + self.delta_r * (1.0 - self.epsilon)


@dataclass(frozen=True)
class DressedBasis:
    """H₀ 在 {|1>,|2>,|3>} 上的本征态 |μ>、|φ>、|ψ>"""

    omega_r: float
    energies: Tuple[float, float, float]
    norm_mu: float
    norm_phi: float
    norm_psi: float
    mu: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    def vectors(self) -> np.ndarray:
        """3×3，列依次为 |μ>、|φ>、|ψ>"""
        return np.column_stack([self.mu, self.phi, self.psi])

    def unitary(self) -> np.ndarray:
        """
        4×4 幺正阵，列为缀饰基 {|0>, |μ>, |φ>, |ψ>} 在裸基 {|0>..|3>} 中的分量

        |φ> 取与闭式定义相反的整体相位，使 U†HU 的耦合符号与缀饰表象哈密顿量一致
        """
        u = np.zeros((4, 4), dtype=complex)
        u[0, 0] = 1.0
        u[1:, 1] = self.mu
        u[1:, 2] = -self.phi
        u[1:, 3] = self.psi
        return u


@dataclass(frozen=True)
class FrameChoice:
    """有效哈密顿量的参考系: lab、rotating（扣除 δ₀）或 generic（δ_x）"""

    variant: str = "lab"
    delta_x: Optional[float] = None

    VARIANTS = ("lab", "rotating", "generic")

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise ParameterError(f"unknown frame variant '{self.variant}', expected one of {self.VARIANTS}")
        if self.delta_x is not None and not math.isfinite(self.delta_x):
            raise ParameterError("delta_x must be finite")

    @classmethod
    def lab(cls) -> "FrameChoice":
        return cls("lab")

    @classmethod
    def rotating(cls) -> "FrameChoice":
        return cls("rotating")

    @classmethod
    def generic(cls, delta_x: float) -> "FrameChoice":
        return cls("generic", float(delta_x))

    def number_shift(self, coeffs: EffectiveCoefficients) -> float:
        """(a†a + b†b) 项的系数"""
        if self.variant == "generic":
            if self.delta_x is None:
                raise ParameterError("generic frame requires delta_x")
            return self.delta_x
        if self.delta_x is not None:
            raise ParameterError(f"frame '{self.variant}' does not take delta_x (use the generic frame)")
        return coeffs.delta0 if self.variant == "lab" else 0.0


# ==================== 空间检查与提升 ====================

def _check_cavity_space(space: HilbertSpace, params: Optional[PhysicalParams] = None) -> None:
    kinds = [f.kind for f in space.factors]
    labels = [f.label for f in space.factors]
    if labels[:2] != ["a", "b"] or kinds[:2] != ["mode", "mode"] or any(k != "atom" for k in kinds[2:]):
        raise DimensionMismatchError(f"expected modes (a, b) followed by atoms, got factors {labels}")
    n_atoms = len(kinds) - 2
    if n_atoms < 1:
        raise DimensionMismatchError("the full model needs at least one atom factor")
    if params is not None and n_atoms != params.n_atoms:
        raise DimensionMismatchError(f"space holds {n_atoms} atoms but params.n_atoms = {params.n_atoms}")


def _check_two_mode_space(space: HilbertSpace) -> None:
    labels = [f.label for f in space.factors]
    if labels != ["a", "b"] or any(f.kind != "mode" for f in space.factors):
        raise DimensionMismatchError(f"effective models live on the two-mode space (a, b), got factors {labels}")


def _lift(full: HilbertSpace, ops: dict) -> sp.csr_matrix:
    """未截断空间上的稀疏张量积（其余因子为单位阵）"""
    blocks = [sp.identity(f.dim, dtype=complex, format="csr") for f in full.factors]
    for idx, small in ops.items():
        blocks[idx] = sp.csr_matrix(small, dtype=complex)
    return reduce(lambda x, y: sp.kron(x, y, format="csr"), blocks)


def _finish(space: HilbertSpace, data: sp.csr_matrix) -> Operator:
    full = space.unrestricted()
    lifted = Operator(full, data if full.prefers_sparse else data.toarray())
    return space.restrict(lifted) if space.is_restricted else lifted


def _mode_ops(space: HilbertSpace):
    a = destroy(space.factors[0].dim - 1)
    b = destroy(space.factors[1].dim - 1)
    return a, b


# ==================== 全模型 ====================

def build_full_hamiltonian(params: PhysicalParams, space: HilbertSpace) -> Operator:
    """
    旋转框架下的 n 原子哈密顿量
    H = Σ_k [Δσ11 + Δσ22 + 2Δσ33 + (Ωσ23 + Ω′σ13 + g a†σ02 + g′ b†σ01 + h.c.)]
    """
    _check_cavity_space(space, params)
    full = space.unrestricted()
    a, b = _mode_ops(space)
    atom_part = (np.diag([0.0, params.delta, params.delta, 2.0 * params.delta]).astype(complex)
                 + params.omega * (flip(2, 3) + flip(3, 2))
                 + params.omega_prime * (flip(1, 3) + flip(3, 1)))
    total = sp.csr_matrix((full.total_dim, full.total_dim), dtype=complex)
    for k in full.atom_indices:
        total = total + _lift(full, {k: atom_part})
        if params.g:
            up = params.g * _lift(full, {0: a.conj().T, k: flip(0, 2)})
            total = total + up + up.conj().T
        if params.g_prime:
            up = params.g_prime * _lift(full, {1: b.conj().T, k: flip(0, 1)})
            total = total + up + up.conj().T
    return _finish(space, total)


def build_lindblads(params: PhysicalParams, space: HilbertSpace) -> List[Operator]:
    """
    每个原子四个跃迁算符 L1=√γ′σ01, L2=√γσ02, L3=√γ₃σ23, L4=√γ₃′σ13，按原子顺序排列

    L1、L2 使激发数 N 减一，L3、L4 保持 N；扇区受限空间须同时包含 N 与 N−1（如 sector=(0, 1)），
    否则 restrict 抛出 NonConservingOperatorError
    """
    _check_cavity_space(space, params)
    full = space.unrestricted()
    channels = (
        (params.gamma_prime, flip(0, 1)),
        (params.gamma, flip(0, 2)),
        (params.gamma3, flip(2, 3)),
        (params.gamma3_prime, flip(1, 3)),
    )
    out = []
    for k in full.atom_indices:
        for rate, sigma in channels:
            out.append(_finish(space, math.sqrt(rate) * _lift(full, {k: sigma})))
    return out


def build_nonhermitian(params: PhysicalParams, space: HilbertSpace) -> Operator:
    """
    无跃迁哈密顿量 H̃ = H − (i/2)ΣL†L

    ΣL†L 在原子上是对角的，能级 1、2、3 的失谐分别变为 Δ−iγ′/2、Δ−iγ/2、2Δ−iγ″/2；
    因此该算符在单一激发数扇区中同样可用
    """
    hamiltonian = build_full_hamiltonian(params, space)
    full = space.unrestricted()
    decay = np.diag([0.0, -0.5j * params.gamma_prime, -0.5j * params.gamma, -0.5j * params.gamma_dprime])
    total = sp.csr_matrix((full.total_dim, full.total_dim), dtype=complex)
    for k in full.atom_indices:
        total = total + _lift(full, {k: decay})
    return hamiltonian + _finish(space, total)


# ==================== 有效系数 ====================

def bare_drive_hamiltonian(params: PhysicalParams) -> np.ndarray:
    """激光缀饰的原子哈密顿量 H₀，基 {|1>, |2>, |3>}"""
    d, om, omp = params.delta, params.omega, params.omega_prime
    return np.array([[d, 0.0, omp], [0.0, d, om], [omp, om, 2.0 * d]], dtype=float)


def dressed_basis(params: PhysicalParams) -> DressedBasis:
    om, omp, d = params.omega, params.omega_prime, params.delta
    if om == 0.0 and omp == 0.0:
        raise ParameterError("dressed basis undefined for Omega = Omega' = 0 (|mu> cannot be normalized)")
    omega_r = math.sqrt(d * d + 4.0 * om * om + 4.0 * omp * omp)
    norm_mu = 1.0 / math.sqrt(om * om + omp * omp)
    norm_phi = 1.0 / math.sqrt(2.0 * omega_r * (omega_r - d))
    norm_psi = 1.0 / math.sqrt(2.0 * omega_r * (omega_r + d))
    mu = norm_mu * np.array([-om, omp, 0.0])
    phi = norm_phi * np.array([2.0 * omp, 2.0 * om, d - omega_r])
    psi = norm_psi * np.array([2.0 * omp, 2.0 * om, d + omega_r])
    energies = (d, 0.5 * (3.0 * d - omega_r), 0.5 * (3.0 * d + omega_r))
    return DressedBasis(omega_r, energies, norm_mu, norm_phi, norm_psi, mu, phi, psi)


def _lambdas(params: PhysicalParams) -> Optional[Tuple[float, ...]]:
    if params.omega == 0.0 and params.omega_prime == 0.0:
        return None
    basis = dressed_basis(params)
    d, om, omp = params.delta, params.omega, params.omega_prime
    g, gp = params.g, params.g_prime
    lower = 3.0 * d - basis.omega_r
    upper = 3.0 * d + basis.omega_r
    scale = max(abs(3.0 * d), basis.omega_r)
    if abs(lower) <= 1e-12 * scale or abs(upper) <= 1e-12 * scale:
        raise SingularityError("dressed-state denominator 3*Delta -/+ Omega_R vanishes")
    return (
        basis.norm_mu * g * omp / d,
        4.0 * basis.norm_phi * g * om / lower,
        4.0 * basis.norm_psi * g * om / upper,
        basis.norm_mu * gp * om / d,
        4.0 * basis.norm_phi * gp * omp / lower,
        4.0 * basis.norm_psi * gp * omp / upper,
    )


def effective_coefficients(params: PhysicalParams) -> EffectiveCoefficients:
    """
    绝热消除系数
    ξ = 1/(Δ[Ω²+Ω′²−2Δ²])，α 由 H₀ 的逆给出，δ₀ = −ng²α₂，δ₁ = n(g²α₂ − g′²α₁)，δ₂ = −ngg′α₃
    """
    d, om, omp = params.delta, params.omega, params.omega_prime
    g, gp, n = params.g, params.g_prime, params.n_atoms
    if d == 0.0:
        raise ParameterError("effective model requires Delta != 0")
    pole = om * om + omp * omp - 2.0 * d * d
    if abs(pole) <= 1e-12 * max(om * om + omp * omp, 2.0 * d * d):
        raise SingularityError("xi pole: Omega^2 + Omega'^2 = 2 Delta^2, the excited block is not invertible")
    xi = 1.0 / (d * pole)
    alpha1 = xi * (om * om - 2.0 * d * d)
    alpha2 = xi * (omp * omp - 2.0 * d * d)
    alpha3 = -xi * om * omp
    alpha4 = -xi * d * d
    alpha5 = xi * d * omp
    alpha6 = xi * d * om
    delta0 = -n * g * g * alpha2
    delta1 = n * (g * g * alpha2 - gp * gp * alpha1)
    delta2 = -n * g * gp * alpha3
    delta_r = math.sqrt(4.0 * delta2 * delta2 + delta1 * delta1)
    # δ_r = 0 时两模不耦合，ε 取中点
    epsilon = 0.5 * (1.0 - delta1 / delta_r) if delta_r > 0 else 0.5
    gsum = g * g + gp * gp
    gamma_eff = 0.0
    if gsum > 0:
        gamma_eff = (2.0 * n * g * g * gp * gp * (g * g * params.gamma_prime + gp * gp * params.gamma)
                     / (d * d * gsum * gsum))
    gamma_tot = n * params.gamma * g * g / (d * d)
    coeffs = EffectiveCoefficients(
        n_atoms=n, xi=xi, alpha1=alpha1, alpha2=alpha2, alpha3=alpha3, alpha4=alpha4, alpha5=alpha5,
        alpha6=alpha6, delta0=delta0, delta1=delta1, delta2=delta2, delta_r=delta_r, epsilon=epsilon,
        gamma_eff=gamma_eff, gamma_tot=gamma_tot, lambdas=_lambdas(params),
    )
    log.debug(f"coefficients: delta0={delta0:.6e} delta1={delta1:.6e} delta2={delta2:.6e} eps={epsilon:.6f}")
    return coeffs


def high_intensity_limit(params: PhysicalParams) -> dict:
    """
    Ω, Ω′ ≫ Δ 时的领头阶形式（α₁ ≈ Ω²ξ′，α₂ ≈ Ω′²ξ′，α₃ ≈ −ΩΩ′ξ′，ξ′ = 1/(Δ(Ω²+Ω′²))）

    此极限下 δ₁ = 0 的条件化为 Ω′g = Ωg′
    """
    d, om, omp = params.delta, params.omega, params.omega_prime
    if d == 0.0 or (om == 0.0 and omp == 0.0):
        raise ParameterError("high-intensity limit needs Delta != 0 and the lasers on")
    g, gp, n = params.g, params.g_prime, params.n_atoms
    xi = 1.0 / (d * (om * om + omp * omp))
    alpha1, alpha2, alpha3 = xi * om * om, xi * omp * omp, -xi * om * omp
    return {
        "alpha1": alpha1,
        "alpha2": alpha2,
        "alpha3": alpha3,
        "delta0": -n * g * g * alpha2,
        "delta1": n * (g * g * alpha2 - gp * gp * alpha1),
        "delta2": -n * g * gp * alpha3,
        "omega_prime_for_zero_delta1": om * gp / g if g > 0 else math.nan,
    }


def omega_prime_for_zero_delta1(omega: float, delta: float, g: float, g_prime: float) -> float:
    """使 δ₁ = 0 的 Ω′ = √((Ω²−2Δ²)g′²/g² + 2Δ²)"""
    if g <= 0:
        raise ParameterError("g must be positive to solve for Omega'")
    radicand = (omega * omega - 2.0 * delta * delta) * g_prime * g_prime / (g * g) + 2.0 * delta * delta
    if radicand < 0:
        raise ParameterError(f"no real Omega' makes delta1 vanish (radicand {radicand:.3e} < 0)")
    return math.sqrt(radicand)


def ground_manifold_hamiltonian(params: PhysicalParams, sector: int = 1) -> np.ndarray:
    """
    数值绝热消除: 在激发数为 sector 的扇区中把原子激发态块精确求逆（Schur 补，E = 0）

    返回原子均在 |0> 的子空间上的有效哈密顿量，基依次为 |N,0>, |N−1,1>, ..., |0,N>；
    sector = 1 时与 [[δ₀, δ₂], [δ₂, δ₀+δ₁]] 比较
    """
    if sector < 1:
        raise ParameterError("ground manifold elimination needs sector >= 1")
    space = HilbertSpace.cavity_atoms(params.n_atoms, sector, sector=sector)
    h = build_full_hamiltonian(params, space).toarray()
    zeros = (0,) * params.n_atoms
    p_idx = [space.index_of((sector - k, k) + zeros) for k in range(sector + 1)]
    q_idx = [i for i in range(space.dim) if i not in p_idx]
    h_pp = h[np.ix_(p_idx, p_idx)]
    h_pq = h[np.ix_(p_idx, q_idx)]
    h_qq = h[np.ix_(q_idx, q_idx)]
    if np.linalg.cond(h_qq) > 1e12:
        raise SingularityError("excited block is singular; adiabatic elimination undefined")
    return h_pp - h_pq @ np.linalg.solve(h_qq, h_pq.conj().T)


# ==================== 有效模型 ====================

def build_effective_hamiltonian(coeffs: EffectiveCoefficients, space: HilbertSpace,
                                frame: Optional[FrameChoice] = None) -> Operator:
    """
    有效两模哈密顿量
    lab:      δ₀(a†a+b†b) + δ₁b†b + δ₂(a†b+b†a)
    rotating: 去掉 δ₀ 项
    generic:  δ_x(a†a+b†b) + δ₁b†b + δ₂(a†b+b†a)
    """
    _check_two_mode_space(space)
    frame = frame or FrameChoice.lab()
    shift = frame.number_shift(coeffs)
    full = space.unrestricted()
    a, b = _mode_ops(space)
    num_a = _lift(full, {0: a.conj().T @ a})
    num_b = _lift(full, {1: b.conj().T @ b})
    hop = _lift(full, {0: a.conj().T, 1: b})
    data = shift * (num_a + num_b) + coeffs.delta1 * num_b + coeffs.delta2 * (hop + hop.conj().T)
    return _finish(space, data)


def superposition_operator(coeffs: EffectiveCoefficients, space: HilbertSpace) -> Operator:
    """C = √(1−ε) a − s√ε b，s = sign(δ₂)（使 −δ_r C†C 的跃迁项恰为 δ₂）"""
    _check_two_mode_space(space)
    a, b = _mode_ops(space)
    full = space.unrestricted()
    sign = 1.0 if coeffs.delta2 >= 0 else -1.0
    data = (math.sqrt(1.0 - coeffs.epsilon) * _lift(full, {0: a})
            - sign * math.sqrt(coeffs.epsilon) * _lift(full, {1: b}))
    return _finish(space, data)


def superposition_number(coeffs: EffectiveCoefficients, space: HilbertSpace) -> Operator:
    """C†C，在任意激发数扇区中可用"""
    _check_two_mode_space(space)
    c = superposition_operator(coeffs, space.unrestricted())
    return space.restrict(c.dag() @ c) if space.is_restricted else c.dag() @ c


def build_effective_nonhermitian(coeffs: EffectiveCoefficients, space: HilbertSpace) -> Operator:
    """H̃ = −2δ₂C†C − (i/2)γ_eff C†C"""
    return superposition_number(coeffs, space) * (-2.0 * coeffs.delta2 - 0.5j * coeffs.gamma_eff)


def build_effective_lindblads(params: PhysicalParams, coeffs: EffectiveCoefficients, space: HilbertSpace,
                              mode: str = "open") -> List[Operator]:
    """
    有效 Lindblad 算符 [L¹, L²]
    open:   L¹ = √(nγ′)[α₃ g a + α₁ g′ b]，L² = √(nγ)[α₂ g a + α₃ g′ b]
    closed: L¹ = √(nγ′) g′ b/(Δ − iγ′/2)，L² = √(nγ) g a/(Δ − iγ/2)
    """
    _check_two_mode_space(space)
    a, b = _mode_ops(space)
    full = space.unrestricted()
    la = _lift(full, {0: a})
    lb = _lift(full, {1: b})
    n, g, gp = params.n_atoms, params.g, params.g_prime
    root1 = math.sqrt(n * params.gamma_prime)
    root2 = math.sqrt(n * params.gamma)
    if mode == "open":
        l1 = root1 * (coeffs.alpha3 * g * la + coeffs.alpha1 * gp * lb)
        l2 = root2 * (coeffs.alpha2 * g * la + coeffs.alpha3 * gp * lb)
    elif mode == "closed":
        if params.delta == 0.0:
            raise ParameterError("closed-mode effective operators require Delta != 0")
        l1 = root1 * gp / (params.delta - 0.5j * params.gamma_prime) * lb
        l2 = root2 * g / (params.delta - 0.5j * params.gamma) * la
    else:
        raise ParameterError(f"unknown effective mode '{mode}', expected 'open' or 'closed'")
    return [_finish(space, l1), _finish(space, l2)]


def build_closed_effective_hamiltonian(params: PhysicalParams, space: HilbertSpace) -> Operator:
    """激光关闭时的有效哈密顿量: −ng²Δ/(Δ²+γ²/4)·a†a − ng′²Δ/(Δ²+γ′²/4)·b†b"""
    _check_two_mode_space(space)
    d, n = params.delta, params.n_atoms
    if d == 0.0:
        raise ParameterError("closed-mode effective model requires Delta != 0")
    a, b = _mode_ops(space)
    full = space.unrestricted()
    shift_a = -n * params.g ** 2 * d / (d * d + 0.25 * params.gamma ** 2)
    shift_b = -n * params.g_prime ** 2 * d / (d * d + 0.25 * params.gamma_prime ** 2)
    data = shift_a * _lift(full, {0: a.conj().T @ a}) + shift_b * _lift(full, {1: b.conj().T @ b})
    return _finish(space, data)


def build_dressed_hamiltonian(params: PhysicalParams, space: HilbertSpace) -> Operator:
    """
    缀饰表象下的哈密顿量（原子因子的基为 {|0>, |μ>, |φ>, |ψ>}）
    能量 Δ、(3Δ∓Ω_R)/2；耦合 𝒩_μgΩ′a†σ0μ − 2𝒩_φgΩa†σ0φ + 2𝒩_ψgΩa†σ0ψ
    − 𝒩_μg′Ωb†σ0μ − 2𝒩_φg′Ω′b†σ0φ + 2𝒩_ψg′Ω′b†σ0ψ + h.c.
    """
    _check_cavity_space(space, params)
    basis = dressed_basis(params)
    g, gp, om, omp = params.g, params.g_prime, params.omega, params.omega_prime
    full = space.unrestricted()
    a, b = _mode_ops(space)
    diag = np.diag([0.0, basis.energies[0], basis.energies[1], basis.energies[2]]).astype(complex)
    a_couplings = (basis.norm_mu * g * omp, -2.0 * basis.norm_phi * g * om, 2.0 * basis.norm_psi * g * om)
    b_couplings = (-basis.norm_mu * gp * om, -2.0 * basis.norm_phi * gp * omp, 2.0 * basis.norm_psi * gp * omp)
    total = sp.csr_matrix((full.total_dim, full.total_dim), dtype=complex)
    for k in full.atom_indices:
        total = total + _lift(full, {k: diag})
        for level, (ca, cb) in enumerate(zip(a_couplings, b_couplings), start=1):
            up = ca * _lift(full, {0: a.conj().T, k: flip(0, level)})
            up = up + cb * _lift(full, {1: b.conj().T, k: flip(0, level)})
            total = total + up + up.conj().T
    return _finish(space, total)


# ==================== 有效性判据 ====================

# 失谐判据: margin ≥ 10 通过，≥ 3 警告
DETUNING_THRESHOLDS = (10.0, 3.0)
# 缀饰态判据 min(λ₁,λ₄)/max(λ₂,λ₃,λ₅,λ₆): ≥ 4 通过，≥ 2 警告
DRESSED_THRESHOLDS = (4.0, 2.0)


@dataclass(frozen=True)
class ValidityCheck:
    name: str
    margin: float
    pass_threshold: float
    warn_threshold: float
    description: str = ""

    @property
    def status(self) -> str:
        if math.isnan(self.margin):
            return "n/a"
        if self.margin >= self.pass_threshold:
            return "pass"
        if self.margin >= self.warn_threshold:
            return "warn"
        return "fail"


@dataclass(frozen=True)
class ValidityReport:
    checks: Tuple[ValidityCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.status in ("pass", "n/a") for c in self.checks)

    def warnings(self) -> List[str]:
        return [
            f"{c.name}: margin {c.margin:.4g} is {c.status} (pass >= {c.pass_threshold:g}, warn >= {c.warn_threshold:g})"
            for c in self.checks if c.status in ("warn", "fail")
        ]

    def by_name(self, name: str) -> ValidityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0.0:
        return math.inf
    return numerator / denominator


def validity_report(params: PhysicalParams, n_a: float, n_b: float) -> ValidityReport:
    """
    绝热消除的有效性余量（仅报告，不抛异常）
    |Δ|/(g_min√(n·n̄_a))、|Δ|/(g_min√(n·n̄_b))、min(λ₁,λ₄)/max(λ₂,λ₃,λ₅,λ₆)
    """
    g_min = min(params.g, params.g_prime)
    d = abs(params.delta)
    checks = [
        ValidityCheck("detuning_mode_a", _ratio(d, g_min * math.sqrt(params.n_atoms * n_a)),
                      *DETUNING_THRESHOLDS, "|Delta| / (g_min sqrt(n n_a))"),
        ValidityCheck("detuning_mode_b", _ratio(d, g_min * math.sqrt(params.n_atoms * n_b)),
                      *DETUNING_THRESHOLDS, "|Delta| / (g_min sqrt(n n_b))"),
    ]
    lambdas = None
    if params.delta != 0.0:
        try:
            lambdas = _lambdas(params)
        except SingularityError:
            lambdas = None
    if lambdas is None:
        dressed_margin = math.nan
    else:
        lam = [abs(x) for x in lambdas]
        dressed_margin = _ratio(min(lam[0], lam[3]), max(lam[1], lam[2], lam[4], lam[5]))
    checks.append(ValidityCheck("dressed_states", dressed_margin, *DRESSED_THRESHOLDS,
                                "min(l1, l4) / max(l2, l3, l5, l6)"))
    return ValidityReport(tuple(checks))
