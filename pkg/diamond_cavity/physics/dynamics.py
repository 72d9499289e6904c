"""
时间演化模块
Lindblad 主方程与无跃迁（非厄米）演化、光子转移曲线、t_π 搜索、态映射报告与 t_π 偏差扫描

演化使用 scipy.integrate.solve_ivp 的嵌入式 Runge-Kutta（默认 DOP853），只在给定时间网格上取值；
t_π 搜索对 H̃ 做一次本征分解后精确求值，条件数过大时退回 expm_multiply
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from ..errors import (
    CutoffTooSmallError,
    DimensionMismatchError,
    IntegrationError,
    ParameterError,
    WindowTooSmallError,
)
from ..utils.common import get_logger
from .diamond_model import (
    EffectiveCoefficients,
    PhysicalParams,
    build_nonhermitian,
    effective_coefficients,
    validity_report,
)
from .operator_core import (
    DENSE_LIMIT,
    DensityOperator,
    HilbertSpace,
    KetState,
    Operator,
    destroy,
    embed,
    exponential_action,
)

log = get_logger(__name__)

State = Union[KetState, DensityOperator]


# ==================== 结果与选项 ====================

@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "DOP853"

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ParameterError("integrator tolerances must be positive")
        if self.method not in ("DOP853", "RK45"):
            raise ParameterError(f"unsupported integrator '{self.method}', expected DOP853 or RK45")


@dataclass
class EvolutionResult:
    """演化结果；observables 中的期望值对无跃迁演化是条件期望（除以 ‖ψ‖²）"""

    times: np.ndarray
    states: List[State]
    observables: Dict[str, np.ndarray] = field(default_factory=dict)
    kind: str = "lindblad"

    def __getitem__(self, name: str) -> np.ndarray:
        return self.observables[name]


@dataclass(frozen=True)
class PhotonTransferCurve:
    times: np.ndarray
    n_b_numeric: np.ndarray
    n_b_analytic: np.ndarray
    norm_sq: np.ndarray
    n_ph: float


@dataclass(frozen=True)
class TPiSearch:
    t_pi: float
    population: float
    window: Tuple[float, float]
    local_maxima: Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class MappingOptions:
    """态映射实验的数值选项；窗口以解析 t_π 为单位"""

    tolerances: Tolerances = Tolerances()
    window_low: float = 0.8
    window_high: float = 1.2
    steps_per_tpi: int = 200
    phase_frame: str = "lab"
    curve_points: int = 0
    curve_span: float = 2.0
    max_widenings: int = 4

    PHASE_FRAMES = ("lab", "none")

    def __post_init__(self):
        if not 0 < self.window_low < self.window_high:
            raise ParameterError(f"search window must satisfy 0 < low < high, got ({self.window_low}, {self.window_high})")
        if self.steps_per_tpi < 10:
            raise ParameterError("steps_per_tpi must be at least 10")
        if self.phase_frame not in self.PHASE_FRAMES:
            raise ParameterError(f"unknown phase frame '{self.phase_frame}', expected one of {self.PHASE_FRAMES}")
        if self.curve_points < 0 or self.curve_span <= 0:
            raise ParameterError("curve_points must be >= 0 and curve_span > 0")


@dataclass(frozen=True)
class MappingReport:
    t_pi: float
    t_pi_analytic: float
    fidelity: float
    success_probability: float
    unconditional_fidelity: float
    phase_frame: str
    local_maxima: Tuple[Tuple[float, float], ...]
    curve: Optional[PhotonTransferCurve] = None
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("fidelity", "success_probability", "unconditional_fidelity"):
            value = getattr(self, name)
            if not -1e-9 <= value <= 1.0 + 1e-9:
                raise ParameterError(f"{name} = {value} outside [0, 1]")


@dataclass(frozen=True)
class TpiScanRow:
    label: str
    n_ph: int
    t_pi: float
    deviation_percent: float
    population: float
    jump: bool = False


# ==================== 基本演化 ====================

def _check_grid(t_grid) -> np.ndarray:
    times = np.asarray(t_grid, dtype=float).ravel()
    if times.size < 1 or not np.all(np.isfinite(times)):
        raise ParameterError("time grid must contain finite values")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ParameterError("time grid must be strictly increasing")
    return times


def _run_ivp(rhs: Callable, y0: np.ndarray, times: np.ndarray, tol: Tolerances) -> np.ndarray:
    """返回 shape (len(times), len(y0))"""
    if times.size == 1 or times[-1] == times[0]:
        return np.tile(y0, (times.size, 1))
    sol = solve_ivp(rhs, (times[0], times[-1]), y0, method=tol.method, t_eval=times,
                    rtol=tol.rtol, atol=tol.atol)
    if not sol.success:
        raise IntegrationError(f"integration stopped at t={sol.t[-1] if sol.t.size else times[0]:.6e}: {sol.message}")
    ys = sol.y.T
    if not np.all(np.isfinite(ys)):
        bad = int(np.argmax(~np.all(np.isfinite(ys), axis=1)))
        raise IntegrationError(f"state became non-finite at t={times[bad]:.6e}")
    return ys


def no_jump_hamiltonian(hamiltonian: Operator, lindblads: Sequence[Operator]) -> Operator:
    """H̃ = H − (i/2)ΣL†L"""
    out = hamiltonian
    for op in lindblads:
        if op.space != hamiltonian.space:
            raise DimensionMismatchError("Lindblad operator lives on a different space than H")
        out = out - (op.dag() @ op) * 0.5j
    return out


def evolve_lindblad(hamiltonian: Operator, lindblads: Sequence[Operator], rho0: DensityOperator, t_grid,
                    tolerances: Optional[Tolerances] = None, observables: Optional[Dict[str, Operator]] = None,
                    store_states: bool = True) -> EvolutionResult:
    """
    dρ/dt = −i[H,ρ] + Σ(LρL† − ½{L†L,ρ})

    写成 −i(H̃ρ − ρH̃†) + ΣLρL† 的形式以减少矩阵乘法；observables 给出 Tr(Oρ) 的实部
    """
    tol = tolerances or Tolerances()
    space = hamiltonian.space
    for op in list(lindblads) + list((observables or {}).values()):
        if op.space != space:
            raise DimensionMismatchError("all operators must share one Hilbert space")
    if rho0.space != space:
        raise DimensionMismatchError("initial state lives on a different space than H")
    if space.dim > DENSE_LIMIT:
        raise DimensionMismatchError(f"density-matrix evolution is limited to dim <= {DENSE_LIMIT}, got {space.dim}")
    rho0.check()
    times = _check_grid(t_grid)
    d = space.dim
    h_eff = no_jump_hamiltonian(hamiltonian, lindblads).toarray()
    h_eff_dag = h_eff.conj().T
    jumps = [(op.toarray(), op.toarray().conj().T) for op in lindblads]

    def rhs(_t, y):
        rho = y.reshape(d, d)
        out = -1j * (h_eff @ rho - rho @ h_eff_dag)
        for lop, ldag in jumps:
            out += lop @ rho @ ldag
        return out.ravel()

    ys = _run_ivp(rhs, rho0.matrix.ravel(), times, tol)
    rhos = [ys[k].reshape(d, d) for k in range(times.size)]
    traces = np.array([np.trace(r).real for r in rhos])
    purity = np.array([np.real(np.vdot(r.conj().T, r)) for r in rhos])
    result_obs = {"trace": traces, "purity": purity}
    for name, op in (observables or {}).items():
        mat = op.toarray()
        result_obs[name] = np.array([np.real(np.trace(mat @ r)) for r in rhos])
    drift = float(np.max(np.abs(traces - traces[0])))
    if drift > 1e-8:
        log.warning(f"Lindblad trace drift {drift:.3e} exceeds 1e-8")
    states = [DensityOperator(space, r) for r in rhos] if store_states else []
    return EvolutionResult(times, states, result_obs, kind="lindblad")


def evolve_nonhermitian(h_tilde: Operator, psi0: KetState, t_grid, tolerances: Optional[Tolerances] = None,
                        observables: Optional[Dict[str, Operator]] = None,
                        store_states: bool = True) -> EvolutionResult:
    """
    dψ/dt = −iH̃ψ；norm_sq 为无跃迁概率，其余观测量为条件期望 ⟨ψ|O|ψ⟩/‖ψ‖²
    """
    tol = tolerances or Tolerances()
    space = h_tilde.space
    if psi0.space != space:
        raise DimensionMismatchError("initial ket lives on a different space than H~")
    if abs(psi0.norm() - 1.0) > 1e-10:
        raise ParameterError(f"initial ket must be normalized, norm = {psi0.norm():.12f}")
    for op in (observables or {}).values():
        if op.space != space:
            raise DimensionMismatchError("observable lives on a different space than H~")
    times = _check_grid(t_grid)
    data = h_tilde.data

    def rhs(_t, y):
        return -1j * (data @ y)

    ys = _run_ivp(rhs, psi0.amplitudes, times, tol)
    norm_sq = np.einsum("ij,ij->i", ys.conj(), ys).real
    growth = float(np.max(np.diff(norm_sq))) if norm_sq.size > 1 else 0.0
    if growth > 1e-10:
        log.warning(f"no-jump norm grew by {growth:.3e} between grid points")
    result_obs = {"norm_sq": norm_sq}
    safe = np.where(norm_sq > 0, norm_sq, np.nan)
    for name, op in (observables or {}).items():
        values = np.einsum("ij,ij->i", ys.conj(), np.asarray((op.data @ ys.T).T)).real
        result_obs[name] = values / safe
    states = [KetState(space, y) for y in ys] if store_states else []
    return EvolutionResult(times, states, result_obs, kind="nonhermitian")


# ==================== 解析公式 ====================

def mean_photon_b_analytic(n_ph: float, delta1: float, delta2: float, t):
    """n_ph(1 − δ₁²/δ_r²) sin²(δ_r t / 2)"""
    delta_r = math.sqrt(4.0 * delta2 * delta2 + delta1 * delta1)
    if delta_r == 0.0:
        raise ParameterError("mean photon formula needs (delta1, delta2) != (0, 0)")
    amplitude = n_ph * (1.0 - delta1 * delta1 / (delta_r * delta_r))
    return amplitude * np.sin(0.5 * delta_r * np.asarray(t, dtype=float)) ** 2


def t_pi_analytic(coeffs: EffectiveCoefficients) -> float:
    if coeffs.delta_r <= 0.0:
        raise ParameterError("t_pi undefined: delta_r = 0 (modes are not coupled)")
    return math.pi / coeffs.delta_r


def mapping_phase(n_ph: float, delta2: float, delta_x: float) -> float:
    """φ_π(n_ph) = −n_ph π(δ₂ + δ_x)/(2δ₂)"""
    if delta2 == 0.0:
        raise ParameterError("mapping phase needs delta2 != 0")
    return -n_ph * math.pi * (delta2 + delta_x) / (2.0 * delta2)


# ==================== 精确传播子 ====================

class NoJumpPropagator:
    """
    ψ(t) = e^{−iH̃t}ψ₀

    维数不超过 DENSE_LIMIT 时用本征分解 H̃ = VΛV⁻¹（cond(V) 过大则放弃），
    否则每个时间点调用 expm_multiply
    """

    COND_LIMIT = 1e10

    def __init__(self, h_tilde: Operator, psi0: KetState):
        if psi0.space != h_tilde.space:
            raise DimensionMismatchError("initial ket lives on a different space than H~")
        self.space = h_tilde.space
        self._h = h_tilde
        self._psi0 = psi0.amplitudes
        self._eig = None
        if self.space.dim <= DENSE_LIMIT:
            values, vectors = scipy.linalg.eig(h_tilde.toarray())
            if np.linalg.cond(vectors) < self.COND_LIMIT:
                self._eig = (values, vectors, np.linalg.solve(vectors, self._psi0))
            else:
                log.debug("eigenbasis of H~ is ill-conditioned, using expm_multiply")

    def __call__(self, t: float) -> np.ndarray:
        if self._eig is not None:
            values, vectors, coeffs = self._eig
            return vectors @ (np.exp(-1j * values * t) * coeffs)
        return exponential_action(self._h.data * -1j, self._psi0, t)

    def ket(self, t: float) -> KetState:
        return KetState(self.space, self(t))


def _conditional_population(propagator: NoJumpPropagator, target: np.ndarray, t: float) -> float:
    psi = propagator(t)
    norm_sq = float(np.vdot(psi, psi).real)
    if norm_sq <= 0.0:
        return 0.0
    return float(abs(np.vdot(target, psi)) ** 2 / norm_sq)


def find_t_pi_numeric(h_tilde: Operator, psi0: KetState, target: KetState, window: Tuple[float, float],
                      resolution: int = 200) -> TPiSearch:
    """
    在窗口内求条件布居 |⟨target|ψ(t)⟩|²/‖ψ(t)‖² 的全局最大值

    粗扫描（resolution 个等距区间）找出所有局部极大，逐个在相邻两格内用有界 Brent 搜索细化，
    取细化后最大者；最大值落在窗口边界时抛出 WindowTooSmallError
    """
    lo, hi = float(window[0]), float(window[1])
    if not 0 <= lo < hi:
        raise ParameterError(f"invalid search window ({lo}, {hi})")
    if abs(target.norm() - 1.0) > 1e-10:
        raise ParameterError("target ket must be normalized")
    if target.space != h_tilde.space:
        raise DimensionMismatchError("target ket lives on a different space than H~")
    propagator = NoJumpPropagator(h_tilde, psi0)
    tgt = target.amplitudes
    grid = np.linspace(lo, hi, int(resolution) + 1)
    pops = np.array([_conditional_population(propagator, tgt, t) for t in grid])
    best = int(np.argmax(pops))
    if best == 0:
        raise WindowTooSmallError(f"population maximum at the lower window edge t={lo:.6e}", edge="low")
    if best == grid.size - 1:
        raise WindowTooSmallError(f"population maximum at the upper window edge t={hi:.6e}", edge="high")
    peaks = [i for i in range(1, grid.size - 1) if pops[i] >= pops[i - 1] and pops[i] >= pops[i + 1]]
    step = grid[1] - grid[0]
    refined = []
    for i in peaks:
        res = minimize_scalar(lambda t: -_conditional_population(propagator, tgt, t),
                              bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                              options={"xatol": step * 1e-6})
        t_best, p_best = (float(res.x), float(-res.fun)) if -res.fun >= pops[i] else (float(grid[i]), float(pops[i]))
        refined.append((t_best, p_best))
    t_pi, population = max(refined, key=lambda item: item[1])
    log.debug(f"t_pi search: {len(refined)} local maxima in [{lo:.4e}, {hi:.4e}], best t={t_pi:.6e} p={population:.6f}")
    return TPiSearch(t_pi, population, (lo, hi), tuple(refined))


def _search_widening(h_tilde: Operator, psi0: KetState, target: KetState, t_est: float,
                     options: MappingOptions) -> TPiSearch:
    """边界处取得最大值时向该侧扩大窗口后重试"""
    low, high = options.window_low, options.window_high
    for attempt in range(options.max_widenings + 1):
        steps = max(int(math.ceil((high - low) * options.steps_per_tpi)), 10)
        try:
            return find_t_pi_numeric(h_tilde, psi0, target, (low * t_est, high * t_est), steps)
        except WindowTooSmallError as e:
            if attempt == options.max_widenings:
                raise
            span = high - low
            if e.edge == "low":
                low = max(low - 0.5 * span, 0.05)
            else:
                high = high + 0.5 * span
            log.debug(f"widening t_pi window to [{low:.3f}, {high:.3f}] x t_pi")
    raise AssertionError("unreachable")


# ==================== 态映射实验 ====================

def _fock_ket(space: HilbertSpace, n_a: int, n_b: int, n_atoms: int) -> KetState:
    return space.basis_ket((n_a, n_b) + (0,) * n_atoms)


def _input_amplitudes(state: Union[int, Sequence[complex]]) -> np.ndarray:
    """整数 n 视为 Fock 态 |n>，否则按振幅序列 c_k 处理（需已归一）"""
    if isinstance(state, (int, np.integer)):
        if state < 1:
            raise ParameterError(f"photon number must be >= 1, got {state}")
        amps = np.zeros(int(state) + 1, dtype=complex)
        amps[int(state)] = 1.0
        return amps
    amps = np.asarray(state, dtype=complex).ravel()
    if amps.size == 0:
        raise ParameterError("input amplitudes are empty")
    if abs(np.vdot(amps, amps).real - 1.0) > 1e-10:
        raise ParameterError(f"input amplitudes must be normalized, sum |c_k|^2 = {np.vdot(amps, amps).real:.12f}")
    if not np.any(amps[1:]):
        raise ParameterError("input state carries no photons, nothing to map")
    return amps


def _input_ket(space: HilbertSpace, amps: np.ndarray, n_atoms: int) -> KetState:
    psi0 = np.zeros(space.dim, dtype=complex)
    for k in np.flatnonzero(amps):
        psi0[space.index_of((int(k), 0) + (0,) * n_atoms)] = amps[k]
    return KetState(space, psi0, normalized=True)


def photon_transfer_curve(params: PhysicalParams, state: Union[int, Sequence[complex]], t_grid,
                          tolerances: Optional[Tolerances] = None) -> PhotonTransferCurve:
    """
    初态 Σc_k|k>_A|0>_B|0…0>（整数 n 即 |n>_A），在全模型 H̃ 下演化；
    给出条件 ⟨b†b⟩、解析曲线（以平均光子数 Σ|c_k|²k 代入）与无跃迁概率

    模式不耦合（δ_r = 0）时解析曲线恒为零
    """
    amps = _input_amplitudes(state)
    occupied = tuple(int(k) for k in np.flatnonzero(amps))
    max_k = max(occupied)
    if params.cutoff < max_k:
        raise CutoffTooSmallError(f"cutoff {params.cutoff} cannot hold the {max_k}-photon input")
    coeffs = effective_coefficients(params)
    space = HilbertSpace.cavity_atoms(params.n_atoms, max_k, sector=occupied)
    h_tilde = build_nonhermitian(params, space)
    b = destroy(max_k)
    number_b = embed(b.conj().T @ b, "b", space)
    psi0 = _input_ket(space, amps, params.n_atoms)
    mean_photons = float(np.sum(np.abs(amps) ** 2 * np.arange(amps.size)))
    result = evolve_nonhermitian(h_tilde, psi0, t_grid, tolerances, {"n_b": number_b}, store_states=False)
    if coeffs.delta_r > 0:
        analytic = mean_photon_b_analytic(mean_photons, coeffs.delta1, coeffs.delta2, result.times)
    else:
        analytic = np.zeros_like(result.times)
    return PhotonTransferCurve(result.times, result["n_b"], analytic, result["norm_sq"], mean_photons)


def _mapping_target(space: HilbertSpace, amplitudes: np.ndarray, coeffs: EffectiveCoefficients, n_atoms: int,
                    frame: str) -> KetState:
    out = np.zeros(space.dim, dtype=complex)
    for k, c in enumerate(amplitudes):
        if c == 0:
            continue
        phase = mapping_phase(k, coeffs.delta2, coeffs.delta0) if frame == "lab" else 0.0
        out[space.index_of((0, k) + (0,) * n_atoms)] = c * np.exp(1j * phase)
    return KetState(space, out, normalized=True)


def state_mapping_report(params: PhysicalParams, input_amplitudes: Sequence[complex],
                         options: Optional[MappingOptions] = None) -> MappingReport:
    """
    把 Σc_k|k>_A 映射到 B 模

    𝒫 = ‖ψ(t_π)‖²，ℱ = |⟨target|ψ(t_π)⟩|²/𝒫；lab 参考系下 target 带有相位 φ_π(k)（δ_x = δ₀）
    """
    options = options or MappingOptions()
    amps = _input_amplitudes(input_amplitudes)
    occupied = tuple(int(k) for k in np.flatnonzero(amps))
    max_k = max(occupied)
    if params.cutoff < max_k:
        raise CutoffTooSmallError(f"cutoff {params.cutoff} < largest input photon number {max_k}")
    coeffs = effective_coefficients(params)
    t_est = t_pi_analytic(coeffs)
    mean_photons = float(np.sum(np.abs(amps) ** 2 * np.arange(amps.size)))
    warnings = tuple(validity_report(params, mean_photons, mean_photons).warnings())
    for message in warnings:
        log.warning(f"validity: {message}")

    space = HilbertSpace.cavity_atoms(params.n_atoms, max_k, sector=occupied)
    h_tilde = build_nonhermitian(params, space)
    psi0 = _input_ket(space, amps, params.n_atoms)
    target = _mapping_target(space, amps, coeffs, params.n_atoms, options.phase_frame)

    search = _search_widening(h_tilde, psi0, target, t_est, options)
    psi = NoJumpPropagator(h_tilde, psi0).ket(search.t_pi)
    success = psi.norm_squared()
    overlap = abs(target.inner(psi)) ** 2
    fidelity = overlap / success if success > 0 else 0.0

    curve = None
    if options.curve_points > 1:
        t_grid = np.linspace(0.0, options.curve_span * search.t_pi, options.curve_points)
        curve = photon_transfer_curve(params.replace(cutoff=max_k), amps, t_grid, options.tolerances)
    return MappingReport(
        t_pi=search.t_pi,
        t_pi_analytic=t_est,
        fidelity=min(fidelity, 1.0),
        success_probability=min(success, 1.0),
        unconditional_fidelity=min(overlap, 1.0),
        phase_frame=options.phase_frame,
        local_maxima=search.local_maxima,
        curve=curve,
        warnings=warnings,
    )


# ==================== t_π 偏差扫描 ====================

def tpi_point(params: PhysicalParams, n_ph: int, options: MappingOptions) -> Tuple[float, float]:
    """Fock 输入 |n_ph>_A 的数值 t_π 与对应条件布居（扫描的单个点，可在进程池中执行）"""
    coeffs = effective_coefficients(params)
    t_est = t_pi_analytic(coeffs)
    space = HilbertSpace.cavity_atoms(params.n_atoms, n_ph, sector=n_ph)
    h_tilde = build_nonhermitian(params.replace(cutoff=n_ph), space)
    psi0 = _fock_ket(space, n_ph, 0, params.n_atoms)
    target = _fock_ket(space, 0, n_ph, params.n_atoms)
    search = _search_widening(h_tilde, psi0, target, t_est, options)
    return search.t_pi, search.population


def _star_tpi_point(args):
    return tpi_point(*args)


def tpi_scan(parameter_sets: Sequence[Tuple[str, PhysicalParams]], n_ph_max: int,
             options: Optional[MappingOptions] = None, mapper: Optional[Callable] = None,
             jump_threshold_percent: float = 1.0) -> List[TpiScanRow]:
    """
    对每组参数计算 t_π(n_ph)（n_ph = 1..n_ph_max）相对 t_π(1) 的偏差（百分比）

    mapper 与内置 map 同签名，用于把各点分发到进程池；相邻 n_ph 偏差之差超过
    jump_threshold_percent 记为跳变
    """
    if n_ph_max < 1:
        raise ParameterError("n_ph_max must be >= 1")
    options = options or MappingOptions()
    mapper = mapper or map
    tasks = [(p, n, options) for _, p in parameter_sets for n in range(1, n_ph_max + 1)]
    results = list(mapper(_star_tpi_point, tasks))
    rows: List[TpiScanRow] = []
    for s, (label, _) in enumerate(parameter_sets):
        chunk = results[s * n_ph_max:(s + 1) * n_ph_max]
        reference = chunk[0][0]
        previous = 0.0
        for n, (t_pi, population) in enumerate(chunk, start=1):
            deviation = 0.0 if n == 1 else 100.0 * (t_pi - reference) / reference
            jump = n > 1 and abs(deviation - previous) > jump_threshold_percent
            if jump:
                log.warning(f"t_pi jump for set '{label}' between n_ph={n - 1} and n_ph={n} "
                            f"({previous:.3f}% -> {deviation:.3f}%)")
            rows.append(TpiScanRow(label, n, t_pi, deviation, population, jump))
            previous = deviation
    return rows

