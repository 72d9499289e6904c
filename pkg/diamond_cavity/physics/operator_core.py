"""
算符基础模块
截断复合希尔伯特空间、算符/态载体、张量积与嵌入、矩阵函数（指数、Sylvester 方程、厄米本征分解）

基矢顺序: 先模式 a、b，再原子 1..n；每个因子内 Fock/能级指数升序；
整体按因子指数字典序枚举（最后一个因子变化最快，与 kron 顺序一致）
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.sparse.linalg import norm as sparse_norm

from ..errors import (
    DimensionMismatchError,
    MatrixOverflowError,
    NonConservingOperatorError,
    ParameterError,
    SingularSystemError,
)
from ..utils.common import get_logger

log = get_logger(__name__)

# 复合维数超过此值时算符以稀疏形式存储，时间演化走矩阵作用（expm_multiply）路径
DENSE_LIMIT = 4000

# 原子能级 |0>..|3> 的激发权重；经典激光跃迁 |1>,|2> <-> |3> 不携带光子
ATOM_WEIGHTS = (0, 1, 1, 1)

Matrix = Union[np.ndarray, sp.spmatrix]


# ==================== 空间定义 ====================

@dataclass(frozen=True)
class Factor:
    """复合空间中的单个因子（玻色模式或四能级原子）"""

    label: str
    dim: int
    weights: Tuple[int, ...]
    kind: str = "mode"

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatchError(f"factor '{self.label}' must have dimension >= 1")
        if len(self.weights) != self.dim:
            raise DimensionMismatchError(
                f"factor '{self.label}' has {len(self.weights)} excitation weights for dimension {self.dim}"
            )

    @classmethod
    def mode(cls, label: str, cutoff: int) -> "Factor":
        if cutoff < 0:
            raise ParameterError(f"Fock cutoff must be >= 0, got {cutoff}")
        return cls(label, cutoff + 1, tuple(range(cutoff + 1)), "mode")

    @classmethod
    def atom(cls, label: str) -> "Factor":
        return cls(label, 4, ATOM_WEIGHTS, "atom")


@dataclass(frozen=True)
class HilbertSpace:
    """
    截断复合希尔伯特空间

    excitation_sector 可为单个整数 N，或一组 N 值（保留这些激发数子空间的直和）
    """

    factors: Tuple[Factor, ...]
    excitation_sector: Union[None, int, Tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise DimensionMismatchError("a Hilbert space needs at least one factor")
        labels = [f.label for f in self.factors]
        if len(set(labels)) != len(labels):
            raise DimensionMismatchError(f"duplicate factor labels: {labels}")
        sector = self.excitation_sector
        if sector is not None and not isinstance(sector, (int, np.integer)):
            sector = tuple(sorted({int(s) for s in sector}))
            if len(sector) == 1:
                sector = sector[0]
        if isinstance(sector, np.integer):
            sector = int(sector)
        object.__setattr__(self, "excitation_sector", sector)
        if self.dim == 0:
            raise DimensionMismatchError(f"excitation sector {sector} is empty for factors {labels}")

    # ---构造辅助---
    @classmethod
    def cavity_atoms(cls, n_atoms: int, cutoff: int, sector=None) -> "HilbertSpace":
        """两个腔模 (a, b) 加 n 个四能级原子"""
        if n_atoms < 1:
            raise ParameterError(f"n_atoms must be >= 1, got {n_atoms}")
        factors = [Factor.mode("a", cutoff), Factor.mode("b", cutoff)]
        factors += [Factor.atom(f"atom{k}") for k in range(1, n_atoms + 1)]
        return cls(tuple(factors), sector)

    @classmethod
    def two_modes(cls, cutoff: int, sector=None) -> "HilbertSpace":
        return cls((Factor.mode("a", cutoff), Factor.mode("b", cutoff)), sector)

    @classmethod
    def single_mode(cls, cutoff: int, label: str = "a") -> "HilbertSpace":
        return cls((Factor.mode(label, cutoff),))

    # ---基本属性---
    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def sectors(self) -> Optional[Tuple[int, ...]]:
        if self.excitation_sector is None:
            return None
        if isinstance(self.excitation_sector, int):
            return (self.excitation_sector,)
        return self.excitation_sector

    @property
    def is_restricted(self) -> bool:
        return self.excitation_sector is not None

    @cached_property
    def excitation_numbers(self) -> np.ndarray:
        """未截断基矢上的总激发数（长度 total_dim）"""
        total = np.zeros(1, dtype=np.int64)
        for f in self.factors:
            total = (total[:, None] + np.asarray(f.weights, dtype=np.int64)[None, :]).ravel()
        return total

    @cached_property
    def basis_indices(self) -> np.ndarray:
        """保留基矢在未截断基中的位置（升序）"""
        if self.sectors is None:
            return np.arange(self.total_dim)
        return np.flatnonzero(np.isin(self.excitation_numbers, self.sectors))

    @property
    def dim(self) -> int:
        return int(self.basis_indices.size)

    @property
    def prefers_sparse(self) -> bool:
        return self.dim > DENSE_LIMIT

    def unrestricted(self) -> "HilbertSpace":
        if not self.is_restricted:
            return self
        return HilbertSpace(self.factors, None)

    def factor_index(self, key: Union[int, str]) -> int:
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < len(self.factors):
                raise DimensionMismatchError(f"factor index {key} out of range for {len(self.factors)} factors")
            return int(key)
        for i, f in enumerate(self.factors):
            if f.label == key:
                return i
        raise DimensionMismatchError(f"no factor labelled '{key}'")

    @property
    def atom_indices(self) -> Tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.factors) if f.kind == "atom")

    # ---基矢访问---
    def basis_labels(self) -> list:
        """每个保留基矢对应的各因子指数"""
        digits = np.unravel_index(self.basis_indices, self.dims)
        return [tuple(int(d[k]) for d in digits) for k in range(self.dim)]

    def index_of(self, levels: Sequence[int]) -> int:
        if len(levels) != len(self.factors):
            raise DimensionMismatchError(f"expected {len(self.factors)} factor indices, got {len(levels)}")
        for f, lv in zip(self.factors, levels):
            if not 0 <= lv < f.dim:
                raise DimensionMismatchError(f"level {lv} out of range for factor '{f.label}'")
        flat = int(np.ravel_multi_index(tuple(levels), self.dims))
        pos = int(np.searchsorted(self.basis_indices, flat))
        if pos >= self.dim or self.basis_indices[pos] != flat:
            raise NonConservingOperatorError(
                f"basis state {tuple(levels)} lies outside excitation sector {self.excitation_sector}"
            )
        return pos

    def basis_ket(self, levels: Sequence[int]) -> "KetState":
        amps = np.zeros(self.dim, dtype=complex)
        amps[self.index_of(levels)] = 1.0
        return KetState(self, amps, normalized=True)

    def identity(self) -> "Operator":
        return Operator(self, _maybe_dense(sp.identity(self.dim, dtype=complex, format="csr"), self))

    def number_operator(self) -> "Operator":
        """总激发数算符 N = a†a + b†b + Σ 原子激发权重"""
        values = self.excitation_numbers[self.basis_indices].astype(complex)
        return Operator(self, _maybe_dense(sp.diags(values, format="csr"), self))

    def restrict(self, op: "Operator") -> "Operator":
        """把未截断空间上的算符投影到本空间，要求不泄漏出保留子空间"""
        if op.space.factors != self.factors:
            raise DimensionMismatchError("operator and target space have different factors")
        if op.space.is_restricted:
            if op.space == self:
                return op
            raise DimensionMismatchError("restrict expects an operator on the unrestricted space")
        data = sp.csc_matrix(op.data)
        if not self.is_restricted:
            return Operator(self, _maybe_dense(data.tocsr(), self))
        keep = self.basis_indices
        columns = data[:, keep].tocsr()
        outside = np.ones(self.total_dim, dtype=bool)
        outside[keep] = False
        leak = columns[outside, :]
        if leak.nnz:
            scale = max(1.0, float(abs(columns).max()) if columns.nnz else 0.0)
            worst = float(abs(leak).max())
            if worst > 1e-12 * scale:
                raise NonConservingOperatorError(
                    f"operator leaks out of excitation sector {self.excitation_sector} "
                    f"(largest leaked element {worst:.3e})"
                )
        block = columns[keep, :].tocsr()
        return Operator(self, _maybe_dense(block, self))


# ==================== 算符与态 ====================

def _maybe_dense(data: Matrix, space: HilbertSpace) -> Matrix:
    if sp.issparse(data):
        return data.tocsr() if space.prefers_sparse else data.toarray()
    return data


@dataclass(frozen=True, eq=False)
class Operator:
    """复合空间上的算符，data 可以是稠密 ndarray 或 csr 稀疏矩阵（语义相同）"""

    space: HilbertSpace
    data: Matrix

    def __post_init__(self):
        shape = self.data.shape
        if shape != (self.space.dim, self.space.dim):
            raise DimensionMismatchError(f"operator shape {shape} does not match space dimension {self.space.dim}")
        if sp.issparse(self.data):
            object.__setattr__(self, "data", sp.csr_matrix(self.data, dtype=complex))
        else:
            object.__setattr__(self, "data", np.asarray(self.data, dtype=complex))

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.data)

    def toarray(self) -> np.ndarray:
        return self.data.toarray() if self.is_sparse else self.data

    def dag(self) -> "Operator":
        return Operator(self.space, self.data.conj().T)

    def norm(self) -> float:
        """Frobenius 范数"""
        if self.is_sparse:
            return float(sparse_norm(self.data))
        return float(np.linalg.norm(self.data))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return (self - self.dag()).norm() <= tol * max(self.norm(), 1e-300)

    def commutator(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def matrix_element(self, bra: Sequence[int], ket: Sequence[int]) -> complex:
        i = self.space.index_of(bra)
        j = self.space.index_of(ket)
        return complex(self.data[i, j])

    def apply(self, ket: "KetState") -> "KetState":
        self._check_space(ket.space)
        return KetState(self.space, np.asarray(self.data @ ket.amplitudes).ravel(), normalized=False)

    def expect(self, ket: "KetState") -> complex:
        return complex(np.vdot(ket.amplitudes, self.data @ ket.amplitudes))

    def _check_space(self, other: HilbertSpace):
        if other != self.space:
            raise DimensionMismatchError("operands live on different Hilbert spaces")

    def _coerce(self, other):
        if isinstance(other, Operator):
            self._check_space(other.space)
            return other.data
        raise TypeError(f"unsupported operand {type(other).__name__}")

    def _wrap(self, data) -> "Operator":
        if sp.issparse(data) and not self.space.prefers_sparse:
            data = data.toarray()
        elif isinstance(data, np.matrix):
            data = np.asarray(data)
        return Operator(self.space, data)

    def __add__(self, other):
        if isinstance(other, (int, float, complex)) and other == 0:
            return self
        return self._wrap(self.data + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.data - self._coerce(other))

    def __neg__(self):
        return Operator(self.space, -self.data)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            raise TypeError("use @ for operator products")
        return Operator(self.space, self.data * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.space, self.data / scalar)

    def __matmul__(self, other):
        if isinstance(other, KetState):
            return self.apply(other)
        return self._wrap(self.data @ self._coerce(other))


@dataclass(frozen=True, eq=False)
class KetState:
    """态矢；无跃迁演化会产生未归一化的态，normalized 标记只在置位时检查"""

    space: HilbertSpace
    amplitudes: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != self.space.dim:
            raise DimensionMismatchError(f"ket length {amps.size} does not match space dimension {self.space.dim}")
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > 1e-12:
            raise ParameterError(f"ket flagged normalized has norm {np.linalg.norm(amps):.15f}")

    @classmethod
    def from_amplitudes(cls, space: HilbertSpace, amplitudes, normalize: bool = False) -> "KetState":
        amps = np.asarray(amplitudes, dtype=complex)
        if normalize:
            nrm = np.linalg.norm(amps)
            if nrm == 0:
                raise ParameterError("cannot normalize the zero vector")
            amps = amps / nrm
        return cls(space, amps, normalized=normalize)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalize(self) -> "KetState":
        return KetState.from_amplitudes(self.space, self.amplitudes, normalize=True)

    def inner(self, other: "KetState") -> complex:
        """<self|other>"""
        if other.space != self.space:
            raise DimensionMismatchError("kets live on different Hilbert spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __add__(self, other: "KetState") -> "KetState":
        if other.space != self.space:
            raise DimensionMismatchError("kets live on different Hilbert spaces")
        return KetState(self.space, self.amplitudes + other.amplitudes)

    def __mul__(self, scalar) -> "KetState":
        return KetState(self.space, self.amplitudes * scalar)

    __rmul__ = __mul__

    def to_density(self) -> "DensityOperator":
        return DensityOperator(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.space.dim, self.space.dim):
            raise DimensionMismatchError(f"density matrix shape {mat.shape} does not match space dimension {self.space.dim}")
        object.__setattr__(self, "matrix", mat)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def hermiticity_error(self) -> float:
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def expect(self, op: Operator) -> complex:
        if op.space != self.space:
            raise DimensionMismatchError("operator and state live on different Hilbert spaces")
        return complex(np.trace(op.data @ self.matrix))

    def check(self, trace: float = 1.0, trace_tol: float = 1e-8, tol: float = 1e-10) -> None:
        """校验厄米性、迹与半正定性，不满足时抛出 ParameterError"""
        if self.hermiticity_error() > tol * max(1.0, float(np.linalg.norm(self.matrix))):
            raise ParameterError("density operator is not Hermitian")
        if abs(self.trace() - trace) > trace_tol:
            raise ParameterError(f"density operator trace {self.trace().real:.12f} differs from {trace}")
        if self.min_eigenvalue() < -tol:
            raise ParameterError(f"density operator has negative eigenvalue {self.min_eigenvalue():.3e}")


# ==================== 单因子常用矩阵 ====================

def destroy(cutoff: int) -> np.ndarray:
    """截断到 cutoff 个光子的湮灭算符，维数 cutoff+1"""
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1).astype(complex)


def flip(i: int, j: int, dim: int = 4) -> np.ndarray:
    """原子跃迁算符 σ_ij = |i><j|"""
    out = np.zeros((dim, dim), dtype=complex)
    out[i, j] = 1.0
    return out


# ==================== 张量积与嵌入 ====================

def kron(a: Matrix, b: Matrix) -> Matrix:
    """标准 Kronecker 积，任一输入为稀疏时返回 csr"""
    if isinstance(a, Operator) or isinstance(b, Operator):
        raise TypeError("kron works on matrix blocks; use embed for composite-space operators")
    if sp.issparse(a) or sp.issparse(b):
        return sp.kron(a, b, format="csr")
    return np.kron(np.asarray(a), np.asarray(b))


def embed(op: Matrix, factor: Union[int, str], space: HilbertSpace) -> Operator:
    """
    把单因子上的小矩阵提升到复合空间（其余因子为单位算符）

    受限空间中只接受不把保留子空间映射出去的算符，否则抛出 NonConservingOperatorError
    """
    return embed_many({factor: op}, space)


def embed_many(ops: dict, space: HilbertSpace) -> Operator:
    """同时在若干因子上放置小矩阵（因子间取张量积）"""
    full = space.unrestricted()
    blocks = [sp.identity(f.dim, dtype=complex, format="csr") for f in full.factors]
    for key, small in ops.items():
        idx = full.factor_index(key)
        small = sp.csr_matrix(small, dtype=complex)
        if small.shape != (full.factors[idx].dim,) * 2:
            raise DimensionMismatchError(
                f"matrix of shape {small.shape} cannot act on factor '{full.factors[idx].label}' "
                f"of dimension {full.factors[idx].dim}"
            )
        blocks[idx] = small
    data = reduce(lambda x, y: sp.kron(x, y, format="csr"), blocks)
    lifted = Operator(full, data if full.prefers_sparse else data.toarray())
    if not space.is_restricted:
        return lifted
    return space.restrict(lifted)


# ==================== 矩阵函数 ====================

def matrix_exponential(a: np.ndarray) -> np.ndarray:
    """
    e^A（scipy 的缩放-平方 Padé 算法）

    输入含非有限元素时抛出 ParameterError；结果溢出时抛出 MatrixOverflowError
    """
    a = np.asarray(a.toarray() if sp.issparse(a) else a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"matrix exponential needs a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError("matrix exponential input has non-finite entries")
    with np.errstate(over="ignore", invalid="ignore"):
        result = scipy.linalg.expm(a)
    if not np.all(np.isfinite(result)):
        raise MatrixOverflowError(f"matrix exponential overflowed (input norm {np.linalg.norm(a):.3e})")
    return result


def exponential_action(a: Matrix, v: np.ndarray, t: float = 1.0) -> np.ndarray:
    """稀疏矩阵作用路径: e^{tA} v，不显式构造 e^{tA}"""
    out = expm_multiply(a * t, v)
    if not np.all(np.isfinite(out)):
        raise MatrixOverflowError("exponential action produced non-finite values")
    return out


def exponential_action_grid(a: Matrix, v: np.ndarray, start: float, stop: float, num: int) -> np.ndarray:
    """e^{tA} v 在 [start, stop] 上 num 个等距点（含端点）的值，shape (num, dim)"""
    out = expm_multiply(a, v, start=start, stop=stop, num=num, endpoint=True)
    if not np.all(np.isfinite(out)):
        raise MatrixOverflowError("exponential action produced non-finite values")
    return out


def sylvester_matrix(m: np.ndarray) -> np.ndarray:
    """
    求解 (M⊗I)X + X(I⊗M†) = I⊗I，返回 d²×d² 矩阵 X = ∫₀^∞ e^{−Mτ}⊗e^{−M†τ} dτ

    M 与 −M† 的谱相交（含 M 非严格稳定）时抛出 SingularSystemError
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"Sylvester solve needs a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParameterError("Sylvester input has non-finite entries")
    d = m.shape[0]
    eig = np.linalg.eigvals(m)
    gaps = np.abs(eig[:, None] + eig.conj()[None, :])
    scale = max(float(np.max(np.abs(eig))), 1e-300)
    if gaps.min() <= 1e-12 * scale:
        raise SingularSystemError(
            "spectra of M and -M^dagger are not disjoint "
            f"(min |lambda_i + conj(lambda_j)| = {gaps.min():.3e}); M must be strictly stable"
        )
    eye = np.eye(d, dtype=complex)
    a = np.kron(m, eye)
    b = np.kron(eye, m.conj().T)
    q = np.eye(d * d, dtype=complex)
    x = scipy.linalg.solve_sylvester(a, b, q)
    residual = np.linalg.norm(a @ x + x @ b - q)
    if not np.isfinite(residual) or residual > 1e-10 * np.linalg.norm(q):
        raise SingularSystemError(f"Sylvester residual {residual:.3e} exceeds tolerance (ill-conditioned M)")
    return x


def sylvester_solve(m: np.ndarray) -> np.ndarray:
    """
    Sylvester 解的四指标形式 X[i, k, j, l] = ∫ [e^{−Mτ}]_{ik} [e^{−M†τ}]_{jl} dτ（0 起始指标）

    品质因数所需元素为 X[0, 1, 1, 0]
    """
    m = np.asarray(m, dtype=complex)
    d = m.shape[0]
    x = sylvester_matrix(m)
    return x.reshape(d, d, d, d).transpose(0, 2, 1, 3)


def hermitian_eig(a: Matrix) -> Tuple[np.ndarray, np.ndarray]:
    """厄米矩阵本征分解，本征值升序，本征矢为列"""
    if isinstance(a, Operator):
        a = a.toarray()
    a = np.asarray(a.toarray() if sp.issparse(a) else a, dtype=complex)
    norm = np.linalg.norm(a)
    if np.linalg.norm(a - a.conj().T) > 1e-10 * max(norm, 1e-300):
        raise ParameterError("hermitian_eig received a non-Hermitian matrix")
    values, vectors = scipy.linalg.eigh(a)
    return values, vectors


def spectral_abscissa(m: np.ndarray) -> float:
    """min Re λ(M)；在 e^{−Mτ} 约定下为正即稳定"""
    return float(np.min(np.linalg.eigvals(np.asarray(m, dtype=complex)).real))
