"""
数值模块
算符基础、菱形能级模型、时间演化、输入-输出品质因数与腔参数流水线
"""

from .operator_core import (
    DensityOperator,
    Factor,
    HilbertSpace,
    KetState,
    Operator,
    embed,
    embed_many,
    matrix_exponential,
    sylvester_solve,
)
from .diamond_model import (
    DressedBasis,
    EffectiveCoefficients,
    FrameChoice,
    PhysicalParams,
    ValidityReport,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    build_lindblads,
    build_nonhermitian,
    effective_coefficients,
    omega_prime_for_zero_delta1,
    validity_report,
)
from .dynamics import (
    EvolutionResult,
    MappingOptions,
    MappingReport,
    Tolerances,
    evolve_lindblad,
    evolve_nonhermitian,
    find_t_pi_numeric,
    state_mapping_report,
    t_pi_analytic,
    tpi_scan,
)
from .inout_fom import (
    FomResult,
    LangevinMatrix,
    apply_output_loss,
    compute_fom,
    fom_approx,
    fom_quadrature,
    fom_sylvester,
    langevin_matrix,
    temporal_profile,
)
from .cavity_params import (
    AtomPreset,
    CavityGeometry,
    CavitySystem,
    MirrorSpec,
    derive_system,
)

__all__ = [
    'DensityOperator', 'Factor', 'HilbertSpace', 'KetState', 'Operator', 'embed', 'embed_many',
    'matrix_exponential', 'sylvester_solve',
    'DressedBasis', 'EffectiveCoefficients', 'FrameChoice', 'PhysicalParams', 'ValidityReport',
    'build_effective_hamiltonian', 'build_full_hamiltonian', 'build_lindblads', 'build_nonhermitian',
    'effective_coefficients', 'omega_prime_for_zero_delta1', 'validity_report',
    'EvolutionResult', 'MappingOptions', 'MappingReport', 'Tolerances', 'evolve_lindblad', 'evolve_nonhermitian',
    'find_t_pi_numeric', 'state_mapping_report', 't_pi_analytic', 'tpi_scan',
    'FomResult', 'LangevinMatrix', 'apply_output_loss', 'compute_fom', 'fom_approx', 'fom_quadrature',
    'fom_sylvester', 'langevin_matrix', 'temporal_profile',
    'AtomPreset', 'CavityGeometry', 'CavitySystem', 'MirrorSpec', 'derive_system',
]
