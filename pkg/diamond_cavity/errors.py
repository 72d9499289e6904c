"""
异常定义模块
所有数值模块与命令统一从此处导入异常类型
"""


class DiamondCavityError(Exception):
    """所有库异常的基类，code 字段用于机器可读的错误输出"""

    code = "error"


class ConfigError(DiamondCavityError):
    code = "config"


class DimensionMismatchError(DiamondCavityError):
    code = "dimension_mismatch"


class NonConservingOperatorError(DiamondCavityError):
    code = "non_conserving_operator"


class ParameterError(DiamondCavityError):
    code = "parameter"


class SingularityError(DiamondCavityError):
    """闭式系数在极点处求值（如 ξ 的分母为零）"""

    code = "singularity"


class SingularSystemError(DiamondCavityError):
    code = "singular_system"


class MatrixOverflowError(DiamondCavityError):
    code = "matrix_overflow"


class UnstableMatrixError(DiamondCavityError):
    code = "unstable_matrix"


class IntegrationError(DiamondCavityError):
    code = "integration"


class WindowTooSmallError(DiamondCavityError):
    """搜索窗口边界处取得最大值"""

    code = "window_too_small"

    def __init__(self, message: str, edge: str = ""):
        super().__init__(message)
        self.edge = edge


class CutoffTooSmallError(DiamondCavityError):
    code = "cutoff_too_small"


class OutputError(DiamondCavityError):
    """输出文件缺失或写入失败"""

    code = "output"


__all__ = [
    "DiamondCavityError",
    "ConfigError",
    "DimensionMismatchError",
    "NonConservingOperatorError",
    "ParameterError",
    "SingularityError",
    "SingularSystemError",
    "MatrixOverflowError",
    "UnstableMatrixError",
    "IntegrationError",
    "WindowTooSmallError",
    "CutoffTooSmallError",
    "OutputError",
]
