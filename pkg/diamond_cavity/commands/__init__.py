# 命令包初始化文件
# 各子命令模块在此注册，CLI 通过 COMMAND_CLASS_MAPPINGS 按名称分发

from .base import BaseCommand
from .map_state_command import COMMAND_CLASS_MAPPINGS as MAP_STATE_COMMAND_CLASS_MAPPINGS
from .map_state_command import COMMAND_DISPLAY_NAME_MAPPINGS as MAP_STATE_COMMAND_DISPLAY_NAME_MAPPINGS
from .tpi_scan_command import COMMAND_CLASS_MAPPINGS as TPI_SCAN_COMMAND_CLASS_MAPPINGS
from .tpi_scan_command import COMMAND_DISPLAY_NAME_MAPPINGS as TPI_SCAN_COMMAND_DISPLAY_NAME_MAPPINGS
from .fom_command import COMMAND_CLASS_MAPPINGS as FOM_COMMAND_CLASS_MAPPINGS
from .fom_command import COMMAND_DISPLAY_NAME_MAPPINGS as FOM_COMMAND_DISPLAY_NAME_MAPPINGS
from .validate_command import COMMAND_CLASS_MAPPINGS as VALIDATE_COMMAND_CLASS_MAPPINGS
from .validate_command import COMMAND_DISPLAY_NAME_MAPPINGS as VALIDATE_COMMAND_DISPLAY_NAME_MAPPINGS
from .coeffs_command import COMMAND_CLASS_MAPPINGS as COEFFS_COMMAND_CLASS_MAPPINGS
from .coeffs_command import COMMAND_DISPLAY_NAME_MAPPINGS as COEFFS_COMMAND_DISPLAY_NAME_MAPPINGS

# 模块常量定义（顺序即 --help 中的子命令顺序）
COMMAND_CLASS_MAPPINGS = {
    **MAP_STATE_COMMAND_CLASS_MAPPINGS,
    **TPI_SCAN_COMMAND_CLASS_MAPPINGS,
    **FOM_COMMAND_CLASS_MAPPINGS,
    **VALIDATE_COMMAND_CLASS_MAPPINGS,
    **COEFFS_COMMAND_CLASS_MAPPINGS,
}

COMMAND_DISPLAY_NAME_MAPPINGS = {
    **MAP_STATE_COMMAND_DISPLAY_NAME_MAPPINGS,
    **TPI_SCAN_COMMAND_DISPLAY_NAME_MAPPINGS,
    **FOM_COMMAND_DISPLAY_NAME_MAPPINGS,
    **VALIDATE_COMMAND_DISPLAY_NAME_MAPPINGS,
    **COEFFS_COMMAND_DISPLAY_NAME_MAPPINGS,
}

__all__ = ['BaseCommand', 'COMMAND_CLASS_MAPPINGS', 'COMMAND_DISPLAY_NAME_MAPPINGS']
