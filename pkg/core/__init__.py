"""
OpNorm 工具箱核心模块
"""

from .config_manager import get_config_manager, reload_config
from .unified_command_manager import get_unified_command_manager

__all__ = [
    'get_config_manager',
    'reload_config',
    'get_unified_command_manager'
]
