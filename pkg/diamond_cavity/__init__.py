"""
diamond_cavity
菱形能级原子 + 双模腔：有效哈密顿量、光子态映射、输出品质因数与腔参数
"""

import os
import re


def get_version():
    """
    读取版本号：已安装时取包元数据，源码树中回退到 pyproject.toml

    Returns:
        str: 版本号字符串

    Raises:
        ValueError: 当无法找到版本号时抛出
    """
    try:
        from importlib.metadata import PackageNotFoundError, version
        try:
            return version("diamond-cavity")
        except PackageNotFoundError:
            pass
    except ImportError:
        pass
    toml_path = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "pyproject.toml")
    try:
        with open(toml_path, "r", encoding='utf-8') as f:
            content = f.read()
    except OSError:
        return "0+unknown"
    version_match = re.search(r'^version\s*=\s*"([^"]+)"', content, re.MULTILINE)
    if version_match:
        return version_match.group(1)
    raise ValueError("version not found in pyproject.toml")


__version__ = get_version()

__all__ = ['__version__', 'get_version']
