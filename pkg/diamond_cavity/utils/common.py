"""
工具函数模块
整合日志前缀、统一日志函数、运行ID、进度条与错误格式化等通用工具
"""

import logging
import os
import sys
import threading
import time
from typing import Any, Optional

# ==================== 统一日志前缀常量 ====================
# 所有模块从此处导入，确保日志格式一致

PREFIX = "◆"
ERROR_PREFIX = "◆-❌"
WARN_PREFIX = "◆-⚠️"
PROCESS_PREFIX = "◆"


# ==================== 任务类型常量 ====================
TASK_MAP_STATE = "map-state"
TASK_TPI_SCAN = "tpi-scan"
TASK_FOM = "fom"
TASK_VALIDATE = "validate"
TASK_COEFFS = "coeffs"


# ==================== 日志配置 ====================

LOGGER_NAME = "diamond_cavity"
LOG_ENV_VAR = "DIAMOND_CAVITY_LOG"

_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "warning": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

logger = logging.getLogger(LOGGER_NAME)


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """返回包日志器或其子日志器（diamond_cavity.<name>）"""
    if not name:
        return logger
    return logger.getChild(name.rsplit(".", 1)[-1])


def configure_logging(level: Optional[str] = None) -> int:
    """
    根据环境变量 DIAMOND_CAVITY_LOG 配置包日志器（可重复调用）

    参数:
        level: 显式级别，优先于环境变量

    返回:
        生效的 logging 级别
    """
    raw = (level or os.environ.get(LOG_ENV_VAR) or "info").strip().lower()
    resolved = _LEVELS.get(raw)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
        logger.propagate = False
    logger.setLevel(resolved if resolved is not None else logging.INFO)
    if resolved is None:
        logger.warning(f"{WARN_PREFIX} unknown {LOG_ENV_VAR} value '{raw}', using info")
    return logger.level


# ==================== 统一日志消息函数 ====================

def _join_fields(head: str, fields: dict) -> str:
    parts = [head]
    for key, value in fields.items():
        if value is None:
            continue
        parts.append(f"{key}:{value}")
    return " | ".join(parts)


def log_prepare(task_type: str, run_id: str, **fields: Any) -> None:
    """
    输出统一格式的准备日志

    格式: ◆ 🟡 {任务} prepare | ID:{id} | key:value ...
    """
    _clear_progress_line()
    logger.info(_join_fields(f"{PREFIX} 🟡 {task_type} prepare", {"ID": run_id, **fields}))


def log_complete(task_type: str, run_id: str, elapsed_ms: int, **fields: Any) -> None:
    """
    输出统一格式的完成日志

    格式: ◆ ✅ {任务} done | ID:{id} | key:value ... | elapsed:{time}
    """
    _clear_progress_line()
    fields = {"ID": run_id, **fields, "elapsed": format_elapsed_time(elapsed_ms)}
    logger.info(_join_fields(f"{PREFIX} ✅ {task_type} done", fields))


def log_error(task_type: str, run_id: str, error_msg: str) -> None:
    """输出统一格式的错误日志"""
    _clear_progress_line()
    logger.error(f"{PREFIX} ❌ {task_type} failed | ID:{run_id} | error:{error_msg}")


def log_warn(task_type: str, message: str, **fields: Any) -> None:
    _clear_progress_line()
    logger.warning(_join_fields(f"{WARN_PREFIX} {task_type} | {message}", fields))


def generate_run_id(command: str, config_hash: str) -> str:
    """
    生成统一格式的运行ID
    格式: 命令_配置哈希前8位_四位时间戳
    示例: fom_3fa2b9c1_3456
    """
    timestamp = str(int(time.time()))[-4:]
    return "_".join([command.replace("-", ""), config_hash[:8], timestamp])


def format_elapsed_time(elapsed_ms: int) -> str:
    """
    格式化耗时显示

    参数:
        elapsed_ms: 毫秒数

    返回:
        格式化后的时间字符串（如 "6.5s"）
    """
    return f"{elapsed_ms/1000:.1f}s"


# ---错误处理函数---

def format_error(e: BaseException, stage: str) -> str:
    """
    将异常格式化为单行可读消息

    参数:
        e: 异常对象
        stage: 出错的阶段名称（如 derive、evolve、write）
    """
    message = str(e).strip() or e.__class__.__name__
    return f"{stage} failed ({e.__class__.__name__}): {message}"


# ====================进度日志系统====================
# 单行覆盖刷新的进度条，仅在 stderr 为终端时输出

_ANSI_CLEAR_EOL = "\033[K"

_global_last_output_len = 0
_progress_lock = threading.Lock()
_progress_active = False


def _clear_progress_line() -> None:
    """若有进度条在刷新，先回到行首清行，避免日志与进度条粘连"""
    global _global_last_output_len
    with _progress_lock:
        if _progress_active and _global_last_output_len:
            sys.stderr.write(f"\r{_ANSI_CLEAR_EOL}")
            sys.stderr.flush()
            _global_last_output_len = 0


class ProgressBar:
    """
    扫描进度条

    管理一次扫描的生命周期：运行 → 完成/失败
    所有输出使用单行覆盖（\\r），非终端环境下静默
    """

    def __init__(self, run_id: str, task_type: str, total: int, enabled: Optional[bool] = None):
        """
        创建进度条

        参数:
            run_id: 运行ID
            task_type: 任务类型（用于统一日志）
            total: 总点数
            enabled: 是否显示（默认仅在 stderr 为 TTY 时显示）
        """
        global _progress_active
        self._run_id = run_id
        self._task_type = task_type
        self._total = max(int(total), 1)
        self._done = 0
        self._start_time = time.perf_counter()
        self._closed = False
        if enabled is None:
            enabled = bool(getattr(sys.stderr, "isatty", lambda: False)())
        self._enabled = enabled
        with _progress_lock:
            _progress_active = self._enabled
        self._refresh()

    def _format_elapsed(self) -> str:
        elapsed_sec = time.perf_counter() - self._start_time
        if elapsed_sec < 60:
            return f"{elapsed_sec:.1f}s"
        minutes = int(elapsed_sec // 60)
        seconds = int(elapsed_sec % 60)
        return f"{minutes}m{seconds}s"

    def _render(self) -> str:
        percent = 100.0 * self._done / self._total
        return f"{PREFIX} 🔵 {self._task_type} | {self._done}/{self._total} ({percent:.0f}%) | {self._format_elapsed()}"

    def _refresh(self) -> None:
        """内部刷新方法：单行覆盖输出"""
        global _global_last_output_len
        if self._closed or not self._enabled:
            return
        output = self._render()
        with _progress_lock:
            padding = ""
            if _global_last_output_len > len(output):
                padding = " " * (_global_last_output_len - len(output))
            sys.stderr.write(f"\r{_ANSI_CLEAR_EOL}{output}{padding}")
            sys.stderr.flush()
            _global_last_output_len = len(output) + len(padding)

    def update(self, done: int) -> None:
        if self._closed:
            return
        self._done = min(int(done), self._total)
        self._refresh()

    def advance(self, step: int = 1) -> None:
        self.update(self._done + step)

    def _close(self) -> None:
        global _progress_active, _global_last_output_len
        self._closed = True
        with _progress_lock:
            if self._enabled and _global_last_output_len:
                sys.stderr.write(f"\r{_ANSI_CLEAR_EOL}")
                sys.stderr.flush()
            _global_last_output_len = 0
            _progress_active = False

    def done(self, **fields: Any) -> None:
        """完成扫描，换行输出统一完成日志"""
        if self._closed:
            return
        elapsed_ms = int((time.perf_counter() - self._start_time) * 1000)
        self._close()
        log_complete(self._task_type, self._run_id, elapsed_ms, points=f"{self._done}/{self._total}", **fields)

    def error(self, message: str) -> None:
        if self._closed:
            return
        self._close()
        log_error(self._task_type, self._run_id, message)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if self._closed:
            return
        if exc is not None:
            self.error(str(exc))
        else:
            self.done()
