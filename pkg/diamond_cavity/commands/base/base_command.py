"""
命令抽象基类
提供所有子命令的通用基础能力，包括运行ID、阶段计时、结果容器、CSV 输出与运行清单
"""

import os
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterable, List, Optional, Sequence

from ...config_manager import ConfigManager, RunConfig, config_manager
from ...errors import DiamondCavityError, OutputError
from ...physics.diamond_model import PhysicalParams
from ...physics.dynamics import MappingOptions, Tolerances
from ...utils.common import (
    PREFIX as LOG_PREFIX,
    PROCESS_PREFIX,
    format_error,
    generate_run_id,
    get_logger,
    log_complete,
    log_error,
    log_prepare,
    log_warn,
)
from ...utils.csv_io import RunManifest, write_csv

log = get_logger(__name__)

MANIFEST_NAME = "manifest.json"


class BaseCommand:
    """
    所有子命令的抽象基类

    提供通用功能:
    - 运行ID与统一的 prepare / done / failed 日志
    - 阶段计时（写入清单 timings_ms）
    - 结果容器 {"success": True, "outputs": [...]} / {"success": False, "error": ..., "error_type": ...}
    - CSV 写出与 manifest.json 原子写入
    """

    # 子类应该覆盖这些常量
    NAME = ""
    TASK = ""
    LOG_PREFIX = LOG_PREFIX
    PROCESS_PREFIX = PROCESS_PREFIX

    def __init__(self, config: RunConfig, out_dir: str, jobs: Optional[int] = None,
                 manager: Optional[ConfigManager] = None):
        self.config = config
        self.out_dir = out_dir
        self.jobs = jobs
        self.manager = manager or config_manager
        self.run_id = generate_run_id(self.NAME, config.config_hash)
        self.manifest = RunManifest(
            experiment=config.experiment,
            run_id=self.run_id,
            config_hash=config.config_hash,
            software_version=_software_version(),
        )
        self.stdout: List[str] = []
        self._stage = "prepare"

    # ---子类实现---
    def run(self) -> None:
        """命令主体：通过 write_csv / warn / echo 产生输出"""
        raise NotImplementedError

    # ---执行入口---
    def execute(self) -> Dict[str, Any]:
        """
        运行命令并返回结果容器

        库异常（DiamondCavityError）转为失败容器；其余异常向上抛出，由 CLI 以退出码 1 处理
        """
        start = time.perf_counter()
        log_prepare(self.TASK, self.run_id, config=os.path.basename(self.config.path or "<memory>"),
                    out=self.out_dir)
        try:
            os.makedirs(self.out_dir, exist_ok=True)
            self.run()
            with self.stage("manifest"):
                data = self.manifest.finalize()
                manifest_path = os.path.join(self.out_dir, MANIFEST_NAME)
                if not self.manager.atomic_write_json(manifest_path, data):
                    raise OutputError(f"could not write {manifest_path}")
        except DiamondCavityError as e:
            message = format_error(e, self._stage)
            log_error(self.TASK, self.run_id, message)
            return {"success": False, "error": message, "error_type": e.code, "run_id": self.run_id}

        elapsed_ms = int((time.perf_counter() - start) * 1000)
        outputs = [item["path"] for item in self.manifest.outputs] + [manifest_path]
        log_complete(self.TASK, self.run_id, elapsed_ms, files=len(outputs),
                     warnings=len(self.manifest.warnings) or None)
        return {
            "success": True,
            "outputs": outputs,
            "warnings": list(self.manifest.warnings),
            "stdout": list(self.stdout),
            "run_id": self.run_id,
        }

    # ---阶段计时---
    @contextmanager
    def stage(self, name: str):
        """计时一个阶段；出错时 format_error 以该阶段命名"""
        self._stage = name
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = int((time.perf_counter() - start) * 1000)
            self.manifest.timings_ms[name] = self.manifest.timings_ms.get(name, 0) + elapsed
            log.debug(f"{self.PROCESS_PREFIX} {self.TASK} | stage:{name} | {elapsed}ms")

    # ---输出---
    def write_csv(self, filename: str, fieldnames: Sequence[str], rows: Iterable[Dict[str, Any]]) -> str:
        path = os.path.join(self.out_dir, filename)
        try:
            checksum = write_csv(path, fieldnames, rows)
        except OSError as e:
            raise OutputError(f"could not write {path}: {e}")
        self.manifest.add_output(path, checksum)
        return path

    def warn(self, message: str) -> None:
        """清单警告（有效性余量、NaN 扫描点等）"""
        log_warn(self.TASK, message)
        self.manifest.warnings.append(message)

    def echo(self, line: str) -> None:
        """供 CLI 打印到 stdout 的报告行"""
        self.stdout.append(line)

    def resolve(self, **values: Any) -> None:
        self.manifest.resolved_parameters.update(values)

    # ---配置块 → 领域对象---
    def tolerances(self) -> Tolerances:
        numerics = self.config.numerics
        return Tolerances(rtol=numerics["rtol"], atol=numerics["atol"])

    def mapping_options(self) -> MappingOptions:
        numerics = self.config.numerics
        return MappingOptions(
            tolerances=self.tolerances(),
            window_low=numerics["search_window_low"],
            window_high=numerics["search_window_high"],
            steps_per_tpi=numerics["search_steps_per_tpi"],
            phase_frame=self.config.mapping.get("phase_frame", "lab"),
            curve_span=numerics["curve_span_tpi"],
        )

    def physical_params(self, block: Optional[dict] = None) -> PhysicalParams:
        return self.manager.physical_params(self.config.physical if block is None else block)


def _software_version() -> str:
    from ... import __version__
    return __version__
