"""
扫描进程池
各点相互独立，结果按任务顺序收集（Pool.imap 保序），并行度不影响输出内容与顺序
"""

import multiprocessing
import os
from typing import Any, Callable, List, Optional, Sequence

from ..errors import ParameterError
from .common import ProgressBar


def resolve_jobs(jobs: Optional[int]) -> int:
    """None 或 0 → 逻辑 CPU 数"""
    if jobs is None or jobs == 0:
        return os.cpu_count() or 1
    if jobs < 0:
        raise ParameterError(f"--jobs must be >= 0, got {jobs}")
    return int(jobs)


def run_parallel(func: Callable[[Any], Any], tasks: Sequence[Any], jobs: Optional[int] = None,
                 progress: Optional[ProgressBar] = None) -> List[Any]:
    """
    对 tasks 逐个调用 func（func 必须是模块级函数，以便在子进程中反序列化）

    参数:
        jobs: 进程数；1 时在当前进程顺序执行
        progress: 可选进度条，每完成一个点前进一步
    """
    jobs = min(resolve_jobs(jobs), max(len(tasks), 1))
    results = []
    if jobs == 1:
        for task in tasks:
            results.append(func(task))
            if progress is not None:
                progress.advance()
        return results
    chunksize = max(len(tasks) // (jobs * 4), 1)
    with multiprocessing.Pool(processes=jobs) as pool:
        for value in pool.imap(func, tasks, chunksize=chunksize):
            results.append(value)
            if progress is not None:
                progress.advance()
    return results


class PoolMapper:
    """与内置 map 同签名的可调用对象，供 dynamics.tpi_scan 等接受 mapper 的函数使用"""

    def __init__(self, jobs: Optional[int] = None, progress: Optional[ProgressBar] = None):
        self.jobs = jobs
        self.progress = progress

    def __call__(self, func: Callable[[Any], Any], tasks) -> List[Any]:
        return run_parallel(func, list(tasks), self.jobs, self.progress)
