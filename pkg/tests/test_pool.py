import importlib
import logging
import os
import re
import sys

import pytest

from diamond_cavity.errors import ParameterError
from diamond_cavity.utils import common
from diamond_cavity.utils.common import (
    LOGGER_NAME,
    ProgressBar,
    configure_logging,
    format_elapsed_time,
    format_error,
    generate_run_id,
    get_logger,
)
from diamond_cavity.utils.pool import PoolMapper, resolve_jobs, run_parallel


def _square(x):
    return x * x


class TestPool:
    def test_resolve_jobs(self):
        assert resolve_jobs(None) == (os.cpu_count() or 1)
        assert resolve_jobs(0) == resolve_jobs(None)
        assert resolve_jobs(3) == 3
        with pytest.raises(ParameterError):
            resolve_jobs(-1)

    def test_sequential_order_and_progress(self):
        progress = ProgressBar("test_run", "fom", 4, enabled=False)
        assert run_parallel(_square, [3, 1, 2, 0], jobs=1, progress=progress) == [9, 1, 4, 0]
        assert progress._done == 4

    def test_parallel_keeps_order(self):
        tasks = list(range(20))
        assert run_parallel(_square, tasks, jobs=2) == [t * t for t in tasks]

    def test_mapper_signature(self):
        mapper = PoolMapper(jobs=1)
        assert mapper(_square, iter([1, 2, 3])) == [1, 4, 9]

    def test_empty_tasks(self):
        assert run_parallel(_square, [], jobs=4) == []


class TestCommon:
    def test_run_id_format(self):
        run_id = generate_run_id("tpi-scan", "3fa2b9c1deadbeef")
        assert re.fullmatch(r"tpiscan_3fa2b9c1_\d{4}", run_id)

    def test_format_error(self):
        assert format_error(ValueError("bad value"), "derive") == "derive failed (ValueError): bad value"
        assert format_error(KeyError(), "write") == "write failed (KeyError): KeyError"

    def test_format_elapsed(self):
        assert format_elapsed_time(6500) == "6.5s"

    def test_child_logger(self):
        assert get_logger("diamond_cavity.physics.dynamics").name == f"{LOGGER_NAME}.dynamics"
        assert get_logger().name == LOGGER_NAME

    def test_configure_from_environment(self, monkeypatch):
        monkeypatch.setenv("DIAMOND_CAVITY_LOG", "debug")
        assert configure_logging() == logging.DEBUG
        monkeypatch.setenv("DIAMOND_CAVITY_LOG", "loud")
        assert configure_logging() == logging.INFO
        assert configure_logging("warn") == logging.WARNING

    def test_stderr_is_never_rebound(self, monkeypatch):
        """Test that importing on any platform leaves sys.stderr in place for the log handler"""
        monkeypatch.setattr(sys, "platform", "win32")
        before = sys.stderr
        importlib.reload(common)
        assert sys.stderr is before
        common.configure_logging()
        assert logging.getLogger(LOGGER_NAME).handlers[0].stream is before

    def test_progress_bar_context_reports_failure(self, caplog):
        with caplog.at_level(logging.ERROR, logger=LOGGER_NAME):
            with pytest.raises(RuntimeError):
                with ProgressBar("fom_x_0000", "fom", 2, enabled=False):
                    raise RuntimeError("boom")
        assert any("failed" in r.getMessage() and "boom" in r.getMessage() for r in caplog.records)
