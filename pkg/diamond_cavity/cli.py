"""
命令行入口
diamond-cavity <map-state|tpi-scan|fom|validate|coeffs> --config <file> [--out <dir>] [--jobs N]

退出码: 0 成功（含有效性警告）；2 配置或库错误（stderr 输出 JSON 失败容器）；1 未预期异常
"""

import argparse
import json
import os
import sys
from typing import List, Optional

from . import __version__
from .commands import COMMAND_CLASS_MAPPINGS, COMMAND_DISPLAY_NAME_MAPPINGS
from .config_manager import config_manager
from .errors import DiamondCavityError
from .utils.common import configure_logging, format_error, get_logger

log = get_logger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_FAILURE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diamond-cavity",
        description="Diamond-configuration atoms in a bimodal cavity: photon-state mapping and output figure of merit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="<command>", required=True)
    for name, display in COMMAND_DISPLAY_NAME_MAPPINGS.items():
        cmd = sub.add_parser(name, help=display, description=display)
        cmd.add_argument("--config", required=True, help="run configuration (JSON)")
        cmd.add_argument("--out", default=None, help="output directory (default: ./runs/<command>)")
        cmd.add_argument("--jobs", type=int, default=None,
                         help="worker processes for sweeps (default: logical CPU count)")
    return parser


def _fail(container: dict) -> None:
    sys.stderr.write(json.dumps(container, ensure_ascii=False, sort_keys=True) + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    out_dir = args.out or os.path.join("runs", args.command)

    try:
        config = config_manager.load_run_config(args.config, expected_experiment=args.command)
        command = COMMAND_CLASS_MAPPINGS[args.command](config, out_dir, jobs=args.jobs)
    except DiamondCavityError as e:
        _fail({"success": False, "error": format_error(e, "config"), "error_type": e.code})
        return EXIT_FAILURE

    try:
        result = command.execute()
    except Exception as e:
        log.exception(f"unexpected failure in {args.command}")
        _fail({"success": False, "error": format_error(e, args.command), "error_type": "unexpected"})
        return EXIT_UNEXPECTED

    for line in result.get("stdout", ()):
        print(line)
    if not result["success"]:
        _fail({k: result[k] for k in ("success", "error", "error_type")})
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
