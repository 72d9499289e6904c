"""
CSV 与运行清单
逗号分隔、'.' 小数点、12 位有效数字科学计数法、表头行、LF 换行；文件校验和为 sha256
"""

import csv
import hashlib
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from ..errors import OutputError


def format_value(value: Any) -> str:
    """浮点数 → '%.11e'；整数、布尔与字符串原样输出；NaN → 'nan'"""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.11e}"
    return str(value)


def write_csv(path: str, fieldnames: Sequence[str], rows: Iterable[Dict[str, Any]]) -> str:
    """写出 CSV，返回文件的 sha256"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(fieldnames), extrasaction="raise", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: format_value(row[k]) for k in fieldnames})
    return sha256_file(path)


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """运行清单；outputs 中每个文件都带 sha256，缺失文件使 finalize 失败"""

    experiment: str
    run_id: str
    config_hash: str
    software_version: str
    resolved_parameters: Dict[str, Any] = field(default_factory=dict)
    timings_ms: Dict[str, int] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    outputs: List[Dict[str, Any]] = field(default_factory=list)

    def add_output(self, path: str, checksum: str = None) -> None:
        self.outputs.append({"file": os.path.basename(path), "path": path, "sha256": checksum})

    def finalize(self) -> dict:
        """重新计算全部校验和并返回可序列化字典"""
        files = []
        for item in self.outputs:
            path = item["path"]
            if not os.path.isfile(path):
                raise OutputError(f"output file missing: {path}")
            checksum = sha256_file(path)
            if item["sha256"] is not None and item["sha256"] != checksum:
                raise OutputError(f"output file changed after writing: {path}")
            files.append({"file": item["file"], "sha256": checksum, "bytes": os.path.getsize(path)})
        return {
            "experiment": self.experiment,
            "run_id": self.run_id,
            "config_hash": self.config_hash,
            "software_version": self.software_version,
            "resolved_parameters": _jsonable(self.resolved_parameters),
            "timings_ms": dict(self.timings_ms),
            "warnings": list(self.warnings),
            "outputs": sorted(files, key=lambda f: f["file"]),
        }


def _jsonable(value: Any) -> Any:
    """numpy 标量 / 复数 / 非有限浮点数 → JSON 可表示的值"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [_jsonable(float(value.real)), _jsonable(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value
