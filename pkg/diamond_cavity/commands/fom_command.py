"""
fom 命令
单点：三种方法的品质因数 F 与全部派生参数；扫描：(l, T′₂) 网格上的 F，不稳定点以 NaN 记录
"""

import math
from typing import Tuple

import numpy as np

from ..config_manager import config_manager
from ..errors import (
    ConfigError,
    ParameterError,
    SingularityError,
    SingularSystemError,
    UnstableMatrixError,
)
from ..physics.inout_fom import cavity_conditions, compute_fom, fom_sylvester
from ..utils.common import TASK_FOM, ProgressBar
from ..utils.pool import run_parallel
from .base import BaseCommand

TWO_PI = 2.0 * math.pi

GRID_FIELDS = ("l_mm", "T2p_ppm", "F")
SCAN_FIELDS = ("T2p_ppm", "F")
DERIVED_KEYS = (
    "g", "g_prime", "delta", "omega", "omega_prime", "gamma", "gamma_prime", "gamma_dprime",
    "eta_tot", "kappa", "kappa_gamma",
)
RATE_KEYS = ("zeta1", "theta1", "zeta2", "theta2", "eta", "eta_prime")
POINT_FIELDS = (
    ("l_mm", "T2p_ppm", "n_atoms", "F_quadrature", "F_sylvester", "F_approx", "method_delta")
    + tuple(f"{k}_over_2pi_hz" for k in DERIVED_KEYS)
    + tuple(f"{k}_over_2pi_hz" for k in RATE_KEYS)
    + ("delta1_over_2pi_hz", "delta2_over_2pi_hz", "volume_m3", "volume_prime_m3", "best_T2p_ppm", "best_F")
)

# 扫描点上视为“非物理”的失败，记为 NaN 而非中止
_POINT_FAILURES = (ParameterError, SingularityError, SingularSystemError, UnstableMatrixError)


def axis_values(axis: dict, path: str) -> np.ndarray:
    """{"start", "stop", "num", "scale": linear|log} → 网格"""
    start, stop, num = axis["start"], axis["stop"], axis["num"]
    scale = axis.get("scale", "linear")
    if num < 1:
        raise ConfigError(f"{path}.num must be >= 1, got {num}")
    if scale == "linear":
        return np.linspace(start, stop, num)
    if scale == "log":
        if start <= 0 or stop <= 0:
            raise ConfigError(f"{path}: a log axis needs positive start and stop")
        return np.geomspace(start, stop, num)
    raise ConfigError(f"{path}.scale must be 'linear' or 'log', got {scale!r}")


def fom_grid_point(task: Tuple[dict, float, float]) -> Tuple[float, float, float, str]:
    """单个网格点（进程池中执行）: (l_mm, T′₂, F, 失败原因)"""
    block, length_mm, t2_prime_ppm = task
    try:
        system = config_manager.cavity_system(block, length_mm, t2_prime_ppm)
        lm = system.langevin()
        return length_mm, t2_prime_ppm, fom_sylvester(lm.m, lm.eta), ""
    except _POINT_FAILURES as e:
        return length_mm, t2_prime_ppm, math.nan, str(e)


class FomCommand(BaseCommand):
    NAME = "fom"
    TASK = TASK_FOM

    def run(self) -> None:
        if self.config.fom["mode"] == "sweep":
            self._run_sweep()
        else:
            self._run_point()

    # ---网格计算---
    def _grid(self, tasks, label: str):
        with ProgressBar(self.run_id, self.TASK, len(tasks)) as progress:
            results = run_parallel(fom_grid_point, tasks, self.jobs, progress)
        results.sort(key=lambda item: (item[0], item[1]))
        failed = [item for item in results if math.isnan(item[2])]
        if failed:
            l_mm, t2, _, reason = failed[0]
            self.warn(f"{label}: {len(failed)} of {len(results)} points unphysical or unstable, F=NaN "
                      f"(first at l={l_mm:g} mm, T2'={t2:g} ppm: {reason})")
        return results

    # ---单点---
    def _run_point(self) -> None:
        block = self.config.cavity
        fom = self.config.fom
        with self.stage("derive"):
            system = self.manager.cavity_system(block)
            lm = system.langevin()
            conditions = cavity_conditions(system.params, system.coeffs, system.kappa_effective,
                                           system.damping.eta_tot)
            for message in conditions.warnings():
                self.warn(message)
            self.resolve(
                cavity=dict(block),
                physical=system.params.as_dict(),
                derived_over_2pi_hz=system.summary_over_2pi(),
                rates_over_2pi_hz={k: v / TWO_PI for k, v in lm.rates().items()},
            )

        with self.stage("fom"):
            if lm.is_stable:
                result = compute_fom(lm, quadrature=fom["quadrature"])
                values = (result.f_quadrature, result.f_sylvester, result.f_approx, result.method_delta)
            else:
                self.warn(f"Langevin matrix is unstable (spectral abscissa {lm.abscissa:.3e}), F=NaN")
                values = (math.nan,) * 4

        best_t2, best_f = math.nan, math.nan
        if "t2_prime_scan" in fom:
            with self.stage("t2_prime_scan"):
                axis = axis_values(fom["t2_prime_scan"], "fom.t2_prime_scan")
                tasks = [(block, block["length_mm"], float(t2)) for t2 in axis]
                results = self._grid(tasks, "t2_prime_scan")
                finite = [item for item in results if not math.isnan(item[2])]
                if finite:
                    _, best_t2, best_f, _ = max(finite, key=lambda item: item[2])
                self.write_csv("fom_t2_prime_scan.csv", SCAN_FIELDS,
                               ({"T2p_ppm": t2, "F": f} for _, t2, f, _ in results))

        with self.stage("write"):
            summary = system.summary_over_2pi()
            rates = lm.rates()
            row = {
                "l_mm": block["length_mm"],
                "T2p_ppm": block["t2_prime_ppm"],
                "n_atoms": system.params.n_atoms,
                "F_quadrature": values[0],
                "F_sylvester": values[1],
                "F_approx": values[2],
                "method_delta": values[3],
                "delta1_over_2pi_hz": system.coeffs.delta1 / TWO_PI,
                "delta2_over_2pi_hz": system.coeffs.delta2 / TWO_PI,
                "volume_m3": system.volume,
                "volume_prime_m3": system.volume_prime,
                "best_T2p_ppm": best_t2,
                "best_F": best_f,
            }
            row.update({f"{k}_over_2pi_hz": summary[k] for k in DERIVED_KEYS})
            row.update({f"{k}_over_2pi_hz": rates[k] / TWO_PI for k in RATE_KEYS})
            self.write_csv("fom_point.csv", POINT_FIELDS, [row])

        self.echo(f"F_quadrature = {values[0]:.6f}  F_sylvester = {values[1]:.6f}  F_approx = {values[2]:.6f}")
        if not math.isnan(best_f):
            self.echo(f"best F over T2' = {best_f:.6f} at T2' = {best_t2:g} ppm")

    # ---网格扫描---
    def _run_sweep(self) -> None:
        block = self.config.cavity
        sweep = self.config.fom["sweep"]
        with self.stage("derive"):
            lengths = axis_values(sweep["length_mm"], "fom.sweep.length_mm")
            t2_values = axis_values(sweep["t2_prime_ppm"], "fom.sweep.t2_prime_ppm")
            self.resolve(cavity=dict(block), length_mm=lengths.tolist(), t2_prime_ppm=t2_values.tolist())
            tasks = [(block, float(l_mm), float(t2)) for l_mm in lengths for t2 in t2_values]

        with self.stage("sweep"):
            results = self._grid(tasks, "sweep")

        with self.stage("write"):
            self.write_csv("fom_sweep.csv", GRID_FIELDS,
                           ({"l_mm": l_mm, "T2p_ppm": t2, "F": f} for l_mm, t2, f, _ in results))

        finite = [item for item in results if not math.isnan(item[2])]
        if finite:
            l_mm, t2, f, _ = max(finite, key=lambda item: item[2])
            self.echo(f"max F = {f:.6f} at l = {l_mm:g} mm, T2' = {t2:g} ppm ({len(finite)}/{len(results)} points)")


COMMAND_CLASS_MAPPINGS = {
    "fom": FomCommand,
}

COMMAND_DISPLAY_NAME_MAPPINGS = {
    "fom": "Figure of merit",
}
