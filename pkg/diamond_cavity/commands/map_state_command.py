"""
map-state 命令
输入态 Σc_k|k>_A 映射到 B 模：光子转移曲线 photon_transfer.csv 与映射报告 mapping_report.csv
"""

import math
from dataclasses import asdict

import numpy as np

from ..config_manager import parse_amplitudes
from ..errors import ParameterError
from ..physics.diamond_model import effective_coefficients, validity_report
from ..physics.dynamics import photon_transfer_curve, state_mapping_report
from ..utils.common import TASK_MAP_STATE
from .base import BaseCommand

PHOTON_FIELDS = ("t_us", "n_b_numeric", "n_b_analytic", "norm_sq")
REPORT_FIELDS = (
    "t_pi", "fidelity", "success_prob",
    "t_pi_g", "t_pi_analytic", "t_pi_analytic_g", "unconditional_fidelity", "local_maxima", "phase_frame",
)


class MapStateCommand(BaseCommand):
    """
    Fock 或叠加态输入，全模型 H̃ 下的态映射

    t_pi 列单位为 μs，*_g 列以 1/g 为单位；δ₂ = 0（模式不耦合）时报告行为 NaN，曲线长度取 mapping.t_max_us
    """

    NAME = "map-state"
    TASK = TASK_MAP_STATE

    def run(self) -> None:
        numerics = self.config.numerics
        with self.stage("derive"):
            params = self.physical_params()
            amplitudes = parse_amplitudes(self.config.mapping["input_amplitudes"])
            coeffs = effective_coefficients(params)
            options = self.mapping_options()
            self.resolve(physical=params.as_dict(), coefficients=asdict(coeffs),
                         input_amplitudes=amplitudes, phase_frame=options.phase_frame)

        report = None
        if coeffs.delta2 != 0.0:
            with self.stage("search"):
                report = state_mapping_report(params, amplitudes, options)
            for message in report.warnings:
                self.manifest.warnings.append(message)
            t_end = options.curve_span * report.t_pi_analytic
        else:
            t_max_us = self.config.mapping.get("t_max_us")
            if t_max_us is None:
                raise ParameterError("modes are not coupled (delta2 = 0): set mapping.t_max_us for the curve length")
            self.warn("delta2 = 0: modes are not coupled, t_pi is undefined")
            amps = np.asarray(amplitudes)
            mean_photons = float(np.sum(np.abs(amps) ** 2 * np.arange(amps.size)))
            for message in validity_report(params, mean_photons, mean_photons).warnings():
                self.warn(message)
            t_end = t_max_us * 1e-6

        with self.stage("evolve"):
            t_grid = np.linspace(0.0, t_end, numerics["t_points"])
            curve = photon_transfer_curve(params, amplitudes, t_grid, options.tolerances)

        with self.stage("write"):
            self.write_csv("photon_transfer.csv", PHOTON_FIELDS, (
                {
                    "t_us": t * 1e6,
                    "n_b_numeric": float(nb),
                    "n_b_analytic": float(na),
                    "norm_sq": float(p),
                }
                for t, nb, na, p in zip(curve.times, curve.n_b_numeric, curve.n_b_analytic, curve.norm_sq)
            ))
            self.write_csv("mapping_report.csv", REPORT_FIELDS, [_report_row(report, params.g, options.phase_frame)])

        if report is not None:
            self.echo(f"t_pi = {report.t_pi * params.g:.4f}/g  fidelity = {report.fidelity:.4f}  "
                      f"success_prob = {report.success_probability:.4f}")


def _report_row(report, g: float, phase_frame: str) -> dict:
    if report is None:
        nan = math.nan
        return {
            "t_pi": nan, "fidelity": nan, "success_prob": nan, "t_pi_g": nan, "t_pi_analytic": nan,
            "t_pi_analytic_g": nan, "unconditional_fidelity": nan, "local_maxima": 0, "phase_frame": phase_frame,
        }
    return {
        "t_pi": report.t_pi * 1e6,
        "fidelity": report.fidelity,
        "success_prob": report.success_probability,
        "t_pi_g": report.t_pi * g,
        "t_pi_analytic": report.t_pi_analytic * 1e6,
        "t_pi_analytic_g": report.t_pi_analytic * g,
        "unconditional_fidelity": report.unconditional_fidelity,
        "local_maxima": len(report.local_maxima),
        "phase_frame": report.phase_frame,
    }


COMMAND_CLASS_MAPPINGS = {
    "map-state": MapStateCommand,
}

COMMAND_DISPLAY_NAME_MAPPINGS = {
    "map-state": "Map photon state A -> B",
}
