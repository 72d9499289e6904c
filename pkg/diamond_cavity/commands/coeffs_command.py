"""
coeffs 命令
每个闭式系数一行：SI 值（rad/s 的幂）与以 g 为单位的值；腔配置额外给出 ζ/θ 与阻尼率
"""

import math
from typing import List, Tuple

from ..physics.diamond_model import EffectiveCoefficients, PhysicalParams, effective_coefficients, high_intensity_limit
from ..physics.dynamics import t_pi_analytic
from ..utils.common import TASK_COEFFS
from .base import BaseCommand

TWO_PI = 2.0 * math.pi

COEFF_FIELDS = ("scope", "coefficient", "g_power", "value_si", "value_over_g", "value_over_2pi_hz")

# (名称, 值, 频率量纲的幂)：value_over_g = value / g^power
Row = Tuple[str, float, int]


def coefficient_rows(params: PhysicalParams, coeffs: EffectiveCoefficients) -> List[Row]:
    rows: List[Row] = [("xi", coeffs.xi, -3)]
    rows += [(f"alpha{i}", value, -1) for i, value in enumerate(coeffs.alphas, start=1)]
    rows += [
        ("delta0", coeffs.delta0, 1),
        ("delta1", coeffs.delta1, 1),
        ("delta2", coeffs.delta2, 1),
        ("delta_r", coeffs.delta_r, 1),
        ("epsilon", coeffs.epsilon, 0),
        ("gamma_eff", coeffs.gamma_eff, 1),
        ("gamma_tot", coeffs.gamma_tot, 1),
    ]
    if coeffs.lambdas is not None:
        rows += [(f"lambda{i}", value, 0) for i, value in enumerate(coeffs.lambdas, start=1)]
    if coeffs.delta2 != 0.0:
        rows.append(("t_pi", t_pi_analytic(coeffs), -1))
    if params.delta != 0.0 and params.omega > 0.0 and params.omega_prime > 0.0:
        rows += [(f"high_intensity_{k}", v, _high_intensity_power(k))
                 for k, v in high_intensity_limit(params).items()]
    return rows


def _high_intensity_power(key: str) -> int:
    return -1 if key.startswith("alpha") else 1


class CoeffsCommand(BaseCommand):
    NAME = "coeffs"
    TASK = TASK_COEFFS

    def run(self) -> None:
        tables = []
        with self.stage("derive"):
            if self.config.physical is not None:
                params = self.physical_params()
                coeffs = effective_coefficients(params)
                tables.append(("physical", params, coefficient_rows(params, coeffs)))
                self.resolve(physical=params.as_dict())
            if self.config.cavity is not None:
                system = self.manager.cavity_system(self.config.cavity)
                lm = system.langevin()
                rows = coefficient_rows(system.params, system.coeffs)
                rows += [(name, value, 1) for name, value in lm.rates().items()]
                rows.append(("kappa_gamma", system.kappa_gamma, 1))
                rows += [(name, value, 1) for name, value in (
                    ("g", system.params.g), ("g_prime", system.params.g_prime),
                    ("delta", system.params.delta), ("omega", system.params.omega),
                    ("omega_prime", system.params.omega_prime),
                )]
                tables.append(("cavity", system.params, rows))
                self.resolve(cavity=dict(self.config.cavity), cavity_physical=system.params.as_dict(),
                             derived_over_2pi_hz=system.summary_over_2pi())

        records = []
        for scope, params, rows in tables:
            for name, value, power in rows:
                records.append({
                    "scope": scope,
                    "coefficient": name,
                    "g_power": power,
                    "value_si": value,
                    "value_over_g": value / params.g ** power,
                    "value_over_2pi_hz": value / TWO_PI if power == 1 else math.nan,
                })

        with self.stage("write"):
            self.write_csv("coefficients.csv", COEFF_FIELDS, records)

        for r in records:
            self.echo(f"{r['scope']:<8} {r['coefficient']:<34} {r['value_si']:>16.6e}  {r['value_over_g']:>16.6e}")


COMMAND_CLASS_MAPPINGS = {
    "coeffs": CoeffsCommand,
}

COMMAND_DISPLAY_NAME_MAPPINGS = {
    "coeffs": "Effective coefficients",
}
