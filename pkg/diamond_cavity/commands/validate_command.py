"""
validate 命令
打印绝热消除与腔条件的每一项余量、阈值与 pass/warn/fail；警告不影响退出码
"""

from dataclasses import asdict

from ..physics.diamond_model import effective_coefficients, validity_report
from ..physics.inout_fom import cavity_conditions
from ..utils.common import TASK_VALIDATE
from .base import BaseCommand

REPORT_FIELDS = ("check", "margin", "pass_threshold", "warn_threshold", "status", "description")


class ValidateCommand(BaseCommand):
    NAME = "validate"
    TASK = TASK_VALIDATE

    def run(self) -> None:
        expected = self.config.validate
        checks = []
        with self.stage("derive"):
            if self.config.physical is not None:
                params = self.physical_params()
                # Δ = 0 或极点处直接报错，不生成报告
                coeffs = effective_coefficients(params)
                self.resolve(physical=params.as_dict(), coefficients=asdict(coeffs))
                report = validity_report(params, expected["expected_photons_a"], expected["expected_photons_b"])
                checks.extend(("physical", c) for c in report.checks)
            if self.config.cavity is not None:
                system = self.manager.cavity_system(self.config.cavity)
                self.resolve(cavity=dict(self.config.cavity), cavity_physical=system.params.as_dict(),
                             derived_over_2pi_hz=system.summary_over_2pi())
                report = validity_report(system.params, expected["expected_photons_a"],
                                         expected["expected_photons_b"])
                checks.extend(("cavity", c) for c in report.checks)
                conditions = cavity_conditions(system.params, system.coeffs, system.kappa_effective,
                                               system.damping.eta_tot)
                checks.extend(("cavity", c) for c in conditions.checks)

        for scope, check in checks:
            if check.status in ("warn", "fail"):
                self.warn(f"{scope}.{check.name}: margin {check.margin:.4g} is {check.status} "
                          f"(pass >= {check.pass_threshold:g}, warn >= {check.warn_threshold:g})")

        with self.stage("write"):
            self.write_csv("validity_report.csv", REPORT_FIELDS, (
                {
                    "check": f"{scope}.{check.name}",
                    "margin": check.margin,
                    "pass_threshold": check.pass_threshold,
                    "warn_threshold": check.warn_threshold,
                    "status": check.status,
                    "description": check.description,
                }
                for scope, check in checks
            ))

        width = max(len(f"{scope}.{check.name}") for scope, check in checks)
        for scope, check in checks:
            name = f"{scope}.{check.name}"
            self.echo(f"{name:<{width}}  margin {check.margin:>12.4g}  pass >= {check.pass_threshold:<4g} "
                      f"warn >= {check.warn_threshold:<4g}  {check.status.upper():<4}  {check.description}")


COMMAND_CLASS_MAPPINGS = {
    "validate": ValidateCommand,
}

COMMAND_DISPLAY_NAME_MAPPINGS = {
    "validate": "Validity margins",
}
