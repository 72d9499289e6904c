"""
tpi-scan 命令
各参数组 t_π(n_ph) 相对 t_π(1) 的偏差（百分比），各点在进程池中独立计算
"""

from dataclasses import asdict

from ..errors import ConfigError
from ..physics.diamond_model import effective_coefficients
from ..physics.dynamics import t_pi_analytic, tpi_scan
from ..utils.common import TASK_TPI_SCAN, ProgressBar
from ..utils.pool import PoolMapper
from .base import BaseCommand

DEVIATION_FIELDS = ("label", "n_ph", "t_pi", "deviation_percent", "t_pi_g", "population", "jump")


class TpiScanCommand(BaseCommand):
    NAME = "tpi-scan"
    TASK = TASK_TPI_SCAN

    def _parameter_sets(self):
        sets = self.config.scan.get("parameter_sets")
        if not sets:
            return [("default", self.physical_params())]
        labels = [item["label"] for item in sets]
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise ConfigError(f"scan.parameter_sets labels must be unique, repeated: {', '.join(duplicates)}")
        return [(item["label"], self.physical_params(item["physical"])) for item in sets]

    def run(self) -> None:
        scan = self.config.scan
        with self.stage("derive"):
            parameter_sets = self._parameter_sets()
            n_ph_max = scan["n_ph_max"]
            threshold = scan["jump_threshold_percent"]
            options = self.mapping_options()
            resolved = {}
            for label, params in parameter_sets:
                coeffs = effective_coefficients(params)
                resolved[label] = {
                    "physical": params.as_dict(),
                    "coefficients": asdict(coeffs),
                    "t_pi_analytic_g": t_pi_analytic(coeffs) * params.g,
                }
            self.resolve(parameter_sets=resolved, n_ph_max=n_ph_max, jump_threshold_percent=threshold)

        g_by_label = {label: params.g for label, params in parameter_sets}
        with self.stage("scan"):
            total = len(parameter_sets) * n_ph_max
            with ProgressBar(self.run_id, self.TASK, total) as progress:
                rows = tpi_scan(parameter_sets, n_ph_max, options, mapper=PoolMapper(self.jobs, progress),
                                jump_threshold_percent=threshold)

        for row in rows:
            if row.jump:
                self.manifest.warnings.append(f"t_pi jump for set '{row.label}' at n_ph={row.n_ph}")

        with self.stage("write"):
            self.write_csv("tpi_deviation.csv", DEVIATION_FIELDS, (
                {
                    "label": row.label,
                    "n_ph": row.n_ph,
                    "t_pi": row.t_pi * 1e6,
                    "deviation_percent": row.deviation_percent,
                    "t_pi_g": row.t_pi * g_by_label[row.label],
                    "population": row.population,
                    "jump": row.jump,
                }
                for row in rows
            ))

        for label, _ in parameter_sets:
            worst = max(abs(r.deviation_percent) for r in rows if r.label == label)
            self.echo(f"{label}: max |deviation| = {worst:.3f}% through n_ph={n_ph_max}")


COMMAND_CLASS_MAPPINGS = {
    "tpi-scan": TpiScanCommand,
}

COMMAND_DISPLAY_NAME_MAPPINGS = {
    "tpi-scan": "t_pi deviation scan",
}
