import json
import logging
import os
from typing import Dict, List, Optional, Sequence

from src.IR.models import BoundReport, ExperimentResult

logger = logging.getLogger(__name__)

CSV_HEADER = "abscissa,measured,envelope"
NUMBER_FORMAT = "{:.16e}"


def format_number(value: Optional[float]) -> str:
    """17 significant digits; a missing envelope is written as an empty cell."""
    if value is None:
        return ""
    return NUMBER_FORMAT.format(float(value))


class ReportStorage:
    """Writes one CSV per BoundReport and a JSON summary per experiment under `out_dir/<experiment>/`."""

    def __init__(self, out_dir: str = "reports"):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    def experiment_dir(self, name: str) -> str:
        path = os.path.join(self.out_dir, _safe_name(name))
        os.makedirs(path, exist_ok=True)
        return path

    def save_report_csv(self, experiment: str, report: BoundReport) -> str:
        path = os.path.join(self.experiment_dir(experiment), f"{_safe_name(report.name)}.csv")
        lines = [CSV_HEADER]
        for point in report.grid:
            lines.append(",".join(format_number(x) for x in point.to_tuple()))
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
        logger.debug(f"Wrote {len(report.grid)} rows to {path}")
        return path

    def save_rows_csv(self, experiment: str, name: str, header: Sequence[str], rows: Sequence[Sequence[float]]) -> str:
        """Free-form numeric table, e.g. per-sample audit values."""
        path = os.path.join(self.experiment_dir(experiment), f"{_safe_name(name)}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(",".join(header) + "\n")
            for row in rows:
                f.write(",".join(format_number(x) for x in row) + "\n")
        return path

    def save_summary_json(self, result: ExperimentResult, wall_time: Optional[float] = None,
                          extra: Optional[Dict] = None) -> str:
        path = os.path.join(self.experiment_dir(result.name), "summary.json")
        payload = result.to_json(wall_time)
        if extra:
            merged = json.loads(payload)
            merged.update(extra)
            payload = json.dumps(merged, indent=2, sort_keys=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(payload + "\n")
        return path

    def save_result(self, result: ExperimentResult, wall_time: Optional[float] = None) -> List[str]:
        paths = [self.save_report_csv(result.name, report) for report in result.reports]
        paths.append(self.save_summary_json(result, wall_time))
        logger.info(f"Saved {len(paths)} report files to {self.experiment_dir(result.name)}")
        return paths


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name) or "experiment"
