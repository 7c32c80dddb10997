"""Result rows of driver runs and their CSV and JSON serialisations."""
import csv
import json
from logging import Logger, getLogger
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, root_validator

from .inversion import ErrorBudget, ReconstructionReport
from .utils import format_float

logger: Logger = getLogger(__name__)

COLUMNS = [
    "probe_id",
    "reference",
    "computed",
    "abs_error",
    "budget_quadrature",
    "budget_differentiation",
    "budget_extrapolation",
    "wall_time_ms",
]
"""Fixed columns of result CSVs"""


class ResultRow(BaseModel):
    """One computed value, compared against its reference when there is one"""

    probe_id: str
    reference: Optional[float] = None
    computed: float
    abs_error: Optional[float] = None
    """|reference - computed|, set from the two values"""
    budget: ErrorBudget = ErrorBudget()
    wall_time_ms: Optional[float] = None
    tolerance: Optional[float] = None
    """Largest admissible error of this row, not serialised"""

    @root_validator(skip_on_failure=True)
    def compute_error(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        reference = values.get("reference")
        values["abs_error"] = None if reference is None else abs(reference - values["computed"])
        return values

    @property
    def passed(self) -> bool:
        """Whether the error stays within the tolerance, rows without either pass"""
        if self.tolerance is None or self.abs_error is None:
            return True
        return self.abs_error <= self.tolerance

    def cells(self, timings: bool = False) -> Dict[str, str]:
        return {
            "probe_id": self.probe_id,
            "reference": format_float(self.reference),
            "computed": format_float(self.computed),
            "abs_error": format_float(self.abs_error),
            "budget_quadrature": format_float(self.budget.quadrature),
            "budget_differentiation": format_float(self.budget.differentiation),
            "budget_extrapolation": format_float(self.budget.extrapolation),
            "wall_time_ms": format_float(self.wall_time_ms) if timings else "",
        }


def report_rows(report: ReconstructionReport, tolerance: Optional[float] = None) -> List[ResultRow]:
    """One row per probe of a reconstruction report"""
    return [
        ResultRow(
            probe_id=f"s={format_float(s)}",
            reference=reference,
            computed=computed,
            budget=budget,
            tolerance=tolerance,
        )
        for s, reference, computed, budget in zip(report.probes, report.reference, report.computed, report.budgets)
    ]


def sup_error(rows: Sequence[ResultRow]) -> Optional[float]:
    errors = [row.abs_error for row in rows if row.abs_error is not None]
    return max(errors) if errors else None


def write_rows(path: Path, rows: Sequence[ResultRow], timings: bool = False) -> None:
    """Writes the rows as a UTF-8 CSV with a header row

    :raises OSError: when the file cannot be written
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.cells(timings))
    logger.info("Wrote %s rows to %s", len(rows), path)


def write_columns(path: Path, header: Sequence[str], columns: Sequence[Sequence[Optional[float]]]) -> None:
    """Writes plot data, one float column per header entry

    :raises OSError: when the file cannot be written
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for values in zip(*columns):
            writer.writerow([format_float(value) for value in values])
    logger.info("Wrote plot data %s to %s", list(header), path)


def write_summary(path: Path, summary: Dict[str, Any]) -> None:
    """Writes the JSON summary with sorted keys

    :raises OSError: when the file cannot be written
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
