import csv
import json

from pytest import fixture

from horotomo.inversion import ErrorBudget, ReconstructionReport
from horotomo.results import COLUMNS, ResultRow, report_rows, sup_error, write_columns, write_rows, write_summary


@fixture
def rows():
    return [
        ResultRow(probe_id="a", reference=1.0, computed=1.5, tolerance=1.0, budget=ErrorBudget(quadrature=1e-9)),
        ResultRow(probe_id="b", computed=2.0, wall_time_ms=3.5),
    ]


def test_rows_compute_their_error(rows):
    first, second = rows
    assert first.abs_error == 0.5
    assert first.passed
    assert second.abs_error is None
    assert second.passed
    assert not first.copy(update={"tolerance": 0.25}).passed
    assert sup_error(rows) == 0.5
    assert sup_error([second]) is None


def test_cells(rows):
    cells = rows[1].cells()
    assert list(cells) == COLUMNS
    assert cells["reference"] == ""
    assert cells["wall_time_ms"] == ""
    assert rows[1].cells(timings=True)["wall_time_ms"] == "3.5"


def test_report_rows():
    report = ReconstructionReport(
        method="test", probes=[1.5], reference=[2.0], computed=[2.25], budgets=[ErrorBudget(extrapolation=1e-3)]
    )
    (row,) = report_rows(report, tolerance=0.1)
    assert row.probe_id == "s=1.5"
    assert row.abs_error == 0.25
    assert not row.passed
    assert row.budget.extrapolation == 1e-3


def test_write_rows(tmp_path, rows):
    path = tmp_path / "nested" / "out.csv"
    write_rows(path, rows)
    with path.open(encoding="utf-8", newline="") as handle:
        lines = list(csv.reader(handle))
    assert lines[0] == COLUMNS
    assert lines[1][:4] == ["a", "1", "1.5", "0.5"]
    assert len(lines) == 3


def test_write_columns(tmp_path):
    path = tmp_path / "plot.csv"
    write_columns(path, ["s", "f"], [[1.0, 2.0], [0.5, None]])
    assert path.read_text(encoding="utf-8").splitlines() == ["s,f", "1,0.5", "2,"]


def test_write_summary_sorts_keys(tmp_path):
    path = tmp_path / "summary.json"
    write_summary(path, {"passed": True, "method": "forward", "sup_error": None})
    text = path.read_text(encoding="utf-8")
    assert list(json.loads(text)) == ["method", "passed", "sup_error"]
    assert text.endswith("\n")
