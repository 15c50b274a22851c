"""Tests for the expression renderer and the report writer."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from nonauto_equiv.dsl import Binary, Num, State, Unary
from nonauto_equiv.dynamics import ProbeStatus
from nonauto_equiv.exceptions import ReportIOError
from nonauto_equiv.parsers import parse_expr
from nonauto_equiv.renderers import (
    Report,
    Table,
    format_number,
    read_report,
    render_expr,
    write_report,
)
from nonauto_equiv.renderers.report import (
    METADATA_FILE,
    REPORT_FILE,
    format_cell,
    plain,
    read_table,
    report_status,
)


def rendered(text: str, n: int = 2) -> str:
    return render_expr(parse_expr(text, n))


class TestExpressionRenderer:
    """Test the printed normal form."""

    def test_gallery_formula(self) -> None:
        """Test spacing and the parentheses a sum under a product needs."""
        assert rendered("0.2*(sqrt(1+x1^2)+cos(t))") == "0.2 * (sqrt(1 + x1^2) + cos(t))"

    def test_redundant_parentheses_dropped(self) -> None:
        """Test parentheses the grammar does not need disappear."""
        assert rendered("(x1*x2)+(1)") == "x1 * x2 + 1"
        assert rendered("(1-2)-3") == "1 - 2 - 3"

    def test_right_operand_parentheses_kept(self) -> None:
        """Test left associativity forces parentheses on the right."""
        assert rendered("1-(2-3)") == "1 - (2 - 3)"
        assert rendered("x1/(x2*2)") == "x1 / (x2 * 2)"

    def test_negation(self) -> None:
        """Test prefix minus on atoms and sums."""
        assert rendered("-x1") == "-x1"
        assert rendered("-(x1+1)") == "-(x1 + 1)"

    def test_power_operands(self) -> None:
        """Test a negated base needs parentheses, a negated exponent does not."""
        assert rendered("(-x1)^2") == "(-x1)^2"
        assert rendered("2^-1") == "2^-1"
        assert rendered("x1^2^3") == "x1^2^3"

    def test_literals(self) -> None:
        """Test integral literals print without a fraction."""
        assert render_expr(Binary("*", Num(2.0), State(1))) == "2 * x1"
        assert render_expr(Unary("exp", Num(0.25))) == "exp(0.25)"

    def test_normal_form_is_stable(self) -> None:
        """Test printing, parsing and printing again gives the same text."""
        for text in ("0.15*x1 + 0.1*sin(x2)", "-0.5*cos(t)", "atan(x1)/(1+x2^2)", "ln(2)-x1"):
            once = rendered(text)
            assert rendered(once) == once


class TestFormatNumber:
    """Test literal formatting."""

    def test_integers_and_fractions(self) -> None:
        """Test integral values drop the fraction, others keep repr."""
        assert format_number(2.0) == "2"
        assert format_number(0.25) == "0.25"
        assert format_number(1e-5) == "1e-05"

    def test_non_finite_rejected(self) -> None:
        """Test non-finite literals cannot be printed."""
        with pytest.raises(ValueError):
            format_number(math.inf)
        with pytest.raises(ValueError):
            format_number(math.nan)


class TestPlainData:
    """Test conversion of results to JSON-ready data."""

    def test_numpy_values(self) -> None:
        """Test arrays and numpy scalars become Python values."""
        assert plain(np.array([[1.0, 2.0]])) == [[1.0, 2.0]]
        assert plain(np.int64(3)) == 3
        assert plain(np.float64(0.5)) == 0.5
        assert plain(np.bool_(True)) is True

    def test_non_finite(self) -> None:
        """Test non-finite floats become strings."""
        assert plain([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]

    def test_containers(self) -> None:
        """Test mappings, tuples, paths and enums."""
        data = {"path": Path("out"), "pair": (1, 2.0), 3: ProbeStatus.VIOLATED}

        assert plain(data) == {"path": "out", "pair": [1, 2.0], "3": "violated"}

    def test_unserializable(self) -> None:
        """Test arbitrary objects are rejected."""
        with pytest.raises(TypeError):
            plain(object())

    def test_cells(self) -> None:
        """Test CSV cell text."""
        assert format_cell(0.1) == "0.1"
        assert format_cell(np.array([1.0, -2.5])) == "1.0 -2.5"
        assert format_cell(True) == "true"
        assert format_cell(None) == ""
        assert format_cell("G") == "G"
        assert format_cell(math.inf) == "inf"


class TestReportStatus:
    """Test status derivation."""

    def test_pass(self) -> None:
        """Test passing and empty certificate lists."""
        assert report_status([]) == "pass"
        assert report_status([{"passed": True}]) == "pass"

    def test_fail(self) -> None:
        """Test a failing certificate or a failed audit id."""
        assert report_status([{"passed": True}, {"passed": False}]) == "fail"
        assert report_status([], failed=["smallness"]) == "fail"

    def test_outside_theorem(self) -> None:
        """Test failures outside the theorem do not count as failures."""
        assert report_status([{"passed": False, "outside_theorem": True}]) == "outside-theorem"
        assert report_status([{"passed": True}], outside_theorem=True) == "outside-theorem"

    def test_exit_codes(self) -> None:
        """Test the exit code follows from the status."""
        codes = {
            status: Report("map", status, "0").exit_code
            for status in ("pass", "fail", "outside-theorem", "usage-error", "numerical-error")
        }

        assert codes == {
            "pass": 0,
            "fail": 1,
            "outside-theorem": 1,
            "usage-error": 2,
            "numerical-error": 3,
        }


def sample_report() -> Report:
    table = Table("sweep", ("value", "gamma", "outside_theorem"))
    table.add(0.5, 0.125, False)
    table.add(8.0, 2.0, True)
    return Report(
        task="sweep",
        status="outside-theorem",
        version="0.1.0",
        config={"seed": 0},
        constants={"K": 1.0, "gamma": 0.25},
        certificates=[{"bound_id": "Inverse", "passed": True, "worst_margin": math.inf}],
        tables=[table],
        timing={"elapsed_seconds": 1.25},
    )


class TestReportWriter:
    """Test writing and reading report files."""

    def test_table_arity(self) -> None:
        """Test rows must match the columns."""
        table = Table("t", ("a", "b"))
        with pytest.raises(ValueError):
            table.add(1.0)

    def test_empty_report(self, tmp_path: Path) -> None:
        """Test an empty certificate list gives valid JSON with status pass."""
        write_report(Report("verify", "pass", "0.1.0"), tmp_path)

        data = json.loads((tmp_path / REPORT_FILE).read_text(encoding="utf-8"))
        assert data["status"] == "pass"
        assert data["certificates"] == []
        assert not (tmp_path / METADATA_FILE).exists()

    def test_round_trip(self, tmp_path: Path) -> None:
        """Test writing then reading yields the same structure."""
        report = sample_report()
        write_report(report, tmp_path)

        assert read_report(tmp_path) == report.to_dict()

    def test_key_order(self, tmp_path: Path) -> None:
        """Test report keys appear in a fixed order."""
        write_report(sample_report(), tmp_path)

        data = read_report(tmp_path)
        assert list(data) == [
            "tool",
            "version",
            "task",
            "status",
            "failed",
            "error",
            "config",
            "constants",
            "certificates",
            "sections",
            "tables",
        ]
        assert data["certificates"][0]["worst_margin"] == "inf"
        columns = ["value", "gamma", "outside_theorem"]
        assert data["tables"] == {"sweep": {"columns": columns, "rows": 2}}

    def test_deterministic_bytes(self, tmp_path: Path) -> None:
        """Test the same report gives byte-identical files."""
        write_report(sample_report(), tmp_path / "a")
        write_report(sample_report(), tmp_path / "b")

        first = (tmp_path / "a" / REPORT_FILE).read_bytes()
        assert first == (tmp_path / "b" / REPORT_FILE).read_bytes()

    def test_csv_and_metadata(self, tmp_path: Path) -> None:
        """Test tables become CSV files and timing goes to the metadata file."""
        written = write_report(sample_report(), tmp_path)

        assert tmp_path / "sweep.csv" in written
        header, rows = read_table(tmp_path / "sweep.csv")
        assert header == ["value", "gamma", "outside_theorem"]
        assert rows == [["0.5", "0.125", "false"], ["8.0", "2.0", "true"]]
        timing = json.loads((tmp_path / METADATA_FILE).read_text(encoding="utf-8"))
        assert timing == {"elapsed_seconds": 1.25}
        assert "timing" not in read_report(tmp_path)

    def test_json_only(self, tmp_path: Path) -> None:
        """Test the csv format can be switched off."""
        write_report(sample_report(), tmp_path, formats=("json",))

        assert not (tmp_path / "sweep.csv").exists()

    def test_unwritable_directory(self, tmp_path: Path) -> None:
        """Test a directory that cannot be created."""
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")

        with pytest.raises(ReportIOError):
            write_report(sample_report(), blocker / "sub")

    def test_missing_report(self, tmp_path: Path) -> None:
        """Test reading a directory without a report."""
        with pytest.raises(ReportIOError):
            read_report(tmp_path)
