"""Renderer for run reports.

A run writes up to three kinds of files into its output directory:

* ``report.json``: the configuration echo, tool version, constant sheet,
  certificates, task sections and status. Keys appear in a fixed order and
  floats are written with the shortest round-trip representation, so the
  same configuration and seed give a byte-identical file.
* ``<table>.csv``: one file per point table, with a header row.
* ``metadata.json``: wall-clock timing, kept apart from the report.

Non-finite floats are written as the strings ``"inf"``, ``"-inf"`` and
``"nan"`` in both formats.

CSV columns per task (append-only):

* map: ``map, t, point, value, residual, steps, oracle_error``
* jacobian: ``map, t, point, det, condition, direct_error, identity_error, fd_error``
* hessian: ``map, t, point, symmetry_error, integral_error, fd_error``
* verify: ``relation, tau, max_residual, samples, passed``
* sweep: ``gamma, K_gamma_over_alpha, conj_residual, inv_residual, value, outside_theorem``
"""

import csv
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from ..exceptions import ReportIOError

REPORT_FILE = "report.json"
METADATA_FILE = "metadata.json"

EXIT_CODES = {
    "pass": 0,
    "fail": 1,
    "outside-theorem": 1,
    "usage-error": 2,
    "numerical-error": 3,
}


def plain(value: Any) -> Any:
    """Convert a value to JSON-ready data.

    Arrays and tuples become lists, numpy scalars become Python numbers,
    objects with ``to_dict`` are expanded and non-finite floats become strings.
    """
    if isinstance(value, Enum):
        return plain(value.value)
    if value is None or isinstance(value, bool | str):
        return value
    if isinstance(value, int):
        return int(value)
    if isinstance(value, float):
        return _finite_or_text(value)
    if hasattr(value, "tolist"):
        return plain(value.tolist())
    if hasattr(value, "to_dict"):
        return plain(value.to_dict())
    if isinstance(value, Mapping):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, Iterable):
        return [plain(v) for v in value]
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def _finite_or_text(value: float) -> float | str:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float(value)


def format_cell(value: Any) -> str:
    """CSV text of one cell: floats by ``repr``, vectors space-separated."""
    value = plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return " ".join(format_cell(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class Table:
    """A point table written as ``<name>.csv``."""

    name: str
    columns: tuple[str, ...]
    rows: list[Sequence[Any]] = field(default_factory=list)

    def add(self, *row: Any) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"Row of {len(row)} cells for {len(self.columns)} columns")
        self.rows.append(row)

    def to_dict(self) -> dict[str, Any]:
        return {"columns": list(self.columns), "rows": len(self.rows)}


def report_status(
    certificates: Iterable[Mapping[str, Any]],
    failed: Sequence[str] = (),
    outside_theorem: bool = False,
) -> str:
    """Status from certificates and failed audit ids.

    A failing certificate inside the theorem, or any failed audit id, is a
    ``fail``; otherwise any outside-theorem result makes the run
    ``outside-theorem``.
    """
    outside = outside_theorem
    for cert in certificates:
        outside = outside or bool(cert.get("outside_theorem"))
        if not cert.get("passed") and not cert.get("outside_theorem"):
            return "fail"
    if failed:
        return "fail"
    return "outside-theorem" if outside else "pass"


@dataclass
class Report:
    """Everything one run produces.

    Attributes:
        task: Task name
        status: ``pass``, ``fail``, ``outside-theorem``, ``usage-error`` or ``numerical-error``
        version: Tool version
        config: Echo of the effective configuration
        constants: Constant sheet of the system, when one was built
        certificates: Certificates in plain-data form
        sections: Task-specific results (audit records, probes, derivative bundles)
        tables: Point tables written as CSV
        failed: Ids of failed certificates or hypotheses
        error: Error message and context for usage and numerical errors
        timing: Wall-clock data, written to ``metadata.json`` only
    """

    task: str
    status: str
    version: str
    config: dict[str, Any] = field(default_factory=dict)
    constants: dict[str, Any] | None = None
    certificates: list[dict[str, Any]] = field(default_factory=list)
    sections: dict[str, Any] = field(default_factory=dict)
    tables: list[Table] = field(default_factory=list)
    failed: list[str] = field(default_factory=list)
    error: dict[str, Any] | None = None
    timing: dict[str, Any] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def to_dict(self) -> dict[str, Any]:
        """Plain-data form of ``report.json`` (timing excluded)."""
        return plain(
            {
                "tool": "nonauto-equiv",
                "version": self.version,
                "task": self.task,
                "status": self.status,
                "failed": list(self.failed),
                "error": self.error,
                "config": self.config,
                "constants": self.constants,
                "certificates": self.certificates,
                "sections": self.sections,
                "tables": {table.name: table.to_dict() for table in self.tables},
            }
        )


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ReportIOError(f"Cannot write {path}", context={"error": str(e)}) from e


def _dump(data: Any) -> str:
    return json.dumps(data, indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def write_table(table: Table, path: Path) -> None:
    """Write one table as CSV with a header row."""
    try:
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([format_cell(cell) for cell in row])
    except OSError as e:
        raise ReportIOError(f"Cannot write {path}", context={"error": str(e)}) from e


def write_report(
    report: Report, directory: str | Path, formats: Sequence[str] = ("json", "csv")
) -> list[Path]:
    """Write the report files and return their paths.

    Raises:
        ReportIOError: The directory cannot be created or a file cannot be written
    """
    root = Path(directory)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportIOError(f"Cannot create {root}", context={"error": str(e)}) from e
    written = []
    if "json" in formats:
        path = root / REPORT_FILE
        _write_text(path, _dump(report.to_dict()))
        written.append(path)
    if "csv" in formats:
        for table in report.tables:
            path = root / f"{table.name}.csv"
            write_table(table, path)
            written.append(path)
    if report.timing:
        path = root / METADATA_FILE
        _write_text(path, _dump(plain(report.timing)))
        written.append(path)
    return written


def read_report(directory: str | Path) -> dict[str, Any]:
    """Read ``report.json`` back.

    Raises:
        ReportIOError: The file is missing or not valid JSON
    """
    path = Path(directory) / REPORT_FILE
    try:
        data: dict[str, Any] = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ReportIOError(f"Cannot read {path}", context={"error": str(e)}) from e
    return data


def read_table(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read a CSV table back as its header and rows of cell text."""
    try:
        with Path(path).open(encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as e:
        raise ReportIOError(f"Cannot read {path}", context={"error": str(e)}) from e
    if not rows:
        return [], []
    return rows[0], rows[1:]
