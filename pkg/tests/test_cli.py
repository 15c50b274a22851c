"""End-to-end tests of the command-line front end."""

from pathlib import Path

import pytest

from nonauto_equiv.cli import run
from nonauto_equiv.renderers import read_report
from nonauto_equiv.renderers.report import read_table


def write_config(tmp_path: Path, body: str) -> str:
    path = tmp_path / "run.toml"
    path.write_text(body, encoding="utf-8")
    return str(path)


def invoke(tmp_path: Path, body: str, *extra: str) -> tuple[int, Path]:
    out = tmp_path / "out"
    code = run(["--config", write_config(tmp_path, body), "--out", str(out), *extra])
    return code, out


G1_AUDIT = """
[system]
gallery = "G1"

[task]
name = "audit"
radii = [10.0, 100.0, 1000.0]
samples = 50
picard_depth = 2
"""

X1_AUDIT = G1_AUDIT.replace('"G1"', '"X1"')

G1_MAP = """
[system]
gallery = "G1"

[task]
name = "map"
points = [[1.0], [2.0]]
times = [0.0, 1.0]
"""

G1_VERIFY = """
[system]
gallery = "G1"

[task]
name = "verify"
tau = [1.0]
t_grid = [0.0, 1.0, 2.0]
t = [1.0]
points = [[1.0], [-2.0]]
random_points = 2
"""

G1_SWEEP = """
[system]
gallery = "G1"

[task]
name = "sweep"
parameter = "gamma-scale"
values = [0.5, 1.0, 8.0]
tau = [1.0]
t_grid = [0.0, 1.0, 2.0]
t = [1.0]
points = [[1.0]]
random_points = 0
"""

BAD_EXPRESSION = """
[system]
n = 1
A = "-1"
f = "0.25*x1 +"

[task]
name = "map"
"""


class TestAuditRuns:
    """Test the audit task through the CLI."""

    def test_pass(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the scalar-linear audit passes and reports its margin."""
        code, out = invoke(tmp_path, G1_AUDIT)

        assert code == 0
        assert capsys.readouterr().out.strip() == "audit: pass"
        report = read_report(out)
        assert report["status"] == "pass"
        assert report["sections"]["audit"]["smallness_margin"] == pytest.approx(0.75, abs=1e-3)

    def test_smallness_violator(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the violator exits 1 and names the failed hypothesis."""
        code, out = invoke(tmp_path, X1_AUDIT)

        assert code == 1
        assert "smallness" in capsys.readouterr().out
        assert read_report(out)["failed"] == ["smallness"]


class TestMapRuns:
    """Test map evaluation and the smallness gate."""

    def test_table(self, tmp_path: Path) -> None:
        """Test every (map, t, point) combination is written."""
        code, out = invoke(tmp_path, G1_MAP, "-q")

        assert code == 0
        header, rows = read_table(out / "map.csv")
        assert header[:3] == ["map", "t", "point"]
        assert len(rows) == 8

    def test_gate(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the violator fails without the unsafe flag."""
        code, out = invoke(tmp_path, G1_MAP.replace('"G1"', '"X1"'))

        assert code == 1
        captured = capsys.readouterr()
        assert "SmallnessViolation" in captured.err
        assert read_report(out)["failed"] == ["smallness"]

    def test_unsafe(self, tmp_path: Path) -> None:
        """Test the unsafe flag runs the violator outside the theorem."""
        code, out = invoke(tmp_path, G1_MAP.replace('"G1"', '"X1"'), "--unsafe-skip-smallness")

        assert code == 1
        assert read_report(out)["status"] == "outside-theorem"


class TestVerifyRuns:
    """Test the verification pipeline."""

    def test_pass(self, tmp_path: Path) -> None:
        """Test the conjugacy and inverse certificates pass."""
        code, out = invoke(tmp_path, G1_VERIFY, "-q")

        assert code == 0
        ids = {cert["bound_id"] for cert in read_report(out)["certificates"]}
        assert ids == {"Conjugacy", "Inverse"}

    def test_sweep(self, tmp_path: Path) -> None:
        """Test one row per value with the unsafe row flagged."""
        code, out = invoke(tmp_path, G1_SWEEP, "-q")

        header, rows = read_table(out / "sweep.csv")
        assert header == [
            "gamma",
            "K_gamma_over_alpha",
            "conj_residual",
            "inv_residual",
            "value",
            "outside_theorem",
        ]
        assert len(rows) == 3
        assert [float(row[0]) for row in rows] == pytest.approx([0.125, 0.25, 2.0])
        flags = [row[header.index("outside_theorem")] for row in rows]
        assert flags == ["false", "false", "true"]
        assert code == 1


class TestErrors:
    """Test exit codes of usage errors."""

    def test_parse_error(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test a malformed expression is a usage error with its position."""
        code, out = invoke(tmp_path, BAD_EXPRESSION)

        assert code == 2
        err = capsys.readouterr().err
        assert "ParseError" in err
        assert "position=9" in err
        assert read_report(out)["status"] == "usage-error"

    @pytest.mark.parametrize(
        ("body", "key"),
        [
            (G1_MAP.replace("times = [0.0, 1.0]", 'times = ["soon"]'), "times"),
            (G1_MAP.replace("points = [[1.0], [2.0]]", 'points = [["a"]]'), "points"),
            (G1_SWEEP.replace("values = [0.5, 1.0, 8.0]", 'values = ["a"]'), "values"),
            (G1_VERIFY.replace("random_points = 2", 'random_points = "many"'), "random_points"),
            (G1_AUDIT.replace("samples = 50", 'samples = "fifty"'), "samples"),
        ],
    )
    def test_non_numeric_parameter(self, tmp_path: Path, body: str, key: str) -> None:
        """Test a non-numeric task parameter is a usage error naming its key."""
        code, out = invoke(tmp_path, body, "-q")

        assert code == 2
        report = read_report(out)
        assert report["status"] == "usage-error"
        assert report["error"]["type"] == "ValidationError"
        assert report["error"]["context"]["key"] == key

    def test_missing_config(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test an unreadable configuration."""
        assert run(["--config", str(tmp_path / "missing.toml")]) == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_bad_arguments(self) -> None:
        """Test argparse errors map to exit code 2."""
        assert run(["--task", "audit"]) == 2

    def test_unwritable_output(self, tmp_path: Path) -> None:
        """Test an output path below a file."""
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")
        config = write_config(tmp_path, G1_MAP)

        assert run(["--config", config, "--out", str(blocker / "out"), "-q"]) == 2
