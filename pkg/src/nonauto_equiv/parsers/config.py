"""Parser for run configuration files.

A run configuration is a TOML document with three sections::

    [system]
    gallery = "G1"            # or: n, horizon, A, f and optionally [system.constants]

    [task]
    name = "audit"            # audit, map, verify, jacobian, hessian, bounds, sweep
    seed = 0                  # plus task parameters

    [output]
    directory = "out"
    formats = ["json", "csv"]

DSL strings are kept as text here; they are parsed when the task builds the
system, so that a malformed expression reports its own position.
"""

import tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from ..exceptions import ConfigError

TASK_NAMES = ("audit", "map", "verify", "jacobian", "hessian", "bounds", "sweep")
FORMATS = ("json", "csv")
SWEEP_PARAMETERS = ("gamma-scale", "A-scale", "horizon")
CONSTANT_NAMES = ("K", "alpha", "M", "gamma", "mu")

_SECTIONS = {"system", "task", "output"}
_SYSTEM_KEYS = {"gallery", "n", "horizon", "A", "f", "constants"}
_OUTPUT_KEYS = {"directory", "formats"}

# Parameters every task accepts
_COMMON_PARAMS = {
    "name",
    "seed",
    "workers",
    "tol_conj",
    "tol_inv",
    "tol_picard",
    "j_max",
    "picard_step",
}
_TASK_PARAMS: dict[str, set[str]] = {
    "audit": {"radii", "samples", "radius", "picard_depth"},
    "map": {"points", "times", "method"},
    "verify": {"tau", "xi", "t_grid", "t", "points", "random_points", "radius"},
    "jacobian": {"t", "points", "maps"},
    "hessian": {"t", "points", "maps"},
    "bounds": {
        "pairs",
        "point_pairs",
        "tau",
        "xi",
        "xi_bar",
        "epsilon",
        "t_grid",
        "certificates",
    },
    "sweep": {
        "parameter",
        "values",
        "tau",
        "xi",
        "t_grid",
        "t",
        "points",
        "random_points",
        "radius",
    },
}
_POSITIVE_PARAMS = ("tol_conj", "tol_inv", "tol_picard", "picard_step", "epsilon")


@dataclass(frozen=True)
class SystemSpec:
    """The ``[system]`` section.

    Attributes:
        gallery: Gallery id, or ``None`` for an inline system
        n: Dimension of an inline system
        horizon: Truncation horizon T
        A: Rows of DSL strings for the entries of A(t)
        f: DSL strings, one per component of f(t, x)
        constants: Declared constants (any subset of K, alpha, M, gamma, mu)
    """

    gallery: str | None = None
    n: int | None = None
    horizon: float = 5.0
    A: tuple[tuple[str, ...], ...] | None = None
    f: tuple[str, ...] | None = None
    constants: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "gallery": self.gallery,
            "n": self.n,
            "horizon": self.horizon,
            "A": None if self.A is None else [list(row) for row in self.A],
            "f": None if self.f is None else list(self.f),
            "constants": dict(self.constants),
        }


@dataclass(frozen=True)
class TaskSpec:
    """The ``[task]`` section: a task name and its parameters."""

    name: str
    params: dict[str, Any] = field(default_factory=dict)

    def get(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)


@dataclass(frozen=True)
class OutputSpec:
    """The ``[output]`` section."""

    directory: Path = Path("out")
    formats: tuple[str, ...] = FORMATS


@dataclass(frozen=True)
class RunConfig:
    """One run: exactly one system, one task and one output location.

    Attributes:
        seed: Seed of every sampled grid or random point set
        tolerance: Override of the conjugacy and inverse tolerances
        unsafe: Skip the smallness gate (results are marked outside the theorem)
    """

    system: SystemSpec
    task: TaskSpec
    output: OutputSpec = field(default_factory=OutputSpec)
    seed: int = 0
    tolerance: float | None = None
    unsafe: bool = False

    def with_overrides(
        self,
        *,
        task: str | None = None,
        out: Path | str | None = None,
        tol: float | None = None,
        unsafe: bool | None = None,
        seed: int | None = None,
    ) -> "RunConfig":
        """Apply command-line overrides.

        Raises:
            ConfigError: Unknown task name or non-positive tolerance
        """
        config = self
        if task is not None:
            _check_task_name(task)
            params = {k: v for k, v in config.task.params.items() if k in _allowed(task)}
            config = replace(config, task=TaskSpec(task, params))
        if out is not None:
            config = replace(config, output=replace(config.output, directory=Path(out)))
        if tol is not None:
            if not tol > 0:
                raise ConfigError("--tol must be positive", context={"tol": tol})
            config = replace(config, tolerance=float(tol))
        if unsafe is not None:
            config = replace(config, unsafe=unsafe)
        if seed is not None:
            config = replace(config, seed=seed)
        return config

    def to_dict(self) -> dict[str, Any]:
        """Echo of the effective configuration for the report."""
        return {
            "system": self.system.to_dict(),
            "task": {"name": self.task.name, **self.task.params},
            "output": {
                "directory": str(self.output.directory),
                "formats": list(self.output.formats),
            },
            "seed": self.seed,
            "tolerance": self.tolerance,
            "unsafe": self.unsafe,
        }


def _allowed(task: str) -> set[str]:
    return _COMMON_PARAMS | _TASK_PARAMS[task]


def _check_task_name(name: Any) -> None:
    if name not in TASK_NAMES:
        raise ConfigError(
            f"Unknown task {name!r}", context={"task": name, "known": list(TASK_NAMES)}
        )


def _check_keys(section: str, table: dict[str, Any], allowed: set[str]) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(
            f"Unknown key {unknown[0]!r} in [{section}]",
            context={"section": section, "unknown": unknown, "allowed": sorted(allowed)},
        )


def _table(document: dict[str, Any], name: str) -> dict[str, Any]:
    value = document.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table", context={"section": name})
    return value


def _strings(value: Any, what: str) -> tuple[str, ...]:
    if isinstance(value, str):
        return (value,)
    if isinstance(value, list) and all(isinstance(v, str) for v in value):
        return tuple(value)
    raise ConfigError(f"{what} must be a DSL string or a list of them", context={"key": what})


def _parse_system(table: dict[str, Any]) -> SystemSpec:
    _check_keys("system", table, _SYSTEM_KEYS)
    horizon = table.get("horizon", 5.0)
    if not isinstance(horizon, int | float) or isinstance(horizon, bool) or not horizon > 0:
        raise ConfigError("horizon must be a positive number", context={"horizon": horizon})

    constants_table = table.get("constants", {})
    if not isinstance(constants_table, dict):
        raise ConfigError("[system.constants] must be a table")
    _check_keys("system.constants", constants_table, set(CONSTANT_NAMES))
    constants: dict[str, float] = {}
    for key, value in constants_table.items():
        if not isinstance(value, int | float) or isinstance(value, bool) or value < 0:
            raise ConfigError(
                f"Constant {key} must be a nonnegative number", context={key: value}
            )
        constants[key] = float(value)

    gallery = table.get("gallery")
    if gallery is not None:
        inline = sorted({"n", "A", "f"} & set(table))
        if inline:
            raise ConfigError(
                "A gallery system cannot also define an inline system",
                context={"gallery": gallery, "inline_keys": inline},
            )
        if not isinstance(gallery, str):
            raise ConfigError("gallery must be a string", context={"gallery": gallery})
        return SystemSpec(gallery=gallery, horizon=float(horizon), constants=constants)

    missing = [key for key in ("n", "A", "f") if key not in table]
    if missing:
        raise ConfigError(
            "An inline system needs n, A and f", context={"missing": missing}
        )
    n = table["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError("n must be a positive integer", context={"n": n})
    raw_A = table["A"]
    if isinstance(raw_A, str):
        A = ((raw_A,),)
    elif isinstance(raw_A, list) and all(isinstance(row, list) for row in raw_A):
        A = tuple(_strings(row, "A") for row in raw_A)
    else:
        A = (_strings(raw_A, "A"),)
    return SystemSpec(
        gallery=None,
        n=n,
        horizon=float(horizon),
        A=A,
        f=_strings(table["f"], "f"),
        constants=constants,
    )


def _parse_task(table: dict[str, Any]) -> TaskSpec:
    if "name" not in table:
        raise ConfigError("[task] needs a name", context={"known": list(TASK_NAMES)})
    name = table["name"]
    _check_task_name(name)
    _check_keys("task", table, _allowed(name))
    for key in _POSITIVE_PARAMS:
        if key in table and not (isinstance(table[key], int | float) and table[key] > 0):
            raise ConfigError(f"{key} must be positive", context={key: table[key]})
    if name == "sweep":
        parameter = table.get("parameter", "gamma-scale")
        if parameter not in SWEEP_PARAMETERS:
            raise ConfigError(
                f"Unknown sweep parameter {parameter!r}",
                context={"parameter": parameter, "known": list(SWEEP_PARAMETERS)},
            )
        if not table.get("values"):
            raise ConfigError("A sweep needs a nonempty list of values")
    params = {key: value for key, value in table.items() if key != "name"}
    return TaskSpec(name, params)


def _parse_output(table: dict[str, Any]) -> OutputSpec:
    _check_keys("output", table, _OUTPUT_KEYS)
    formats = tuple(table.get("formats", FORMATS))
    unknown = [fmt for fmt in formats if fmt not in FORMATS]
    if unknown or not formats:
        raise ConfigError(
            "formats must be a nonempty subset of json, csv", context={"formats": list(formats)}
        )
    return OutputSpec(Path(table.get("directory", "out")), formats)


def parse_config(text: str) -> RunConfig:
    """Parse run configuration text.

    Raises:
        ConfigError: Malformed TOML, unknown sections or keys, invalid values

    Example:
        >>> config = parse_config('[system]\\ngallery = "G1"\\n[task]\\nname = "audit"\\n')
        >>> config.system.gallery, config.task.name
        ('G1', 'audit')
    """
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Malformed configuration: {e}") from e
    _check_keys("top level", document, _SECTIONS)
    if "system" not in document or "task" not in document:
        raise ConfigError(
            "A configuration needs exactly one [system] and one [task] section",
            context={"sections": sorted(document)},
        )
    task = _parse_task(_table(document, "task"))
    seed = task.params.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer", context={"seed": seed})
    return RunConfig(
        system=_parse_system(_table(document, "system")),
        task=task,
        output=_parse_output(_table(document, "output")),
        seed=seed,
    )


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a run configuration file.

    Raises:
        ConfigError: The file cannot be read or does not parse
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read configuration {path}", context={"error": str(e)}) from e
    return parse_config(text)
