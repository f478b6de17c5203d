"""Run configuration: flat ``section.key = value`` text with ``#`` comments.

Sections are ``params``, ``grid``, ``boundary``, ``ic``, ``stepper``, ``run``
and ``outputs``.  Every key has a default, so empty text is a valid config.
Parsing collects all problems before raising :class:`ConfigError`.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields
from typing import Optional

from .constitutive import THEOREM_B_THRESHOLD, PhysParams
from .errors import ConfigError, InvalidParameters
from .grid_state import FAMILIES, BoundaryConditions, Grid
from .solver import StepperConfig


@dataclass(frozen=True)
class GridSpec:
    n_cells: int = 512
    dx: float = 50.0 / 512

    def build(self) -> Grid:
        return Grid(n_cells=self.n_cells, dx=self.dx)


@dataclass(frozen=True)
class ICSpec:
    family: str = "gaussian-bump"
    amplitude: float = 0.1
    width: float = 1.0


@dataclass(frozen=True)
class RunSpec:
    t_end: float = 10.0
    sample_stride: int = 10
    seed: int = 0


@dataclass(frozen=True)
class OutputSpec:
    timeseries: str = "timeseries.csv"
    jsonl: bool = False
    snapshot_times: tuple = ()
    snapshot_prefix: str = "snapshot"
    audit: bool = False
    audit_k: int = 1
    plots: bool = True


@dataclass(frozen=True)
class RunConfig:
    params: PhysParams = field(default_factory=PhysParams)
    grid: GridSpec = field(default_factory=GridSpec)
    boundary: BoundaryConditions = field(default_factory=BoundaryConditions)
    ic: ICSpec = field(default_factory=ICSpec)
    stepper: StepperConfig = field(default_factory=StepperConfig)
    run: RunSpec = field(default_factory=RunSpec)
    outputs: OutputSpec = field(default_factory=OutputSpec)

    @property
    def theorem_regime(self) -> bool:
        return self.params.theorem_regime

    @property
    def notices(self) -> list[str]:
        out = []
        if not self.theorem_regime:
            out.append(f"b_exp={self.params.b_exp} is outside the theorem regime (needs b > {THEOREM_B_THRESHOLD})")
        if self.params.outside_theorem_regime:
            out.append(f"beta={self.params.beta} is outside [0, b+9)")
        return out

    def config_hash(self) -> str:
        return hashlib.sha256(serialize(self).encode()).hexdigest()[:16]


SECTIONS = {
    "params": PhysParams,
    "grid": GridSpec,
    "boundary": BoundaryConditions,
    "ic": ICSpec,
    "stepper": StepperConfig,
    "run": RunSpec,
    "outputs": OutputSpec,
}


def _kind(default):
    if isinstance(default, bool):
        return "bool"
    if isinstance(default, int):
        return "int"
    if isinstance(default, float):
        return "float"
    if isinstance(default, tuple):
        return "floats"
    if default is None:
        return "optional float"
    return "str"


def _convert(raw: str, kind: str):
    text = raw.strip()
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind == "int":
        val = float(text)
        if not val.is_integer():
            raise ValueError(f"expected an integer, got {text!r}")
        return int(val)
    if kind == "float":
        val = float(text)
        if not math.isfinite(val):
            raise ValueError(f"expected a finite number, got {text!r}")
        return val
    if kind == "optional float":
        if text.lower() in ("", "none", "null"):
            return None
        return _convert(text, "float")
    if kind == "floats":
        parts = [q for q in text.replace("[", "").replace("]", "").split(",") if q.strip()]
        return tuple(_convert(q, "float") for q in parts)
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    return text


def _defaults(cls):
    inst = cls()
    return {f.name: getattr(inst, f.name) for f in fields(cls)}


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem."""
    errors: list[str] = []
    given: dict[str, dict] = {name: {} for name in SECTIONS}
    x_max = None
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            errors.append(f"line {lineno}: expected 'section.key = value'")
            continue
        key, raw = (q.strip() for q in body.split("=", 1))
        if "." not in key:
            errors.append(f"line {lineno}: key {key!r} has no section")
            continue
        section, name = key.split(".", 1)
        if section not in SECTIONS:
            errors.append(f"line {lineno}: unknown section {section!r}")
            continue
        if section == "grid" and name == "x_max":
            try:
                x_max = _convert(raw, "float")
            except ValueError as exc:
                errors.append(f"line {lineno}: grid.x_max: {exc}")
            continue
        defaults = _defaults(SECTIONS[section])
        if name not in defaults:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if name in given[section]:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        try:
            given[section][name] = _convert(raw, _kind(defaults[name]))
        except ValueError as exc:
            errors.append(f"line {lineno}: {key}: type mismatch, {exc}")

    built = {}
    for section, cls in SECTIONS.items():
        values = {**_defaults(cls), **given[section]}
        if section == "grid" and x_max is not None:
            if "dx" in given["grid"]:
                errors.append("grid: give either dx or x_max, not both")
            elif not x_max > 0:
                errors.append("grid: x_max must be > 0")
            else:
                values["dx"] = x_max / values["n_cells"]
        problems = _check(section, values)
        if problems:
            errors.extend(f"{section}: {q}" for q in problems)
            continue
        try:
            built[section] = cls(**values)
        except (InvalidParameters, ValueError) as exc:
            errors.extend(f"{section}: {q}" for q in str(exc).split("; "))
    if errors:
        raise ConfigError(errors)
    return RunConfig(**built)


def _check(section: str, values: dict) -> list[str]:
    """Rules that the section classes would otherwise report one at a time."""
    out = []
    if section == "params":
        try:
            probe = object.__new__(PhysParams)
            for k, v in values.items():
                object.__setattr__(probe, k, v)
            out.extend(PhysParams.violations(probe))
        except (TypeError, ValueError) as exc:
            out.append(str(exc))
    elif section == "stepper":
        probe = object.__new__(StepperConfig)
        for k, v in values.items():
            object.__setattr__(probe, k, v)
        out.extend(StepperConfig.violations(probe))
    elif section == "grid":
        if values["n_cells"] < 8:
            out.append("n_cells must be >= 8")
        if not values["dx"] > 0:
            out.append("dx must be > 0")
    elif section == "boundary":
        if values["outer"] not in ("dirichlet", "closed"):
            out.append("outer must be 'dirichlet' or 'closed'")
    elif section == "ic":
        if values["family"] not in FAMILIES:
            out.append(f"family must be one of {FAMILIES}")
        if not values["width"] > 0:
            out.append("width must be > 0")
        if not values["amplitude"] >= 0:
            out.append("amplitude must be >= 0")
    elif section == "run":
        if not values["t_end"] > 0:
            out.append("rule t_end>0 violated")
        if values["sample_stride"] < 1:
            out.append("sample_stride must be >= 1")
    elif section == "outputs":
        if not values["timeseries"]:
            out.append("timeseries path must not be empty")
        if any(t < 0 for t in values["snapshot_times"]):
            out.append("snapshot_times must be >= 0")
        if values["audit_k"] < 0:
            out.append("audit_k must be >= 0")
    return out


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(q)) for q in value)
    return str(value)


def serialize(cfg: RunConfig) -> str:
    """Canonical text with every key spelled out; ``parse_config`` inverts it."""
    lines = []
    for section in SECTIONS:
        obj = getattr(cfg, section)
        for f in fields(obj):
            lines.append(f"{section}.{f.name} = {_format(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def with_override(cfg: RunConfig, key: str, raw: str) -> RunConfig:
    """Copy of ``cfg`` with one ``section.key`` replaced, validated like a file."""
    return parse_config(_replace_line(cfg, key, raw))


def _replace_line(cfg: RunConfig, key: str, raw: str) -> str:
    out = []
    found = False
    for line in serialize(cfg).splitlines():
        if line.split("=", 1)[0].strip() == key:
            out.append(f"{key} = {raw}")
            found = True
        else:
            out.append(line)
    if key == "grid.x_max":
        out = [q for q in out if not q.startswith("grid.dx")]
        out.append(f"{key} = {raw}")
        found = True
    if not found:
        raise ConfigError([f"unknown key {key!r}"])
    return "\n".join(out) + "\n"


def load_config(path: Optional[str]) -> RunConfig:
    """Read a config file; ``None`` or ``"default"`` gives the defaults."""
    if path is None or path == "default":
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


__all__ = [
    "GridSpec", "ICSpec", "RunSpec", "OutputSpec", "RunConfig",
    "parse_config", "serialize", "with_override", "load_config",
]
