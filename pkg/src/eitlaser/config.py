"""Scenario configuration: a flat ``key = value`` text format.

Example::

    # dimensionless mode: delta = 1
    r = 0.5
    ratio = 50
    t_start = 0.45
    t_end = 0.55
    n_points = 2001
    ordering = both
    branch = plus
    measures = T, P, T_A, n
    oracle = off

Times are in units of t0.  Physical units are used instead when ``g``,
``omega12`` and ``omega23`` are all given (and ``r``/``ratio`` are not).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .analytic import SystemParams
from .errors import ConfigError

MEASURES = ("T", "P", "T_A", "n", "q", "wigner")
POINTS_PER_PERIOD = 2000


@dataclass(frozen=True)
class ScenarioConfig:
    r: Optional[float] = None
    ratio: Optional[float] = None
    g: Optional[float] = None
    omega12: Optional[float] = None
    omega23: Optional[float] = None
    t_start: float = 0.0
    t_end: float = 1.0
    n_points: Optional[int] = None
    ordering: str = "both"
    branch: str = "both"
    measures: tuple[str, ...] = ("T", "P", "T_A", "n")
    oracle: bool = False
    oracle_steps: Optional[int] = None
    dim: Optional[int] = None
    output_path: Optional[str] = None

    def __post_init__(self):
        validate(self)

    @property
    def physical(self) -> bool:
        return self.g is not None

    def params(self) -> SystemParams:
        if self.physical:
            return SystemParams(self.g, self.omega12, self.omega23)
        return SystemParams.dimensionless(self.r, self.ratio)

    @property
    def points(self) -> int:
        if self.n_points is not None:
            return self.n_points
        return max(2, round(POINTS_PER_PERIOD * (self.t_end - self.t_start)) + 1)

    @property
    def orderings(self) -> tuple[str, ...]:
        return ("with", "without") if self.ordering == "both" else (self.ordering,)

    @property
    def branches(self) -> tuple[str, ...]:
        return ("plus", "minus") if self.branch == "both" else (self.branch,)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_FLOAT = {"r", "ratio", "g", "omega12", "omega23", "t_start", "t_end"}
_INT = {"n_points", "oracle_steps", "dim"}
_CHOICES = {"ordering": ("with", "without", "both"), "branch": ("plus", "minus", "both")}
_BOOL = {"on": True, "true": True, "yes": True, "1": True,
         "off": False, "false": False, "no": False, "0": False}


def validate(cfg: ScenarioConfig) -> None:
    physical = [cfg.g, cfg.omega12, cfg.omega23]
    dimless = [cfg.r, cfg.ratio]
    if any(v is not None for v in physical):
        if any(v is None for v in physical):
            raise ConfigError("physical mode needs all of g, omega12, omega23")
        if any(v is not None for v in dimless):
            raise ConfigError("give either (r, ratio) or (g, omega12, omega23), not both")
        try:
            SystemParams(cfg.g, cfg.omega12, cfg.omega23)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        if cfg.r is None or cfg.ratio is None:
            raise ConfigError("dimensionless mode needs both r and ratio")
        if not (math.isfinite(cfg.ratio) and cfg.ratio > 0):
            raise ConfigError(f"field 'ratio': must be > 0, got {cfg.ratio}")
        if not (math.isfinite(cfg.r) and cfg.r >= 0):
            raise ConfigError(f"field 'r': must be >= 0, got {cfg.r}")
    if not (0 <= cfg.t_start < cfg.t_end):
        raise ConfigError(f"need 0 <= t_start < t_end, got t_start={cfg.t_start}, t_end={cfg.t_end}")
    if cfg.n_points is not None and cfg.n_points < 2:
        raise ConfigError(f"field 'n_points': must be >= 2, got {cfg.n_points}")
    for key, allowed in _CHOICES.items():
        if getattr(cfg, key) not in allowed:
            raise ConfigError(f"field '{key}': expected one of {allowed}, got {getattr(cfg, key)!r}")
    bad = [m for m in cfg.measures if m not in MEASURES]
    if bad:
        raise ConfigError(f"field 'measures': unknown {bad}; allowed {MEASURES}")
    if cfg.dim is not None and cfg.dim < 2:
        raise ConfigError(f"field 'dim': must be >= 2, got {cfg.dim}")
    if cfg.oracle_steps is not None and cfg.oracle_steps < 1:
        raise ConfigError(f"field 'oracle_steps': must be >= 1, got {cfg.oracle_steps}")


def _convert(key: str, raw: str, where: str):
    try:
        if key in _FLOAT:
            return float(raw)
        if key in _INT:
            return int(raw)
    except ValueError:
        raise ConfigError(f"{where}: field '{key}' expects a number, got {raw!r}") from None
    if key == "oracle":
        if raw.lower() not in _BOOL:
            raise ConfigError(f"{where}: field 'oracle' expects on/off, got {raw!r}")
        return _BOOL[raw.lower()]
    if key == "measures":
        return tuple(m.strip() for m in raw.split(",") if m.strip())
    return raw


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    fields = {f.name for f in dataclasses.fields(ScenarioConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ConfigError(f"{where}: unknown field {key!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate field {key!r}")
        values[key] = _convert(key, raw, where)
    return ScenarioConfig(**values)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def serialize_config(cfg: ScenarioConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if f.name == "measures":
            v = ", ".join(v)
        elif f.name == "oracle":
            v = "on" if v else "off"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
