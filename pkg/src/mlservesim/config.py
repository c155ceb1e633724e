"""Run configuration and its line-based ``key = value`` file format.

Blank lines and ``#`` comments are ignored, lists are comma-separated.
Every key is optional except ``scenario``; unknown or repeated keys are
errors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .domain import MASK64, LatencyModelParams, ModelError

DEFAULT_USERS = (100, 500, 1000, 2000, 5000, 10000)


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(ConfigError):
    pass


class ScenarioName(str, enum.Enum):
    MONOLITH = "monolith"
    MICROSERVICE = "microservice"
    THREE_LAYER = "three_layer"
    ANALYTIC_SWEEP = "analytic_sweep"


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioName
    params: LatencyModelParams = field(default_factory=LatencyModelParams)
    users: tuple[int, ...] = DEFAULT_USERS
    trials: int = 50
    shards: int = 10
    seed: int = 1
    out: Path = Path("out")
    dim: int = 16
    gateway_time: float = 0.0
    ranking_time: float = 0.5
    link_latency: float = 0.0
    sidecar: bool = False
    sidecar_overhead: float = 0.0
    tolerance: float = 0.02

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "scenario", ScenarioName(self.scenario))
        except ValueError:
            raise ValidationError(f"unknown scenario {self.scenario!r}") from None
        if not self.users:
            raise ValidationError("users must not be empty")
        if any(n < 1 for n in self.users):
            raise ValidationError(f"user counts must be >= 1: {self.users}")
        if any(b <= a for a, b in zip(self.users, self.users[1:])):
            raise ValidationError(f"user counts must be strictly increasing: {self.users}")
        for name in ("trials", "shards", "dim"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if not 0 <= self.seed <= MASK64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        for name in ("gateway_time", "ranking_time", "link_latency", "sidecar_overhead", "tolerance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be finite and >= 0")

    def with_overrides(self, **changes) -> RunConfig:
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    def zero_noise(self) -> RunConfig:
        return replace(self, params=self.params.noiseless())

    def to_text(self) -> str:
        """Fully resolved config in the file format; parses back to ``self``."""
        p = self.params
        rows = [
            ("scenario", self.scenario.value),
            ("t_comp", _fmt(p.t_comp)),
            ("alpha", _fmt(p.alpha)),
            ("t_local", _fmt(p.t_local)),
            ("sigma_mono", _fmt(p.sigma_mono)),
            ("sigma_micro", _fmt(p.sigma_micro)),
            ("users", ",".join(str(n) for n in self.users)),
            ("trials", str(self.trials)),
            ("shards", str(self.shards)),
            ("seed", str(self.seed)),
            ("out", str(self.out)),
            ("dim", str(self.dim)),
            ("gateway_time", _fmt(self.gateway_time)),
            ("ranking_time", _fmt(self.ranking_time)),
            ("link_latency", _fmt(self.link_latency)),
            ("sidecar", "true" if self.sidecar else "false"),
            ("sidecar_overhead", _fmt(self.sidecar_overhead)),
            ("tolerance", _fmt(self.tolerance)),
        ]
        return "".join(f"{k} = {v}\n" for k, v in rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def _float(raw: str) -> float:
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError(f"not a finite number: {raw!r}")
    return value


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(part) for part in raw.split(","))


PARAM_KEYS = {"t_comp", "alpha", "t_local", "sigma_mono", "sigma_micro"}

_CONVERTERS = {
    "scenario": str,
    **{k: _float for k in PARAM_KEYS},
    "users": _int_list,
    "trials": int,
    "shards": int,
    "seed": int,
    "out": Path,
    "dim": int,
    "gateway_time": _float,
    "ranking_time": _float,
    "link_latency": _float,
    "sidecar": _bool,
    "sidecar_overhead": _float,
    "tolerance": _float,
}


def parse_config(text: str) -> RunConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParseError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        if key not in _CONVERTERS:
            raise ParseError(lineno, f"unknown key {key!r}")
        if key in values:
            raise ParseError(lineno, f"duplicate key {key!r}")
        if not value:
            raise ParseError(lineno, f"empty value for {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ParseError(lineno, f"bad value for {key!r}: {exc}") from None
    if "scenario" not in values:
        raise ValidationError("missing required key 'scenario'")
    param_values = {k: values.pop(k) for k in list(values) if k in PARAM_KEYS}
    try:
        params = LatencyModelParams(**{**asdict(LatencyModelParams()), **param_values})
        return RunConfig(params=params, **values)
    except ModelError as exc:
        raise ValidationError(str(exc)) from exc


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
