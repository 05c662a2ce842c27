"""Run configuration for the command-line harness.

A config file is a JSON object::

    {
      "instance": "sparse-quad",          # registry name, or an inline spec
      "x0": [0.3, -0.2],                  # optional, instance default otherwise
      "y0": [0.0, 0.0],                   # optional, zeros otherwise
      "outer": {"theta": 0.5, ...},       # OuterConfig fields
      "inner": {"max_iters": 5000, ...},  # InnerConfig fields
      "output": {"path": "run.jsonl", "format": "jsonl"},
      "seed": 0,
      "vectors": false,
      "rates": {"mu": 1e-3, "mu0": 0.1, "theta_tol": 1e-10, "x0": [...], "y0": [...]},
      "diagnose": {"x": [...], "y": [...], "radius": 0.3, "samples": 4096, "beta": 0.0}
    }

Only ``instance`` is required. Inline instances are described in
:func:`compal.instances.inline_problem`.
"""

import json
from dataclasses import dataclass, field, fields
from typing import Optional

from .alm import OuterConfig
from .inner import InnerConfig
from .instances import InstanceSpec, resolve_instance

FORMATS = ("jsonl", "csv")
TOP_KEYS = {"instance", "x0", "y0", "outer", "inner", "output", "seed", "vectors", "rates", "diagnose"}
RATES_KEYS = {"mu", "mu0", "theta_tol", "x0", "y0"}
DIAGNOSE_KEYS = {"x", "y", "radius", "samples", "beta", "tol"}


class ConfigError(ValueError):
    """The configuration file is unreadable or invalid."""


@dataclass(frozen=True)
class RatesConfig:
    mu: float = 1e-3
    mu0: float = 0.1
    theta_tol: float = 1e-10
    x0: Optional[list] = None
    y0: Optional[list] = None


@dataclass(frozen=True)
class DiagnoseConfig:
    x: Optional[list] = None
    y: Optional[list] = None
    radius: float = 0.3
    samples: int = 4096
    beta: float = 0.0
    tol: float = 1e-9


@dataclass(frozen=True)
class RunConfig:
    instance: object
    x0: Optional[list] = None
    y0: Optional[list] = None
    outer: OuterConfig = field(default_factory=OuterConfig)
    inner: InnerConfig = field(default_factory=InnerConfig)
    output_path: Optional[str] = None
    output_format: str = "jsonl"
    seed: int = 0
    vectors: bool = False
    rates: RatesConfig = field(default_factory=RatesConfig)
    diagnose: DiagnoseConfig = field(default_factory=DiagnoseConfig)

    def resolve(self, purpose="solve") -> InstanceSpec:
        if purpose == "rates":
            x0 = self.rates.x0 if self.rates.x0 is not None else self.x0
            y0 = self.rates.y0 if self.rates.y0 is not None else self.y0
            # an explicit top-level x0 wins over the registered rates start
            return resolve_instance(self.instance, x0, y0, purpose="rates")
        return resolve_instance(self.instance, self.x0, self.y0)


def _build(cls, data, what):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{what} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


def _check_keys(data, allowed, what):
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(data, TOP_KEYS, "top-level")
    if "instance" not in data:
        raise ConfigError("config needs an 'instance'")
    instance = data["instance"]
    if isinstance(instance, dict) and set(instance) == {"name"}:
        instance = instance["name"]
    if not isinstance(instance, (str, dict)):
        raise ConfigError("instance must be a registry name or an inline spec")

    outer = dict(data.get("outer") or {})
    for key in ("eps_sequence",):
        if key in outer:
            outer[key] = tuple(outer[key])
    output = data.get("output") or {}
    _check_keys(output, {"path", "format"}, "output")
    fmt = output.get("format", "jsonl")
    if fmt not in FORMATS:
        raise ConfigError(f"output format must be one of {FORMATS}")
    rates = data.get("rates") or {}
    diagnose = data.get("diagnose") or {}
    _check_keys(rates, RATES_KEYS, "rates")
    _check_keys(diagnose, DIAGNOSE_KEYS, "diagnose")
    cfg = RunConfig(
        instance=instance,
        x0=data.get("x0"),
        y0=data.get("y0"),
        outer=_build(OuterConfig, outer, "outer"),
        inner=_build(InnerConfig, data.get("inner"), "inner"),
        output_path=output.get("path"),
        output_format=fmt,
        seed=int(data.get("seed", 0)),
        vectors=bool(data.get("vectors", False)),
        rates=_build(RatesConfig, rates, "rates"),
        diagnose=_build(DiagnoseConfig, diagnose, "diagnose"),
    )
    if not cfg.rates.mu > 0 or not cfg.rates.mu0 > 0:
        raise ConfigError("rates.mu and rates.mu0 must be positive")
    try:
        cfg.resolve()
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid instance: {exc}") from exc
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)
