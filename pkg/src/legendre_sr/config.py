"""JSON experiment configuration.

A config is one JSON object. Only ``task`` is required; every section has
defaults, so ``{"task": "verify"}`` is a complete config. Matrices are
nested row-major arrays. Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import json
import re
import typing
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .errors import ConfigError

TASKS = ("verify", "quadratic-sr", "linear-p-sr", "gpr-track", "ou-flow", "readout-task")

Matrix = list
Vector = list


@dataclass
class GprSection:
    a: Matrix = field(default_factory=lambda: [[0.9, 0.1], [-0.2, 0.8]])
    q: Matrix = field(default_factory=lambda: [[0.1, 0.0], [0.0, 0.1]])
    h: Matrix = field(default_factory=lambda: [[1.0, 0.0]])
    r: Matrix = field(default_factory=lambda: [[0.5]])
    x0: Vector = field(default_factory=lambda: [1.0, -1.0])
    m0: Optional[Vector] = None
    sigma0: Optional[Matrix] = None
    steps: int = 50


@dataclass
class OuSection:
    k: Matrix = field(default_factory=lambda: [[1.0, 0.3], [-0.2, 0.8]])
    mu: Vector = field(default_factory=lambda: [0.5, -0.5])
    diffusion: Matrix = field(default_factory=lambda: [[1.0, 0.2], [0.2, 0.5]])
    m0: Vector = field(default_factory=lambda: [2.0, 1.0])
    sigma0: Matrix = field(default_factory=lambda: [[0.5, 0.0], [0.0, 0.4]])
    horizon: float = 2.0
    steps: int = 200


@dataclass
class ReservoirSection:
    """Explicit matrices win; otherwise a random spec of size ``n`` x ``m`` is drawn."""

    n: int = 4
    m: int = 1
    dt: float = 1.0
    scale: float = 0.5
    m_energy: Optional[Matrix] = None
    c_couple: Optional[Matrix] = None
    s: Optional[Matrix] = None
    l: Optional[Matrix] = None
    cq: Optional[Matrix] = None
    cp: Optional[Matrix] = None


@dataclass
class InputsSection:
    steps: int = 200
    scale: float = 1.0
    values: Optional[Matrix] = None
    x0: Optional[Vector] = None


@dataclass
class ReadoutSection:
    steps: int = 800
    washout: int = 100
    train_fraction: float = 0.7
    reg: Any = field(default_factory=lambda: [1e-6, 1e-3, 1.0])
    window: int = 24


@dataclass
class ExperimentConfig:
    task: str
    seed: int = 42
    output: Optional[str] = None
    tolerances: dict = field(default_factory=dict)
    gpr: GprSection = field(default_factory=GprSection)
    ou: OuSection = field(default_factory=OuSection)
    reservoir: ReservoirSection = field(default_factory=ReservoirSection)
    inputs: InputsSection = field(default_factory=InputsSection)
    readout: ReadoutSection = field(default_factory=ReadoutSection)


def _line_of(text: str, key: str) -> Optional[int]:
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_value(value, hint, path: str):
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if value is None:
            return None
        return _check_value(value, args[0], path)
    if hint is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{path}: expected integer, got {value!r}")
        return value
    if hint is float:
        if not _is_number(value):
            raise ConfigError(f"{path}: expected number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected string, got {value!r}")
        return value
    if hint is dict:
        if not isinstance(value, dict) or not all(_is_number(v) for v in value.values()):
            raise ConfigError(f"{path}: expected an object of numbers")
        return {k: float(v) for k, v in value.items()}
    if hint is list:
        arr = value if isinstance(value, list) else None
        if arr is None:
            raise ConfigError(f"{path}: expected an array")
        try:
            np_arr = np.asarray(arr, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: array must be numeric and rectangular") from None
        if not np.all(np.isfinite(np_arr)):
            raise ConfigError(f"{path}: array has non-finite entries")
        return arr
    if dataclasses.is_dataclass(hint):
        return _build(hint, value, path)
    return value


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        prefix = f"{path}." if path else ""
        raise ConfigError(f"{prefix}{unknown[0]}: unknown key" + (
            f" (also {', '.join(unknown[1:])})" if len(unknown) > 1 else ""))
    kwargs = {}
    for name in names:
        if name in data:
            kwargs[name] = _check_value(data[name], hints[name], f"{path}.{name}" if path else name)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path or '<root>'}: {exc}") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config, raising ``ConfigError`` with location info."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        cfg = _build(ExperimentConfig, data, "")
        if cfg.task not in TASKS:
            raise ConfigError(f"task: must be one of {', '.join(TASKS)}, got {cfg.task!r}")
        _check_semantics(cfg)
    except ConfigError as exc:
        key = str(exc).split(":", 1)[0].split(".")[-1]
        line = _line_of(text, key)
        prefix = f"line {line}: " if line else ""
        raise ConfigError(prefix + str(exc)) from None
    return cfg


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _check_semantics(cfg: ExperimentConfig):
    ro = cfg.readout
    if cfg.task == "readout-task":
        if ro.washout >= ro.steps:
            raise ConfigError("readout.washout: must be smaller than readout.steps")
        if not 0.0 < ro.train_fraction < 1.0:
            raise ConfigError("readout.train_fraction: must lie in (0, 1)")
        regs = ro.reg if isinstance(ro.reg, list) else [ro.reg]
        if not regs or not all(_is_number(r) and r >= 0 for r in regs):
            raise ConfigError("readout.reg: must be a non-negative number or list of them")
        if ro.window < 1:
            raise ConfigError("readout.window: must be >= 1")
    if cfg.ou.horizon < 0:
        raise ConfigError("ou.horizon: must be non-negative")
    for name in ("steps",):
        for section in (cfg.gpr, cfg.ou, cfg.inputs, cfg.readout):
            if getattr(section, name) < 1:
                raise ConfigError(f"{name}: must be >= 1")
    for key, tol in cfg.tolerances.items():
        if tol < 0:
            raise ConfigError(f"tolerances.{key}: must be non-negative")
