"""Run and sweep configuration, parsed from ``key = value`` text or JSON.

Rates are plain numbers in the units of ``gamma`` (default 1), so with the
default every rate reads as a multiple of the loss. Numeric values may use
``pi`` and + - * / (``theta = pi/2``).
"""
from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import ParseError, UnknownKey, ValidationError
from .model import SystemParams, validate
from .moments import InitialCondition

# config key -> SystemParams field
PARAM_KEYS = {
    "gamma": "gamma",
    "Gamma": "big_gamma",
    "g": "g",
    "theta": "theta",
    "phi": "phi",
    "Omega": "omega",
    "omega_delta": "omega_delta",
}
RUN_KEYS = {"init", "t_end", "dt", "method", "cutoff", "out", "format"}
SWEEP_KEYS = {"axis1", "axis2"}
SWEEPABLE = ("g", "Gamma", "theta", "phi", "theta_minus_phi", "Omega", "omega_delta")
METHODS = ("rk4", "exact")
FORMATS = ("csv", "json")
MAX_STEPS = 1e7


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams = SystemParams()
    init: InitialCondition = InitialCondition.single_excitation_first()
    t_end: float = 20.0
    dt: float = 1e-3
    method: str = "rk4"
    cutoff: int = 6
    out: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        validate(self.params)
        if self.t_end <= 0 or self.dt <= 0:
            raise ValidationError("t_end and dt must be positive")
        if self.t_end / self.dt > MAX_STEPS:
            raise ValidationError(f"t_end/dt = {self.t_end / self.dt:.3g} exceeds {MAX_STEPS:.0e}")
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}")
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {FORMATS}")
        if self.cutoff < 1:
            raise ValidationError("cutoff must be >= 1")


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    count: int

    def __post_init__(self):
        if self.name not in SWEEPABLE:
            raise ValidationError(f"cannot sweep {self.name!r}; choose from {SWEEPABLE}")
        if self.count < 2:
            raise ValidationError("axis count must be >= 2")
        if not self.min < self.max:
            raise ValidationError("axis min must be < max")

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


def apply_axis(params: SystemParams, name: str, value: float) -> SystemParams:
    if name == "theta_minus_phi":
        return params.replace(theta=params.phi + value)
    return params.replace(**{PARAM_KEYS[name]: value})


@dataclass(frozen=True)
class SweepSpec:
    axis1: Axis
    axis2: Optional[Axis] = None
    base: SystemParams = SystemParams()
    run: RunConfig = field(default_factory=RunConfig)

    def points(self) -> list[tuple[float, Optional[float], SystemParams]]:
        """Grid points in row-major order (axis1 outer)."""
        pts = []
        for v1 in self.axis1.values():
            p1 = apply_axis(self.base, self.axis1.name, float(v1))
            if self.axis2 is None:
                pts.append((float(v1), None, p1))
                continue
            for v2 in self.axis2.values():
                pts.append((float(v1), float(v2), apply_axis(p1, self.axis2.name, float(v2))))
        return pts


_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def eval_number(text) -> float:
    """Evaluate a number or a small arithmetic expression in ``pi``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    if not isinstance(text, str):
        raise ParseError(f"expected a number, got {text!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        raise ParseError(f"unsupported expression {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ParseError(f"malformed number {text!r}") from exc


def _parse_axis(value) -> Axis:
    if isinstance(value, dict):
        try:
            name, lo, hi, count = value["name"], value["min"], value["max"], value["count"]
        except KeyError as exc:
            raise ParseError(f"axis needs name, min, max, count; missing {exc}") from None
    else:
        parts = value if isinstance(value, list) else [p.strip() for p in str(value).split(",")]
        if len(parts) != 4:
            raise ParseError(f"axis must be 'name, min, max, count', got {value!r}")
        name, lo, hi, count = parts
    count_f = eval_number(count)
    if count_f != int(count_f):
        raise ParseError(f"axis count must be an integer, got {count!r}")
    return Axis(str(name).strip(), eval_number(lo), eval_number(hi), int(count_f))


def _read_pairs(text: str) -> dict:
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError("JSON config must be an object")
        return data
    data = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        data[key.strip()] = value.strip()
    return data


def parse_config(text: str) -> Union[RunConfig, SweepSpec]:
    """Parse and validate a configuration; a SweepSpec is returned when ``axis1`` is set."""
    data = _read_pairs(text)
    unknown = set(data) - set(PARAM_KEYS) - RUN_KEYS - SWEEP_KEYS
    if unknown:
        raise UnknownKey(f"unknown key(s): {', '.join(sorted(unknown))}")

    params = SystemParams(**{PARAM_KEYS[k]: eval_number(v) for k, v in data.items() if k in PARAM_KEYS})
    validate(params)

    run_kw = {}
    if "init" in data:
        try:
            run_kw["init"] = InitialCondition(str(data["init"]).strip())
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
    for key in ("t_end", "dt"):
        if key in data:
            run_kw[key] = eval_number(data[key])
    if "cutoff" in data:
        run_kw["cutoff"] = int(eval_number(data["cutoff"]))
    for key in ("method", "out", "format"):
        if key in data:
            run_kw[key] = str(data[key]).strip()
    run = RunConfig(params=params, **run_kw)

    if "axis1" in data:
        axis2 = _parse_axis(data["axis2"]) if "axis2" in data else None
        return SweepSpec(_parse_axis(data["axis1"]), axis2, params, run)
    if "axis2" in data:
        raise ParseError("axis2 given without axis1")
    return run
