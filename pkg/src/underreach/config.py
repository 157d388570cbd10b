"""Strict parsing of run configuration files."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from underreach.engine import EngineConfig, Reduction, SystemSpec
from underreach.errors import ConfigError
from underreach.formats import parse_zonotope
from underreach.zonotope import Zonotope

FORMATS = ("json", "csv", "svg")


@dataclass
class Outputs:
    dir: str = "out"
    formats: tuple = FORMATS
    projections: list = field(default_factory=list)  # 0-based index pairs
    overlay: bool = False


@dataclass
class RunConfig:
    system: SystemSpec
    engine: EngineConfig
    outputs: Outputs
    seed: int | None = None
    X_target: Zonotope | None = None
    query: list = field(default_factory=list)


def _keys(obj, where, required, optional=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ConfigError(f"{where}: missing keys {missing}")


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _matrix(rows, where):
    if (not isinstance(rows, list) or not rows
            or not all(isinstance(r, list) and r for r in rows)):
        raise ConfigError(f"{where}: expected a non-empty list of rows")
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(f"{where}: rows must have equal length")
    return np.array([[_number(x, where) for x in r] for r in rows])


def _set(obj, n, where):
    if obj == "origin":
        return None
    try:
        return parse_zonotope(obj, n, where)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(doc):
    """Validate a decoded config document and build the run objects.

    Raises:
        ConfigError: on unknown keys, ragged matrices or invalid values.
    """
    _keys(doc, "config", ["system", "engine"], ["outputs", "seed", "query"])
    sysd = doc["system"]
    _keys(sysd, "system", ["A", "X0", "U", "T"], ["X_target"])
    A = _matrix(sysd["A"], "system.A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ConfigError(f"system.A must be square, got {A.shape}")
    X0 = _set(sysd["X0"], n, "system.X0")
    U = _set(sysd["U"], n, "system.U")
    X_target = _set(sysd["X_target"], n, "system.X_target") if "X_target" in sysd else None
    try:
        system = SystemSpec(A, X0, U, _number(sysd["T"], "system.T"))
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"system: {exc}") from exc

    eng = doc["engine"]
    _keys(eng, "engine", ["N", "eps"], ["reduction", "k_cap"])
    N = eng["N"]
    if isinstance(N, bool) or not isinstance(N, int) or N < 1:
        raise ConfigError("engine.N must be a positive integer")
    extra = {}
    if "k_cap" in eng:
        if not isinstance(eng["k_cap"], int) or eng["k_cap"] < 2:
            raise ConfigError("engine.k_cap must be an integer >= 2")
        extra["k_cap"] = eng["k_cap"]
    if eng.get("reduction") is not None:
        red = eng["reduction"]
        _keys(red, "engine.reduction", ["target_order"], ["apply_to"])
        try:
            extra["reduction"] = Reduction(_number(red["target_order"], "target_order"),
                                           red.get("apply_to", "lambda"))
        except ValueError as exc:
            raise ConfigError(f"engine.reduction: {exc}") from exc
    eps = eng["eps"]
    try:
        if eps == "schedule":
            engine = EngineConfig.schedule(N, **extra)
        else:
            _keys(eps, "engine.eps", ["eps_h", "eps_u"])
            engine = EngineConfig(N=N, eps_h=_number(eps["eps_h"], "eps_h"),
                                  eps_u=_number(eps["eps_u"], "eps_u"), **extra)
    except ValueError as exc:
        raise ConfigError(f"engine: {exc}") from exc

    outputs = Outputs(projections=[(0, 1)] if n >= 2 else [])
    if "outputs" in doc:
        o = doc["outputs"]
        _keys(o, "outputs", [], ["dir", "formats", "projections", "overlay"])
        if "dir" in o:
            if not isinstance(o["dir"], str):
                raise ConfigError("outputs.dir must be a string")
            outputs.dir = o["dir"]
        if "formats" in o:
            fm = o["formats"]
            if not isinstance(fm, list) or not set(fm) <= set(FORMATS):
                raise ConfigError(f"outputs.formats must be a subset of {list(FORMATS)}")
            outputs.formats = tuple(fm)
        if "projections" in o:
            outputs.projections = [_dims(p, n, "outputs.projections") for p in o["projections"]]
        if "overlay" in o:
            outputs.overlay = bool(o["overlay"])

    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigError("seed must be an integer")
    query = []
    for k, q in enumerate(doc.get("query", [])):
        if not isinstance(q, list) or len(q) != n:
            raise ConfigError(f"query[{k}] must be a list of {n} numbers")
        query.append(np.array([_number(x, f"query[{k}]") for x in q]))
    return RunConfig(system, engine, outputs, seed, X_target, query)


def _dims(pair, n, where):
    """1-based index pair from the file to a 0-based tuple."""
    if (not isinstance(pair, list) or len(pair) != 2
            or not all(isinstance(i, int) and 1 <= i <= n for i in pair)):
        raise ConfigError(f"{where}: expected a pair of indices in 1..{n}, got {pair!r}")
    return (pair[0] - 1, pair[1] - 1)


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc)
