"""Run configuration: JSON file -> SolverConfig + InitialCondition.

Layout (unknown keys are rejected)::

    {"grid": {"n_points": 256},
     "equation": {"lambda": 0.5},
     "time": {"t_end": 1.0, "dt": 0.001, "cfl_safety": null, "snapshot_stride": 10},
     "initial": {"kind": "cosine", "params": {"a": 1.0, "b": 0.02}, "mollify_n": null},
     "solver": {"dealias": true, "blowup_guard": null, "precision": "double"},
     "output": {"dir": "out"}}
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .evolution import PRECISIONS, SolverConfig
from .grid import MIN_POINTS, make_grid
from .initial_data import InitialCondition, cosine_data, file_data, peakon_data
from .mollifier import MIN_INDEX

_NUMBER = {"type": "number"}
_OPT_POSITIVE = {"type": ["number", "null"], "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["grid", "equation", "time", "initial"],
    "properties": {
        "grid": {
            "type": "object", "additionalProperties": False, "required": ["n_points"],
            "properties": {"n_points": {"type": "integer", "minimum": MIN_POINTS, "multipleOf": 2}},
        },
        "equation": {
            "type": "object", "additionalProperties": False, "required": ["lambda"],
            "properties": {"lambda": {"type": "number", "minimum": 0}},
        },
        "time": {
            "type": "object", "additionalProperties": False, "required": ["t_end"],
            "properties": {
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "dt": _OPT_POSITIVE,
                "cfl_safety": {"type": ["number", "null"], "exclusiveMinimum": 0, "maximum": 1},
                "snapshot_stride": {"type": "integer", "minimum": 1},
            },
        },
        "initial": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {
                "kind": {"enum": ["cosine", "peakon", "file"]},
                "params": {"type": "object"},
                "mollify_n": {"type": ["integer", "null"], "minimum": MIN_INDEX},
            },
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "dealias": {"type": "boolean"},
                "blowup_guard": _OPT_POSITIVE,
                "precision": {"enum": sorted(PRECISIONS)},
            },
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"dir": {"type": "string", "minLength": 1}},
        },
    },
}

PARAM_SCHEMAS = {
    "cosine": {"type": "object", "additionalProperties": False, "required": ["a", "b"],
               "properties": {"a": _NUMBER, "b": _NUMBER}},
    "peakon": {"type": "object", "additionalProperties": False, "required": ["p", "x0"],
               "properties": {"p": {"type": "number", "not": {"const": 0}}, "x0": _NUMBER}},
    "file": {"type": "object", "additionalProperties": False, "required": ["path"],
             "properties": {"path": {"type": "string", "minLength": 1}}},
}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted location of the problem."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True)
class RunConfig:
    solver: SolverConfig
    initial: InitialCondition
    output_dir: str | None
    document: dict
    source: Path | None = None

    @property
    def config_hash(self) -> str:
        return config_hash(self.document)


def config_hash(document: dict) -> str:
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _dotted(path) -> str:
    return ".".join(str(p) for p in path)


def _validate(instance, schema, prefix=()):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(_dotted(prefix + tuple(err.absolute_path)), err.message)


def build(document: dict, base_dir: Path | None = None) -> RunConfig:
    """Validate a parsed document and build the run objects."""
    _validate(document, SCHEMA)
    time = document["time"]
    solver = document.get("solver", {})
    initial = document["initial"]
    kind = initial["kind"]
    params = initial.get("params", {})
    _validate(params, PARAM_SCHEMAS[kind], ("initial", "params"))

    dt, cfl = time.get("dt"), time.get("cfl_safety")
    if (dt is None) == (cfl is None):
        raise ConfigError("time", "exactly one of dt and cfl_safety must be set")
    try:
        cfg = SolverConfig(
            lam=float(document["equation"]["lambda"]),
            n_points=int(document["grid"]["n_points"]),
            t_end=float(time["t_end"]),
            dt=None if dt is None else float(dt),
            cfl_safety=None if cfl is None else float(cfl),
            dealias=solver.get("dealias", True),
            snapshot_stride=time.get("snapshot_stride", 10),
            blowup_guard=solver.get("blowup_guard"),
            mollify_n=initial.get("mollify_n"),
            precision=solver.get("precision", "double"),
        )
    except ValueError as exc:
        raise ConfigError("time", str(exc)) from None

    grid = make_grid(cfg.n_points)
    if kind == "cosine":
        ic = cosine_data(grid, float(params["a"]), float(params["b"]), dtype=cfg.dtype)
    elif kind == "peakon":
        ic = peakon_data(grid, float(params["p"]), float(params["x0"]), dtype=cfg.dtype)
    else:
        path = Path(params["path"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        try:
            ic = file_data(grid, path)
        except (OSError, ValueError) as exc:
            raise ConfigError("initial.params.path", str(exc)) from None
    out = document.get("output", {}).get("dir")
    return RunConfig(cfg, ic, out, document)


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    run = build(document, path.parent)
    return RunConfig(run.solver, run.initial, run.output_dir, run.document, path)
