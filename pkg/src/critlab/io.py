"""Configs, result envelopes and CSV tables for the experiment runner."""

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field

import jsonschema

from . import __version__
from .errors import InvalidParameter

SEED_MAX = 2**64 - 1

CSV_HEADERS = {
    "percolation": ("p", "n", "estimate", "stderr", "replicas", "seed"),
    "ising": ("beta", "observable", "estimate", "stderr", "n", "seed"),
    "sixvertex": ("N", "n", "c", "lambda", "iters", "residual"),
    "fk": ("q", "p", "n", "observable", "estimate", "stderr", "seed"),
    "generic": ("name", "value", "stderr", "n"),
}


class ConfigError(InvalidParameter):
    """Every schema violation, each as (path, message)."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.violations))


# --- schemas ---------------------------------------------------------------------

_int = {"type": "integer"}
_pos = {"type": "integer", "minimum": 1}
_nonneg = {"type": "number", "minimum": 0}
_prob = {"type": "number", "minimum": 0, "maximum": 1}


def _one_or_many(s):
    return {"anyOf": [s, {"type": "array", "items": s, "minItems": 1}]}


COMMON = {
    "cmd": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0, "maximum": SEED_MAX},
    "replicas": _pos,
    "out": {"enum": ["json", "csv"]},
    "tol": {"type": "number", "exclusiveMinimum": 0},
}

COMMANDS = {
    "perco-cross": {
        "n": {"type": "integer", "minimum": 1, "maximum": 200},
        "p": _one_or_many(_prob),
        "mode": {"enum": ["exact", "mc"]},
        "direction": {"enum": ["lr", "tb"]},
        "dual": {"type": "boolean"},
    },
    "perco-theta": {
        "n": {"type": "integer", "minimum": 1, "maximum": 256},
        "p": _one_or_many(_prob),
        "mode": {"enum": ["exact", "mc"]},
    },
    "ising-sample": {
        "l": {"type": "integer", "minimum": 3, "maximum": 512},
        "beta": _one_or_many(_nonneg),
        "samples": _pos,
        "method": {"enum": ["glauber", "wolff"]},
        "thin": _pos,
        "burn_in": {"type": "integer", "minimum": 0},
    },
    "ising-corr": {
        "l": {"type": "integer", "minimum": 8, "maximum": 512},
        "beta": _nonneg,
        "samples": _pos,
        "rmin": _pos,
        "rmax": _pos,
    },
    "current-check": {
        "beta": _one_or_many({"type": "number", "minimum": 0, "maximum": 5}),
        "nmax": {"type": "integer", "minimum": 0, "maximum": 60},
        "max_edges": {"type": "integer", "minimum": 1, "maximum": 8},
    },
    "fk-sample": {
        "q": {"type": "number", "minimum": 1},
        "p": _one_or_many(_prob),
        "n": {"type": "integer", "minimum": 1, "maximum": 64},
        "sweeps": _pos,
        "burn_in": {"type": "integer", "minimum": 0},
        "wired": {"type": "boolean"},
        "mode": {"enum": ["exact", "mc"]},
    },
    "fk-es-check": {
        "beta": _one_or_many(_nonneg),
        "max_edges": {"type": "integer", "minimum": 1, "maximum": 8},
    },
    "sixv-spectrum": {
        "n": {"type": "integer", "minimum": 2, "maximum": 20, "multipleOf": 2},
        "q": _nonneg,
        "rmax": {"type": "integer", "minimum": 0},
        "iters": _pos,
    },
    "osss-verify": {
        "edges": {"type": "integer", "minimum": 1, "maximum": 6},
        "instances": _pos,
    },
    "phi4-cumulants": {
        "g": _nonneg,
        "nu": {"type": "number"},
        "l": {"type": "integer", "minimum": 2, "maximum": 256},
        "sweeps": _pos,
        "thin": _pos,
        "burn_in": {"type": "integer", "minimum": 0},
    },
    "blockspin-law": {
        "k": {"type": "integer", "minimum": 1, "maximum": 16},
        "a": {"type": "number"},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "sign": {"enum": [1, -1]},
    },
    "homotopy-dist": {
        "samples": {"type": "integer", "minimum": 1, "maximum": 1024},
        "m": {"type": "integer", "minimum": 4, "maximum": 256},
        "eta_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                     "minItems": 1},
    },
    "embed-check": {
        "windows": _pos,
        "rows": {"type": "integer", "minimum": 2, "maximum": 64},
        "cols": {"type": "integer", "minimum": 2, "maximum": 64},
        "amax": {"type": "number", "exclusiveMinimum": 0, "maximum": 1.5},
    },
    "accept": {
        "tier": {"enum": ["fast", "full"]},
        "only": {"type": "array", "items": {"type": "string", "pattern": "^A([1-9]|1[0-8])$"}},
        "mutate": {"enum": ["none", "dual-direction", "dual-complement"]},
    },
}


def schema_for(cmd: str) -> dict:
    return {
        "type": "object",
        "properties": {**COMMON, **COMMANDS[cmd]},
        "required": ["cmd"],
        "additionalProperties": False,
    }


@dataclass
class ExperimentConfig:
    cmd: str
    params: dict
    seed: int = 0
    replicas: int = None
    out: str = "json"
    tol: float = None


def _path(err) -> str:
    parts = list(err.absolute_path)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return ",".join(extra) or "$"
    return "/".join(str(p) for p in parts) or "$"


def validate_config(doc) -> ExperimentConfig:
    """Checked :class:`ExperimentConfig`; raises ConfigError listing every violation."""
    if not isinstance(doc, dict):
        raise ConfigError([("$", "config must be a JSON object")])
    cmd = doc.get("cmd")
    if cmd not in COMMANDS:
        raise ConfigError([("cmd", f"unknown command {cmd!r}")])
    v = jsonschema.Draft202012Validator(schema_for(cmd))
    errors = sorted(v.iter_errors(doc), key=lambda e: (_path(e), e.message))
    if errors:
        raise ConfigError([(_path(e), e.message) for e in errors])
    params = {k: val for k, val in doc.items() if k not in COMMON}
    return ExperimentConfig(cmd, params, doc.get("seed", 0), doc.get("replicas"), doc.get("out", "json"),
                            doc.get("tol"))


def parse_config(text) -> ExperimentConfig:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("$", f"invalid JSON: {exc.msg}")]) from None
    return validate_config(doc)


# --- envelopes -------------------------------------------------------------------


@dataclass
class EstimateRecord:
    name: str
    value: object
    stderr: float = 0.0
    n: int = 0


@dataclass
class ResultEnvelope:
    experiment_id: str
    params: dict
    seed: int
    estimates: list
    runtime_ms: float = 0.0
    version: str = __version__
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.estimates = [e if isinstance(e, EstimateRecord) else EstimateRecord(**e) for e in self.estimates]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_jsonable)

    @classmethod
    def from_json(cls, text: str) -> "ResultEnvelope":
        return cls(**json.loads(text))


def _jsonable(x):
    import numpy as np

    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return f"{x.numerator}/{x.denominator}"
    raise TypeError(f"cannot serialise {type(x).__name__}")


def experiment_id(cmd: str, params: dict, seed: int) -> str:
    blob = json.dumps({"cmd": cmd, "params": params, "seed": seed}, sort_keys=True, default=_jsonable)
    return f"{cmd}-{hashlib.sha256(blob.encode()).hexdigest()[:12]}"


# --- CSV -------------------------------------------------------------------------


def write_csv(rows, kind: str, stream=None) -> str:
    """Rows (dicts) under the table's fixed header, written once."""
    header = CSV_HEADERS[kind]
    buf = io.StringIO() if stream is None else stream
    w = csv.DictWriter(buf, fieldnames=header, extrasaction="raise", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _csv_cell(r.get(k, "")) for k in header})
    return buf.getvalue() if stream is None else ""


def _csv_cell(x):
    if isinstance(x, float):
        return repr(x)
    return x


def read_csv(text: str) -> list:
    return list(csv.DictReader(io.StringIO(text)))
