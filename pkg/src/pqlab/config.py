"""Run configuration for the ``pqlab`` CLI.

Every default lives in :data:`DEFAULTS`.  A config file is a JSON object
whose keys override it (nested tables are merged key by key); unknown keys
are rejected so typos fail loudly.
"""
from __future__ import annotations

import copy
import json
from pathlib import Path

from .analysis import Grid, SequenceScheme
from .calculus import PqPair, Truncation
from .errors import ValidationError
from .expr import parse_function
from .integrate import QuadConfig
from .operators import OperatorConfig

__all__ = ["DEFAULTS", "COMMAND_FUNCTIONS", "load_config", "resolve", "RunConfig"]

# The one defaults table.  "function" is filled per command from
# COMMAND_FUNCTIONS when the config does not give one.
DEFAULTS = {
    "n": 10,
    "p": 0.99,
    "q": 0.98,
    "alpha": 0.0,
    "beta": 0.0,
    "normalization": "exact",
    "form": "exact",
    "allow_alpha_above_beta": False,
    "trunc": {"abs_tol": 1e-14, "max_terms": 10_000, "consecutive": 3},
    "quad": {"node_budget": 5000, "abs_tol": 1e-12, "classical_panels": 1},
    "grid": {"x_min": 0.0, "x_max": 10.0, "points": 401},
    "scheme": {"c_p": 0.5, "c_q": 1.0, "classical": False},
    "ns": [8, 16, 32, 64],
    "xs": [0.5, 1.0, 2.0],
    "integral": {"kind": "improper", "a": 1.0},
    "function": None,
    "output": None,
}

COMMAND_FUNCTIONS = {
    "moments": None,
    "bound-check": {"expr": "exp(-t)"},
    "korovkin": None,
    "voronovskaja": {"expr": "t^2", "d1": "2*t", "d2": "2"},
    "integrate": {"expr": "exp(-t)"},
}

_NESTED = {"trunc", "quad", "grid", "scheme", "integral"}


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {str(path)!r} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    return raw


def _merge(raw: dict, command: str) -> dict:
    out = copy.deepcopy(DEFAULTS)
    out["function"] = copy.deepcopy(COMMAND_FUNCTIONS[command])
    for key, value in raw.items():
        if key not in DEFAULTS:
            raise ValidationError(f"unknown config key {key!r}")
        if key in _NESTED:
            if not isinstance(value, dict):
                raise ValidationError(f"config key {key!r} must be an object")
            for sub in value:
                if sub not in DEFAULTS[key]:
                    raise ValidationError(f"unknown config key {key}.{sub}")
            out[key].update(value)
        else:
            out[key] = value
    return out


class RunConfig:
    """Resolved settings plus the library objects built from them."""

    def __init__(self, settings: dict):
        self.settings = settings
        s = settings
        try:
            self.trunc = Truncation(
                abs_tol=float(s["trunc"]["abs_tol"]),
                consecutive=int(s["trunc"]["consecutive"]),
                max_terms=int(s["trunc"]["max_terms"]),
            )
            self.quad = QuadConfig(
                node_budget=int(s["quad"]["node_budget"]),
                abs_tol=float(s["quad"]["abs_tol"]),
                classical_panels=int(s["quad"]["classical_panels"]),
            )
            self.grid = Grid(float(s["grid"]["x_min"]), float(s["grid"]["x_max"]), int(s["grid"]["points"]))
            sch = s["scheme"]
            self.scheme = (
                SequenceScheme.classical()
                if sch.get("classical")
                else SequenceScheme(float(sch["c_p"]), float(sch["c_q"]))
            )
            self.pq = PqPair(float(s["p"]), float(s["q"]))
            self.ns = [int(n) for n in s["ns"]]
            self.xs = [float(x) for x in s["xs"]]
        except (TypeError, KeyError) as exc:
            raise ValidationError(f"malformed config value: {exc}") from None
        for key in ("normalization", "form"):
            if s[key] not in ("exact", "published"):
                raise ValidationError(f"{key} must be 'exact' or 'published'")
        if s["integral"]["kind"] not in ("finite", "improper", "classical"):
            raise ValidationError("integral.kind must be 'finite', 'improper' or 'classical'")
        fn = s["function"]
        if fn is None:
            self.function = None
        else:
            if isinstance(fn, str):
                fn = {"expr": fn}
            if not isinstance(fn, dict) or "expr" not in fn or set(fn) - {"expr", "d1", "d2"}:
                raise ValidationError("function must be an object with 'expr' and optional 'd1', 'd2'")
            self.function = parse_function(fn["expr"], fn.get("d1"), fn.get("d2"))

    def operator(self, n=None, pq=None) -> OperatorConfig:
        s = self.settings
        return OperatorConfig(
            int(s["n"] if n is None else n),
            self.pq if pq is None else pq,
            float(s["alpha"]),
            float(s["beta"]),
            trunc=self.trunc,
            quad=self.quad,
            normalization=s["normalization"],
            allow_alpha_above_beta=bool(s["allow_alpha_above_beta"]),
        )


def resolve(raw: dict, command: str) -> RunConfig:
    if command not in COMMAND_FUNCTIONS:
        raise ValidationError(f"unknown command {command!r}")
    return RunConfig(_merge(raw, command))
