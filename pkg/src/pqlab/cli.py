"""``pqlab <command> --config <path> [--out <path>] [--seed-check]``.

Exit codes: 0 success, 2 validation error, 3 numerical failure.  Output is a
CSV table plus a JSON sidecar (same stem, ``.json``) holding the resolved
config, the library version and a short summary.  Both files are written to
a temporary name and renamed into place.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import error_bound, korovkin_table, voronovskaja_table
from .config import load_config, resolve
from .errors import NumericalError, ValidationError
from .integrate import classical_improper, jackson_finite, jackson_improper
from .kernels import BACKEND
from .operators import moment_m1, moment_m2, operator_apply_many

COMMANDS = ("moments", "bound-check", "korovkin", "voronovskaja", "integrate")


def git_hash() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def version_string() -> str:
    return f"pqlab {__version__} (git {git_hash()})"


# -- commands --------------------------------------------------------------


def _rel(a, b):
    return np.abs(a - b) / np.maximum(np.abs(b), 1e-300)


def run_moments(rc):
    cfg = rc.operator()
    xs = rc.grid.values()
    form = rc.settings["form"]
    m1c, m2c = moment_m1(xs, cfg, form), moment_m2(xs, cfg, form)
    m1d = operator_apply_many(lambda t: t, xs, cfg)
    m2d = operator_apply_many(lambda t: t * t, xs, cfg)
    rel = np.maximum(_rel(m1c, m1d), _rel(m2c, m2d))
    cols = ["x", "m1_closed", "m1_direct", "m2_closed", "m2_direct", "rel_err"]
    data = [xs, m1c, m1d, m2c, m2d, rel]
    if rc.function is not None:
        cols.append("f_direct")
        data.append(operator_apply_many(rc.function, xs, cfg))
    rows = [list(r) for r in zip(*data)]
    return cols, rows, {"max_rel_err": float(rel.max())}


def run_bound_check(rc):
    cfg = rc.operator()
    f = rc.function
    xs = rc.grid.values()
    tf = operator_apply_many(f, xs, cfg)
    fx = np.broadcast_to(f(xs), xs.shape)
    err = np.abs(tf - fx)
    bound = error_bound(f, xs, cfg, rc.grid, rc.settings["form"])
    holds = err <= bound
    rows = [list(r) + [int(h)] for r, h in zip(zip(xs, fx, tf, err, bound), holds)]
    cols = ["x", "f", "tf", "abs_err", "bound", "holds"]
    return cols, rows, {"all_hold": bool(holds.all()), "max_ratio": float((err / bound).max())}


def run_korovkin(rc):
    s = rc.settings
    table = korovkin_table(rc.scheme, rc.ns, (float(s["alpha"]), float(s["beta"])), rc.grid, s["form"])
    cols = ["n", "p_n", "q_n", "norm_i0", "norm_i1", "norm_i2"]
    return cols, [[r.as_dict()[c] for c in cols] for r in table], {}


def run_voronovskaja(rc):
    s = rc.settings
    f = rc.function
    kwargs = {
        "trunc": rc.trunc,
        "quad": rc.quad,
        "normalization": s["normalization"],
        "allow_alpha_above_beta": bool(s["allow_alpha_above_beta"]),
    }
    table = voronovskaja_table(
        f, f.derivative(1), f.derivative(2), rc.scheme, rc.ns, (float(s["alpha"]), float(s["beta"])), rc.xs, kwargs
    )
    cols = ["n", "p_n", "q_n", "x", "lhs", "A_n", "B_n", "rhs", "err"]
    return cols, [[r.as_dict()[c] for c in cols] for r in table], {}


def run_integrate(rc):
    spec = rc.settings["integral"]
    kind, a = spec["kind"], float(spec["a"])
    f = rc.function
    if kind == "finite":
        value = jackson_finite(f, a, rc.pq, rc.quad)
    elif kind == "improper":
        value = jackson_improper(f, rc.pq, rc.quad)
    else:
        value = classical_improper(f, rc.quad)
    return ["kind", "a", "p", "q", "value"], [[kind, a, float(rc.pq.p), float(rc.pq.q), value]], {}


RUNNERS = {
    "moments": run_moments,
    "bound-check": run_bound_check,
    "korovkin": run_korovkin,
    "voronovskaja": run_voronovskaja,
    "integrate": run_integrate,
}


# -- output ----------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip decimal
    return str(v)


def render_csv(columns, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue().encode("utf-8")


def _atomic_write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def execute(command, raw):
    rc = resolve(raw, command)
    if command in ("bound-check", "voronovskaja", "integrate") and rc.function is None:
        raise ValidationError(f"{command} needs a function")
    columns, rows, summary = RUNNERS[command](rc)
    return rc, render_csv(columns, rows), columns, len(rows), summary


def _sidecar(command, rc, columns, nrows, summary, seed_check):
    doc = {
        "command": command,
        "version": __version__,
        "git": git_hash(),
        "backend": BACKEND,
        "config": rc.settings,
        "columns": columns,
        "rows": nrows,
        "summary": summary,
        "seed_check": seed_check,
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def build_parser():
    ap = argparse.ArgumentParser(prog="pqlab", description="(p,q)-operator experiments")
    ap.add_argument("--version", action="version", version=version_string())
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run config")
    ap.add_argument("--out", help="CSV output path (overrides the config's 'output')")
    ap.add_argument("--seed-check", action="store_true", help="run twice and require byte-identical CSV")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_config(args.config)
        rc, data, columns, nrows, summary = execute(args.command, raw)
        seed_check = None
        if args.seed_check:
            _, again, *_ = execute(args.command, raw)
            if again != data:
                raise NumericalError("seed check failed: two runs produced different CSV bytes")
            seed_check = "identical"
        out = args.out or rc.settings["output"] or f"pqlab_{args.command.replace('-', '_')}.csv"
        out = Path(out)
        _atomic_write(out, data)
        _atomic_write(out.with_suffix(".json"), _sidecar(args.command, rc, columns, nrows, summary, seed_check))
    except ValidationError as exc:
        print(f"pqlab: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"pqlab: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
