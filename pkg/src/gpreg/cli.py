"""Command-line interface: ``gpreg fit | predict | diagnose | calibrate | bench``.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 not converged
within ``--m-max`` (only with ``--strict``).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .bench import (BENCHMARKS, METHODS, CalibrationRow, calibrate_threshold, default_jobs,
                    get_benchmark, run_campaigns)
from .design import Design
from .errors import InputError, NumericalError
from .gp import FittedModel, TrainingData, fit, fit_popular, predict, stop_order, xi_profile
from .kernel import DEFAULT_THRESHOLD

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_NOT_CONVERGED = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    """Shortest round-trip decimal for floats."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def file_digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def read_matrix(path, ncols: int = None) -> np.ndarray:
    """Numeric CSV to a 2-d array.

    Blank lines and ``#`` comments are skipped; a non-numeric first row is
    taken as a header. Errors name the offending line.
    """
    rows = []
    header_seen = False
    with open(path, newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or not "".join(fields).strip() or fields[0].lstrip().startswith("#"):
                continue
            try:
                values = [float(f) for f in fields]
            except ValueError:
                if not rows and not header_seen:
                    header_seen = True
                    continue
                raise InputError(f"{path} line {lineno}: non-numeric value in {fields!r}") from None
            if rows and len(values) != len(rows[0][1]):
                raise InputError(f"{path} line {lineno}: expected {len(rows[0][1])} columns, got {len(values)}")
            if ncols is not None and len(values) != ncols:
                raise InputError(f"{path} line {lineno}: expected {ncols} columns, got {len(values)}")
            if not all(np.isfinite(values)):
                raise InputError(f"{path} line {lineno}: non-finite value")
            rows.append((lineno, values))
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array([v for _, v in rows], dtype=float)


def _meta(command: str, config: dict, inputs: dict) -> dict:
    return {
        "tool": "gpreg",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "inputs": {os.path.basename(p): file_digest(p) for p in inputs},
    }


def _write_text(path, text: str):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _write_json(path, doc: dict):
    _write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows, meta: dict) -> str:
    buf = io.StringIO()
    buf.write("# gpreg " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _parse_floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _config(args, skip=("func_", "handler")) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = v
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_fit(args) -> int:
    X = read_matrix(args.design)
    y = read_matrix(args.response, ncols=1)[:, 0]
    if X.shape[0] != y.shape[0]:
        raise InputError(f"{args.design} has {X.shape[0]} rows but {args.response} has {y.shape[0]}")
    rescale = None
    if args.rescale:
        lower, upper = X.min(axis=0), X.max(axis=0)
        span = np.where(upper > lower, upper - lower, 1.0)
        X = (X - lower) / span
        rescale = {"lower": lower.tolist(), "upper": (lower + span).tolist()}
    elif np.any(X < 0) or np.any(X > 1):
        raise InputError(f"{args.design}: coordinates outside [0, 1]; use --rescale")
    data = TrainingData(Design(X), y)
    powers = _parse_floats(args.powers) if args.powers else None
    if args.popular:
        floor = 1e-5 if args.delta_floor is None else args.delta_floor
        model = fit_popular(data, powers=powers, delta_floor=floor, n_restarts=args.restarts, seed=args.seed)
        m_max = 1
    else:
        model = fit(data, powers=powers, a=args.threshold_a, n_restarts=args.restarts, seed=args.seed,
                    delta_floor=args.delta_floor or 0.0)
        m_max = args.m_max
    xi0, _ = xi_profile(model, m_max)
    doc = model.to_dict()
    doc["rescale"] = rescale
    doc["report"] = {
        "theta": doc["theta"],
        "delta": doc["delta"],
        "log_kappa": doc["log_kappa"],
        "variant": model.variant,
        "xi0": [{"M": k + 1, "xi0": float(v)} for k, v in enumerate(xi0)],
    }
    doc["meta"] = _meta("fit", _config(args), [args.design, args.response])
    _write_json(args.output, doc)
    return EXIT_OK


def load_model(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from None
    try:
        return FittedModel.from_dict(doc), doc
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc}") from None


def cmd_predict(args) -> int:
    model, doc = load_model(args.model)
    Q = read_matrix(args.query, ncols=model.data.d)
    Xq = Q
    if doc.get("rescale"):
        lower = np.asarray(doc["rescale"]["lower"])
        upper = np.asarray(doc["rescale"]["upper"])
        Xq = (Q - lower) / (upper - lower)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pred = predict(model, Xq, args.m)
    d = model.data.d
    header = [f"x{k + 1}" for k in range(d)] + ["mean", "mse", "variant", "M"]
    rows = [list(map(float, q)) + [float(mu), float(s2), pred.variant, pred.order_m]
            for q, mu, s2 in zip(Q, pred.mean, pred.mse)]
    meta = _meta("predict", _config(args), [args.model, args.query])
    _write_text(args.output, _csv_text(header, rows, meta))
    return EXIT_OK


def cmd_diagnose(args) -> int:
    model, _ = load_model(args.model)
    m_max = 1 if model.delta == 0.0 else args.m_max
    xi0, xi = xi_profile(model, m_max)
    stop = stop_order(model, args.tol_xi, args.m_max)
    meta = _meta("diagnose", _config(args), [args.model])
    meta["stop_order"] = stop.order
    meta["converged"] = stop.converged
    rows = [[k + 1, float(xi0[k]), float(xi[k])] for k in range(m_max)]
    _write_text(args.output, _csv_text(["k", "xi0", "xi"], rows, meta))
    if args.strict and not stop.converged:
        print(f"not converged within m_max={args.m_max}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _parse_grid(text: str) -> list[tuple[int, int]]:
    cells = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            n, d = token.lower().split("x")
            cells.append((int(n), int(d)))
        except ValueError:
            raise InputError(f"grid cell {token!r} is not of the form NxD") from None
    if not cells:
        raise InputError("empty grid")
    return cells


def cmd_calibrate(args) -> int:
    grid = _parse_grid(args.grid)
    reps = 5000 if args.full else args.reps
    rows = calibrate_threshold(grid, reps=reps, seed=args.seed, a=args.threshold_a,
                               n_jobs=args.jobs or default_jobs())
    meta = _meta("calibrate", _config(args), [])
    meta["theta_sampling"] = "log-uniform on [0.01, 100] per dimension"
    meta["reps"] = reps
    body = [[getattr(r, c) for c in CalibrationRow.CSV_COLUMNS] for r in rows]
    _write_text(args.output, _csv_text(list(CalibrationRow.CSV_COLUMNS), body, meta))
    return EXIT_OK


def cmd_bench(args) -> int:
    func = get_benchmark(args.func, beta=args.beta)
    methods = [m for group in args.method for m in group.split(",") if m]
    reports = run_campaigns(func, args.n, methods, replicates=args.reps, seed=args.seed,
                            n_restarts=args.restarts, n_jobs=args.jobs or default_jobs())
    os.makedirs(args.out_dir, exist_ok=True)
    meta = _meta("bench", _config(args), [])
    doc = {"meta": meta, "reports": {m: r.to_dict() for m, r in reports.items()}}
    _write_json(os.path.join(args.out_dir, "report.json"), doc)
    header = ["func", "n", "method", "replicates", "failed", "P50", "P5", "P95", "table_entry"]
    rows = [[reports[m].summary_row()[h] for h in header] for m in methods]
    _write_text(os.path.join(args.out_dir, "summary.csv"), _csv_text(header, rows, meta))
    if all(r.replicates == 0 for r in reports.values()):
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpreg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gpreg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit an emulator to design/response CSV files")
    p.add_argument("design")
    p.add_argument("response")
    p.add_argument("-o", "--output", default="model.json")
    p.add_argument("--popular", action="store_true", help="estimate the nugget jointly with theta")
    p.add_argument("--delta-floor", type=float, default=None)
    p.add_argument("--threshold-a", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--m-max", type=int, default=20)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--powers", default=None, help="comma-separated p_k in (0, 2]; default all 2")
    p.add_argument("--rescale", action="store_true", help="map the design's bounding box onto [0, 1]^d")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("predict", help="predict at query sites")
    p.add_argument("model")
    p.add_argument("query")
    p.add_argument("-o", "--output", default="predictions.csv")
    p.add_argument("--m", type=int, default=1, help="number of von Neumann terms")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("diagnose", help="convergence diagnostics xi0_k and xi_k")
    p.add_argument("model")
    p.add_argument("-o", "--output", default="diagnostics.csv")
    p.add_argument("--m-max", type=int, default=20)
    p.add_argument("--tol-xi", type=float, default=-8.0)
    p.add_argument("--strict", action="store_true", help="exit 4 if not converged within --m-max")
    p.set_defaults(handler=cmd_diagnose)

    p = sub.add_parser("calibrate", help="near-singularity frequency over an (n, d) grid")
    p.add_argument("--grid", default=",".join(f"{n}x{d}" for n in (25, 50, 100) for d in (1, 2, 3)),
                   help="comma-separated NxD cells")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--full", action="store_true", help="5000 matrices per cell")
    p.add_argument("--threshold-a", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("-o", "--output", default="calibration.csv")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("bench", help="replicated benchmark fits with percentile summaries")
    p.add_argument("--func", required=True, choices=sorted(BENCHMARKS))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", required=True, action="append",
                   help=f"one of {', '.join(METHODS)}; repeat or comma-separate for several")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--beta", type=float, default=None, help="perm beta (default 0.5)")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(handler=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (InputError, OSError) as exc:
        print(f"gpreg {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"gpreg {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
