"""Command-line interface: ``propphase estimate|simulate|curves|schedule``.

Exit codes: 0 success, 2 bad arguments (including families for which no
kernel exists), 3 bad data, 4 numeric overflow.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConstructionError, KernelOverflowError, QuadratureError, SupportError
from .estimator import TuningRule, empirical_phase, tuning_t
from .families import Construction, parse_family, require_construction
from .kernels import KernelConfig, kernel, psi_oracle
from .sim import ReplicationError, Scenario, replication_data, run_scenario, summary_document, write_long_csv

EXIT_ARGS = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _manifest(command: str, config: dict) -> dict:
    return {
        "command": command,
        "config": config,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _family(text, require_kernel=False):
    try:
        return parse_family(text, require_kernel=require_kernel)
    except ConstructionError as exc:
        raise CLIError(str(exc), EXIT_ARGS) from None
    except ValueError as exc:
        raise CLIError(f"bad --family: {exc}", EXIT_ARGS) from None


def _kernel_family(text):
    fam = _family(text, require_kernel=True)
    try:
        require_construction(fam)
    except ConstructionError as exc:
        raise CLIError(str(exc), EXIT_ARGS) from None
    return fam


def _config(args) -> KernelConfig:
    try:
        return KernelConfig(grid_n=args.grid, series_n=args.series_n)
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_ARGS) from None


def read_values(path, with_lines=False):
    """Read one number per row; a non-numeric first row is taken as a header.

    With ``with_lines`` also return the 1-based file line of each value.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}", EXIT_DATA) from None
    values, lines = [], []
    for lineno, row in enumerate(rows, start=1):
        cells = [c.strip() for c in row if c.strip()]
        if not cells:
            continue
        if len(cells) > 1:
            raise CLIError(f"{path}:{lineno}: expected one value per row, got {len(cells)}", EXIT_DATA)
        try:
            values.append(float(cells[0]))
            lines.append(lineno)
        except ValueError:
            if lineno == 1:
                continue
            raise CLIError(f"{path}:{lineno}: not a number: {cells[0]!r}", EXIT_DATA) from None
    if not values:
        raise CLIError(f"{path}: no data values", EXIT_DATA)
    if with_lines:
        return np.array(values), lines
    return np.array(values)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -------------------------------------------------------------------- commands


def cmd_estimate(args) -> int:
    fam = _kernel_family(args.family)
    cfg = _config(args)
    z, lines = read_values(args.input, with_lines=True)
    m = z.size
    if args.t is not None:
        if not (args.t >= 0 and math.isfinite(args.t)):
            raise CLIError("--t must be finite and nonnegative", EXIT_ARGS)
        t = args.t
    else:
        try:
            t = tuning_t(fam, m, TuningRule(args.gamma, eta_sup=args.eta_sup, u3=args.u3))
        except ValueError as exc:
            raise CLIError(str(exc), EXIT_ARGS) from None
    try:
        est = empirical_phase(z, t, fam, cfg)
    except SupportError as exc:
        where = args.input if exc.index is None else f"{args.input}:{lines[exc.index]}"
        raise CLIError(f"{where}: {exc}", EXIT_DATA) from None

    config = {
        "family": str(fam),
        "input": str(args.input),
        "t": args.t,
        "gamma": args.gamma,
        "eta_sup": args.eta_sup,
        "u3": args.u3,
        "grid": cfg.grid_n,
        "series_n": cfg.series_n,
        "rule": cfg.rule,
        "construction": fam.construction.value,
        "output": args.output,
    }
    manifest = _manifest("estimate", config)
    if args.output == "json":
        _emit(json.dumps({"estimate": est.as_dict(), "manifest": manifest}, indent=2) + "\n", args.out)
    else:
        d = est.as_dict()
        diag = d.pop("diagnostics")
        d.update(diag)
        lines = ["# manifest: " + json.dumps(manifest), ",".join(d), ",".join(repr(v) for v in d.values())]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _scenario_from_args(args) -> Scenario:
    seed_env = os.environ.get("PROPPHASE_SEED")
    try:
        if args.scenario:
            try:
                d = json.loads(Path(args.scenario).read_text())
            except OSError as exc:
                raise CLIError(f"cannot read scenario {args.scenario}: {exc}", EXIT_DATA) from None
            except json.JSONDecodeError as exc:
                raise CLIError(f"scenario {args.scenario} is not valid JSON: {exc}", EXIT_DATA) from None
            if seed_env is not None:
                d["master_seed"] = int(seed_env)
                d.pop("seed", None)
            return Scenario.from_dict(d)
        if args.family is None or args.m is None:
            raise CLIError("simulate needs --scenario or both --family and --m", EXIT_ARGS)
        seed = int(seed_env) if seed_env is not None else args.seed
        fam = _family(args.family)
        return Scenario(
            family=fam,
            m=args.m,
            regime=args.regime,
            reps=args.reps,
            master_seed=seed,
            estimators=tuple(args.estimators.split(",")),
            grid_n=args.grid,
            series_n=args.series_n,
        )
    except (ValueError, TypeError) as exc:
        raise CLIError(f"bad scenario: {exc}", EXIT_ARGS) from None


def cmd_simulate(args) -> int:
    sc = _scenario_from_args(args)
    try:
        result = run_scenario(sc, workers=args.workers)
    except ReplicationError as exc:
        cause = exc.__cause__
        code = EXIT_NUMERIC if isinstance(cause, (KernelOverflowError, QuadratureError)) else EXIT_DATA
        raise CLIError(str(exc), code) from None
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_ARGS) from None

    csv_text = write_long_csv(result)
    doc = summary_document(result)
    doc["manifest"] = _manifest("simulate", {**sc.to_dict(), "workers": args.workers})
    if args.csv:
        Path(args.csv).write_text(csv_text)
    if args.summary:
        Path(args.summary).write_text(json.dumps(doc, indent=2) + "\n")
    if not args.csv and not args.summary:
        sys.stdout.write(csv_text)
    if args.dump_z:
        out = Path(args.dump_z)
        out.mkdir(parents=True, exist_ok=True)
        for rep in range(sc.reps):
            _, z = replication_data(sc, rep)
            (out / f"z_rep{rep:04d}.csv").write_text("z\n" + "\n".join(repr(float(v)) for v in z) + "\n")
    return 0


def cmd_curves(args) -> int:
    fam = _kernel_family(args.family)
    cfg = _config(args)
    if not (math.isfinite(args.start) and math.isfinite(args.stop)) or args.stop < args.start:
        raise CLIError("need finite --from <= --to", EXIT_ARGS)
    if args.num < 1:
        raise CLIError("--num must be positive", EXIT_ARGS)
    if args.what == "psi":
        if args.param is None:
            raise CLIError("--what psi needs --param", EXIT_ARGS)
        if args.start < 0 and fam.construction is not Construction.I:
            raise CLIError("t must be nonnegative for this family", EXIT_ARGS)
        grid = np.linspace(args.start, args.stop, args.num)
        try:
            values = psi_oracle(grid, args.param, fam, cfg)
        except ValueError as exc:
            raise CLIError(str(exc), EXIT_ARGS) from None
        header = ("t", "psi")
    else:
        if args.t is None:
            raise CLIError("--what kernel needs --t", EXIT_ARGS)
        if fam.construction is Construction.II:
            lo, hi = math.ceil(max(args.start, 0)), math.floor(args.stop)
            if hi < lo:
                raise CLIError("range contains no nonnegative integers", EXIT_ARGS)
            grid = np.arange(lo, hi + 1, dtype=float)
        else:
            grid = np.linspace(args.start, args.stop, args.num)
        try:
            values = np.atleast_1d(kernel(args.t, grid, fam, cfg))
        except (ValueError, ConstructionError) as exc:
            raise CLIError(str(exc), EXIT_ARGS) from None
        header = ("x", "kernel")
    manifest = _manifest("curves", {
        "family": str(fam), "what": args.what, "param": args.param, "t": args.t,
        "from": args.start, "to": args.stop, "num": args.num, "grid": cfg.grid_n, "series_n": cfg.series_n,
    })
    lines = ["# manifest: " + json.dumps(manifest), ",".join(header)]
    lines += [f"{g!r},{float(v)!r}" for g, v in zip(grid.tolist(), np.atleast_1d(values).tolist())]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_schedule(args) -> int:
    fam = _kernel_family(args.family)
    rows = ["m,t"]
    try:
        for m in args.m:
            rows.append(f"{m},{tuning_t(fam, m, TuningRule(args.gamma, eta_sup=args.eta_sup, u3=args.u3))!r}")
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_ARGS) from None
    _emit("\n".join(rows) + "\n", None)
    return 0


# ---------------------------------------------------------------------- parser


def _add_kernel_flags(p):
    p.add_argument("--grid", type=int, default=400, help="quadrature subintervals on [-1, 1] (even)")
    p.add_argument("--series-n", type=int, default=20, help="Construction III series truncation order")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="propphase", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the proportion of false nulls from a data file")
    p.add_argument("--family", required=True, help='e.g. "gaussian sigma=1 null=0"')
    p.add_argument("--input", required=True, help="CSV with one z value per row")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--t", type=float, help="evaluate at this t")
    g.add_argument("--gamma", type=float, help="use the family's consistency schedule with this gamma")
    p.add_argument("--eta-sup", type=float, help="max exp(theta_i), needed by the Poisson schedule")
    p.add_argument("--u3", type=float, help="min (1 - theta_i), needed by the Gamma schedule")
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write to this file instead of stdout")
    _add_kernel_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run a seeded Monte Carlo scenario")
    p.add_argument("--scenario", help="JSON scenario file")
    p.add_argument("--family")
    p.add_argument("--m", type=int)
    p.add_argument("--regime", default="dense")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--estimators", default="new,mr,hybrid")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="long-format results CSV")
    p.add_argument("--summary", help="summary JSON")
    p.add_argument("--dump-z", help="directory for the simulated data of every replication")
    _add_kernel_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("curves", help="tabulate psi(t) or K(t, x) for plotting")
    p.add_argument("--family", required=True)
    p.add_argument("--what", choices=("psi", "kernel"), required=True)
    p.add_argument("--param", type=float, help="parameter for psi curves")
    p.add_argument("--t", type=float, help="t for kernel curves")
    p.add_argument("--from", dest="start", type=float, default=0.0)
    p.add_argument("--to", dest="stop", type=float, default=10.0)
    p.add_argument("--num", type=int, default=101)
    p.add_argument("--out")
    _add_kernel_flags(p)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("schedule", help="print t_m for a list of m")
    p.add_argument("--family", required=True)
    p.add_argument("--m", type=int, nargs="+", required=True)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--eta-sup", type=float)
    p.add_argument("--u3", type=float)
    p.set_defaults(func=cmd_schedule)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"propphase {args.command}: error: {exc}", file=sys.stderr)
        return exc.code
    except KernelOverflowError as exc:
        print(f"propphase {args.command}: numeric overflow: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConstructionError as exc:
        print(f"propphase {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
