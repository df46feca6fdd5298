"""Command-line front end.

Exit codes: 0 success, 1 solver did not converge, 2 configuration or I/O
error, 3 a validated trajectory violates its constraints.  Errors are printed
to standard error as one JSON object per line.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import (
    ConfigError, RunConfig, check_alpha, load_config, load_solution, save_solution,
)
from .corridor import outline
from .pareto import alpha_grid, read_pareto, run_sweep, write_pareto
from .spatial import E_H, E_T, L, TH, YP
from .transcription import solve_ocp
from .validation import validate

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2, 3

PLOT_FILES = ("pareto.csv", "path.csv", "inputs.csv", "energy.csv", "hoist_sway.csv")


class CliError(Exception):
    def __init__(self, message, code=EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _fail(message, code):
    print(json.dumps({"error": message, "exit_code": code}), file=sys.stderr)
    return code


def _config(path):
    return RunConfig() if path is None else load_config(path)


def _out_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc.strerror}") from None
    return out


def _write_report(report, path):
    Path(path).write_text(json.dumps(report.to_dict(), indent=1) + "\n")


def cmd_solve(args):
    check_alpha(args.alpha)
    cfg = _config(args.config)
    out = _out_dir(args.out)
    spec = cfg.spec(args.alpha)
    sol, _ = solve_ocp(spec, options=cfg.solver)
    save_solution(sol, out / "solution.json")
    if not sol.converged:
        raise CliError(f"solver stopped with status {sol.status}", EXIT_SOLVER)
    report, traj = validate(sol, spec, trajectory=True)
    traj.write_csv(out / "trajectory.csv")
    _write_report(report, out / "report.json")
    print(json.dumps({"status": sol.status, "tf": sol.final_time, "energy": sol.energy,
                      "objective": sol.objective}))
    return EXIT_OK


def cmd_sweep(args):
    cfg = _config(args.config)
    try:
        alphas = alpha_grid(args.alpha_min, args.alpha_max, args.count)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    out = _out_dir(args.out)
    sol_dir = _out_dir(out / "solutions")

    def keep(i, sol):
        save_solution(sol, sol_dir / f"alpha_{i:03d}.json")

    points = run_sweep(cfg, alphas, warm_start=args.warm_start, on_solution=keep)
    write_pareto(points, out / "pareto.csv")
    failed = [p.alpha for p in points if not p.converged]
    if failed:
        raise CliError(f"no convergence for alpha in {failed}", EXIT_SOLVER)
    return EXIT_OK


def cmd_validate(args):
    cfg = _config(args.config)
    sol = load_solution(args.solution)
    if sol.grid != cfg.grid:
        raise CliError(f"solution grid {sol.grid} differs from the configured grid {cfg.grid}")
    spec = cfg.spec(sol.alpha)
    if args.dt is not None and not args.dt > 0:
        raise CliError("--dt must be positive")
    report = validate(sol, spec, dt=args.dt)
    if args.out:
        _write_report(report, args.out)
    print(json.dumps(report.to_dict()))
    problems = report.violations()
    if problems:
        raise CliError("; ".join(problems), EXIT_VIOLATION)
    return EXIT_OK


def _solutions_in(path):
    path = Path(path)
    if path.is_dir():
        files = sorted((path / "solutions").glob("*.json")) or sorted(path.glob("*.json"))
        pareto = path / "pareto.csv"
        points = None
        if pareto.exists():
            try:
                points = read_pareto(pareto)
            except ValueError as exc:
                raise CliError(str(exc)) from None
    elif path.exists():
        files, points = [path], None
    else:
        raise CliError(f"{path} does not exist")
    sols = [load_solution(f) for f in files]
    if not sols and points is None:
        raise CliError(f"{path} contains no solutions")
    return sols, points


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if isinstance(v, float) and np.isnan(v) else v for v in row])


def cmd_plotdata(args):
    sols, points = _solutions_in(args.inp)
    cfg = _config(args.config)
    out = _out_dir(args.out)

    if points is None:
        points_rows = [(s.alpha, s.final_time, s.energy, s.status) for s in sols]
    else:
        points_rows = [(p.alpha, p.tf, p.energy, p.status) for p in points]
    _write_rows(out / "pareto.csv", ("alpha", "tf", "energy", "status"), points_rows)

    rows = []
    for s in sols:
        rows += [("payload", s.alpha, x, y, np.nan) for x, y in zip(s.grid.points, s.states[:, YP])]
    if sols:
        x0, x1 = sols[0].grid.xp0, sols[0].grid.xpf
    else:
        x0, x1 = cfg.grid.xp0, cfg.grid.xpf
    xs, hs = outline(cfg.profile, x0, x1)
    rail = cfg.profile.rail_height
    rows += [("stack", np.nan, x, rail - h, h) for x, h in zip(xs, hs)]
    _write_rows(out / "path.csv", ("series", "alpha", "x_p", "y_p", "stack_height"), rows)

    rows = []
    for s in sols:
        rows += [(s.alpha, x, ft, fh) for x, ft, fh in zip(s.grid.midpoints, *s.controls.T)]
    _write_rows(out / "inputs.csv", ("alpha", "x_p", "F_T", "F_H"), rows)

    rows = []
    for s in sols:
        total = s.states[:, E_T] + s.states[:, E_H]
        rows += [(s.alpha, x, e) for x, e in zip(s.grid.points, total)]
    _write_rows(out / "energy.csv", ("alpha", "x_p", "energy"), rows)

    rows = []
    for s in sols:
        rows += [(s.alpha, x, l, th) for x, l, th in zip(s.grid.points, s.states[:, L], s.states[:, TH])]
    _write_rows(out / "hoist_sway.csv", ("alpha", "x_p", "l", "theta"), rows)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="cranetraj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one weighted problem")
    p.add_argument("--config", help="configuration file (default: bundled scenario)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve over a range of weights")
    p.add_argument("--config")
    p.add_argument("--alpha-min", type=float, default=0.01)
    p.add_argument("--alpha-max", type=float, default=0.99)
    p.add_argument("--count", type=int, default=25)
    p.add_argument("--warm-start", action="store_true")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="replay a solution in the time domain")
    p.add_argument("--solution", required=True)
    p.add_argument("--config")
    p.add_argument("--dt", type=float)
    p.add_argument("--out", help="write the report to this file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plotdata", help="write figure series as CSV")
    p.add_argument("--in", dest="inp", required=True, help="sweep directory or solution file")
    p.add_argument("--config", help="configuration providing the stack profile")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(str(exc), exc.code)
    except (ConfigError, ValueError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    except OSError as exc:
        return _fail(f"{exc.filename}: {exc.strerror}", EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
