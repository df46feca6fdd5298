"""Sweeps over the time/energy weight and the resulting Pareto table."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .nlp import CONVERGED
from .transcription import solve_ocp

PARETO_COLUMNS = ("alpha", "tf", "energy", "rel_time", "rel_energy", "status")
DOMINATED = "dominated"


def alpha_grid(alpha_min=0.01, alpha_max=0.99, count=25):
    """Weights evenly spaced in ``log(alpha / (1 - alpha))``, ascending."""
    if count < 2:
        raise ValueError("a sweep needs at least two weights")
    if not 0.0 < alpha_min < alpha_max < 1.0:
        raise ValueError("weights must satisfy 0 < alpha_min < alpha_max < 1")
    lo, hi = (math.log(a / (1.0 - a)) for a in (alpha_min, alpha_max))
    grid = 1.0 / (1.0 + np.exp(-np.linspace(lo, hi, count)))
    grid[0], grid[-1] = alpha_min, alpha_max
    return grid


@dataclass
class ParetoPoint:
    alpha: float
    tf: float
    energy: float
    status: str
    rel_time: float = math.nan
    rel_energy: float = math.nan

    @property
    def converged(self):
        return self.status in (CONVERGED, DOMINATED)


def flag_dominated(points):
    """Mark converged points that another converged point beats in both objectives."""
    good = [p for p in points if p.converged]
    for p in good:
        for q in good:
            if q is p:
                continue
            if q.tf <= p.tf and q.energy <= p.energy and (q.tf < p.tf or q.energy < p.energy):
                p.status = DOMINATED
                break
    return points


def add_relative(points):
    """Time relative to the smallest weight, energy relative to the largest."""
    if not points:
        return points
    by_alpha = sorted(points, key=lambda p: p.alpha)
    ref_t, ref_e = by_alpha[0], by_alpha[-1]
    for p in points:
        p.rel_time = p.tf / ref_t.tf if ref_t.converged and ref_t.tf > 0 else math.nan
        p.rel_energy = p.energy / ref_e.energy if ref_e.converged and ref_e.energy != 0 else math.nan
    return points


def run_sweep(config, alphas, warm_start=True, on_solution=None):
    """Solve for every weight in ascending order.

    With ``warm_start`` each solve starts from the previous converged
    solution and falls back to the default initial guess if that fails.
    ``on_solution(index, solution)`` is called after every solve.
    """
    points = []
    previous = None
    for i, alpha in enumerate(sorted(float(a) for a in alphas)):
        spec = config.spec(alpha)
        sol, _ = solve_ocp(spec, w0=previous if warm_start else None, options=config.solver)
        if warm_start and previous is not None and not sol.converged:
            sol, _ = solve_ocp(spec, options=config.solver)
        if sol.converged:
            previous = sol
        points.append(ParetoPoint(alpha, sol.final_time, sol.energy, sol.status))
        if on_solution is not None:
            on_solution(i, sol)
    add_relative(points)
    flag_dominated(points)
    return points


def write_pareto(points, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PARETO_COLUMNS)
        for p in points:
            writer.writerow([repr(float(p.alpha)), repr(float(p.tf)), repr(float(p.energy)),
                             repr(float(p.rel_time)), repr(float(p.rel_energy)), p.status])


def read_pareto(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != PARETO_COLUMNS:
            raise ValueError(f"{path}: expected header {','.join(PARETO_COLUMNS)}")
        points = []
        for n, row in enumerate(reader, start=2):
            if len(row) != len(PARETO_COLUMNS):
                raise ValueError(f"{path}: line {n} has {len(row)} fields")
            try:
                a, tf, e, rt, re_ = (float(v) for v in row[:5])
            except ValueError:
                raise ValueError(f"{path}: line {n} has a non-numeric field") from None
            points.append(ParetoPoint(a, tf, e, row[5], rt, re_))
    return points
