"""Run configuration documents and solution files.

A configuration is a JSON object::

    {
      "crane":    {"m1": 1.0, "m2": 0.5, "g": 9.81, "gamma_t": 0.8, "gamma_h": 0.8},
      "grid":     {"k": 50, "xp0": 0.0, "xpf": 1.0},
      "bounds":   {"l_max": 0.75, "theta_max": 0.1, "ft_min": -1, "ft_max": 1,
                   "fh_min": 0, "fh_max": 8, "y_min": 0.15},
      "profile":  "stacks.json",
      "boundary": {"initial": [0, 0, 0.6, 0, 0.6, 0, 0, 0, 0, 0],
                   "final":   ["free", 0, 0.6, 0, "free", "free", 0, 0, "free", "free"]},
      "solver":   {"max_iterations": 3000, "kkt_tolerance": 1e-6}
    }

Boundary arrays list the ten spatial states ``t, x_p_dot, y_p, y_p_dot, l,
l_dot, theta, theta_dot, E_T, E_H``; the string ``"free"`` (or ``null``)
leaves an entry unconstrained.  ``profile`` is a path relative to the
configuration file or an inline profile object.  Every section is optional
and defaults to the bundled scenario.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .corridor import ProfileError, bundled_profile, profile_from_dict, profile_to_dict
from .dynamics import CraneParams, DomainError
from .nlp import SolverOptions
from .spatial import N_SPATIAL_STATES, STATE_NAMES, SpatialGrid
from .transcription import (
    BUNDLED_DEPTH, DiscretizedSolution, Limits, OcpSpec, rest_boundary,
)

FREE = "free"
DEFAULT_SOLVER = {"max_iterations": 3000}


class ConfigError(ValueError):
    """A configuration or solution document is missing, malformed or invalid."""


@dataclass(frozen=True)
class RunConfig:
    params: CraneParams = field(default_factory=CraneParams)
    grid: SpatialGrid = field(default_factory=SpatialGrid)
    limits: Limits = field(default_factory=Limits)
    profile: object = field(default_factory=bundled_profile)
    initial: tuple = rest_boundary(BUNDLED_DEPTH)
    final: tuple = rest_boundary(BUNDLED_DEPTH, final=True)
    solver: SolverOptions = field(default_factory=lambda: SolverOptions(**DEFAULT_SOLVER))

    def spec(self, alpha):
        """The optimal control problem for weight ``alpha``."""
        check_alpha(alpha)
        try:
            return OcpSpec(
                params=self.params, grid=self.grid, profile=self.profile, alpha=float(alpha),
                initial=self.initial, final=self.final, limits=self.limits,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def check_alpha(alpha):
    if not isinstance(alpha, (int, float)) or not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")


def _section(doc, key, allowed):
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{key}: expected an object")
    unknown = set(sec) - set(allowed)
    if unknown:
        raise ConfigError(f"{key}: unknown keys {sorted(unknown)}")
    for name, value in sec.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}.{name}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{key}.{name}: must be finite")
    return sec


def _boundary(raw, name):
    if not isinstance(raw, list) or len(raw) not in (8, N_SPATIAL_STATES):
        raise ConfigError(f"boundary.{name}: expected an array of 8 or {N_SPATIAL_STATES} entries")
    out = []
    for i, item in enumerate(raw):
        if item is None or item == FREE:
            out.append(None)
        elif isinstance(item, (int, float)) and not isinstance(item, bool) and math.isfinite(item):
            out.append(float(item))
        else:
            raise ConfigError(f"boundary.{name}[{i}] ({STATE_NAMES[i]}): expected a number or 'free'")
    return tuple(out)


def config_from_dict(doc, base_dir=None):
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - {"crane", "grid", "bounds", "profile", "boundary", "solver"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    try:
        crane = _section(doc, "crane", [f.name for f in fields(CraneParams)])
        params = CraneParams(**crane)
        grid_sec = _section(doc, "grid", ["k", "xp0", "xpf"])
        if "k" in grid_sec and int(grid_sec["k"]) != grid_sec["k"]:
            raise ConfigError("grid.k: expected an integer")
        grid = SpatialGrid(
            float(grid_sec.get("xp0", 0.0)), float(grid_sec.get("xpf", 1.0)), int(grid_sec.get("k", 50))
        )
        bounds = _section(doc, "bounds", [f.name for f in fields(Limits)])
        limits = Limits(**bounds)
        solver = dict(DEFAULT_SOLVER)
        solver.update(_section(doc, "solver", ["max_iterations", "kkt_tolerance", "mu_init"]))
        if "max_iterations" in solver:
            solver["max_iterations"] = int(solver["max_iterations"])
        options = SolverOptions(**solver)
    except (DomainError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

    profile = bundled_profile()
    if "profile" in doc:
        ref = doc["profile"]
        try:
            if isinstance(ref, str):
                path = Path(ref)
                if base_dir is not None and not path.is_absolute():
                    path = Path(base_dir) / path
                try:
                    text = path.read_text()
                except OSError as exc:
                    raise ConfigError(f"profile: cannot read {path}: {exc.strerror}") from None
                profile = profile_from_dict(_loads(text, str(path)))
            else:
                profile = profile_from_dict(ref)
        except ProfileError as exc:
            raise ConfigError(f"profile: {exc}") from None

    initial = rest_boundary(BUNDLED_DEPTH)
    final = rest_boundary(BUNDLED_DEPTH, final=True)
    if "boundary" in doc:
        bnd = doc["boundary"]
        if not isinstance(bnd, dict) or set(bnd) - {"initial", "final"}:
            raise ConfigError("boundary: expected an object with 'initial' and 'final'")
        if "initial" in bnd:
            initial = _boundary(bnd["initial"], "initial")
        if "final" in bnd:
            final = _boundary(bnd["final"], "final")
    cfg = RunConfig(params, grid, limits, profile, initial, final, options)
    cfg.spec(0.5)  # surfaces inconsistent bounds early
    return cfg


def _loads(text, where):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{where}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return config_from_dict(_loads(text, str(path)), base_dir=path.parent)


def config_to_dict(cfg):
    def entries(tpl):
        return [FREE if v is None else v for v in tpl]

    return {
        "crane": {f.name: getattr(cfg.params, f.name) for f in fields(CraneParams)},
        "grid": {"k": cfg.grid.k, "xp0": cfg.grid.xp0, "xpf": cfg.grid.xpf},
        "bounds": {
            f.name: getattr(cfg.limits, f.name)
            for f in fields(Limits) if getattr(cfg.limits, f.name) is not None
        },
        "profile": profile_to_dict(cfg.profile),
        "boundary": {"initial": entries(cfg.initial), "final": entries(cfg.final)},
        "solver": {
            "max_iterations": cfg.solver.max_iterations,
            "kkt_tolerance": cfg.solver.kkt_tolerance,
            "mu_init": cfg.solver.mu_init,
        },
    }


# -- solution documents -----------------------------------------------------

def solution_to_dict(sol):
    """Structured form of a solution; free of timings so reruns compare equal."""
    return {
        "alpha": sol.alpha,
        "status": sol.status,
        "iterations": sol.iterations,
        "objective": sol.objective,
        "final_time": sol.final_time,
        "energy": sol.energy,
        "kkt": list(sol.kkt),
        "grid": {"k": sol.grid.k, "xp0": sol.grid.xp0, "xpf": sol.grid.xpf},
        "crane": {f.name: getattr(sol.params, f.name) for f in fields(CraneParams)},
        "state_names": list(STATE_NAMES),
        "states": sol.states.tolist(),
        "controls": sol.controls.tolist(),
        "eta_t": sol.eta_t.tolist(),
        "eta_h": sol.eta_h.tolist(),
    }


def solution_from_dict(doc):
    try:
        grid = SpatialGrid(float(doc["grid"]["xp0"]), float(doc["grid"]["xpf"]), int(doc["grid"]["k"]))
        params = CraneParams(**doc["crane"])
        k = grid.k
        arrays = {}
        for name, shape in (("states", (k + 1, N_SPATIAL_STATES)), ("controls", (k, 2)),
                            ("eta_t", (k, 2)), ("eta_h", (k, 2))):
            arr = np.asarray(doc[name], dtype=float)
            if arr.shape != shape:
                raise ConfigError(f"{name}: expected shape {shape}, got {arr.shape}")
            arrays[name] = arr
        return DiscretizedSolution(
            grid=grid, params=params, alpha=float(doc["alpha"]),
            objective=float(doc["objective"]), status=str(doc["status"]),
            iterations=int(doc.get("iterations", 0)), kkt=tuple(doc.get("kkt", ())),
            **arrays,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed solution document: {exc!r}") from None


def save_solution(sol, path):
    Path(path).write_text(json.dumps(solution_to_dict(sol), indent=1) + "\n")


def load_solution(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return solution_from_dict(_loads(text, str(path)))
