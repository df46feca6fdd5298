"""Independent time-domain check of a solved trajectory.

The per-interval controls of a discretized solution are replayed as a
zero-order hold in time and the equations of motion are integrated with
classical fourth-order Runge-Kutta.  Corridor margins, input bounds and the
consumed energy are then recomputed from the simulated motion alone, without
any of the auxiliary power variables used by the optimizer.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .corridor import height_at
from .dynamics import (
    L, N_TIME_STATES, TH, YP, DomainError, actuator_power, mechanical_energy,
    regen_power_flow, time_derivatives,
)
from .spatial import E_H, E_T, T, to_time_state

BLOWUP_LIMIT = 1e6
CORRIDOR_TOLERANCE = 1e-3
SWAY_TOLERANCE = 1e-3
INPUT_TOLERANCE = 1e-6
ENERGY_TOLERANCE = 0.02

EXPORT_COLUMNS = (
    "t", "x_p", "xp_dot", "y_p", "yp_dot", "l", "l_dot", "theta", "theta_dot",
    "F_T", "F_H", "P_T", "P_H", "E_T", "E_H",
)


class NonMonotoneTimeError(ValueError):
    """The solved clock decreases between grid points."""


class BlowUpError(ArithmeticError):
    """The simulated state left the range where integration is meaningful."""


@dataclass(frozen=True)
class PiecewiseControl:
    """Controls held constant between consecutive time breakpoints."""

    breaks: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        idx = np.searchsorted(self.breaks, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        return self.values[idx]


def reconstruct_controls(sol):
    """Controls of ``sol`` as a function of time.

    Breakpoints are the solved clock values at the grid points.
    """
    times = np.asarray(sol.states[:, T], dtype=float)
    steps = np.diff(times)
    if np.any(steps < 0):
        bad = int(np.argmax(steps < 0))
        raise NonMonotoneTimeError(f"time decreases between grid points {bad} and {bad + 1}")
    return PiecewiseControl(times.copy(), np.asarray(sol.controls, dtype=float).copy())


@dataclass
class TimeTrajectory:
    """Samples of a simulated run.

    ``controls`` and ``powers`` at a sample belong to the step that starts
    there (the last sample repeats the final step).  ``regen_energy`` and
    ``work`` are cumulative trapezoid integrals of the supply-side flow and of
    the raw actuator power.
    """

    t: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    powers: np.ndarray
    regen_energy: np.ndarray
    work: np.ndarray
    mechanical: np.ndarray

    @property
    def final_state(self):
        return self.states[-1]

    def rows(self):
        return np.column_stack([self.t, self.states, self.controls, self.powers, self.regen_energy])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(EXPORT_COLUMNS)
            for row in self.rows():
                writer.writerow([repr(float(v)) for v in row])


def _step_nodes(t0, t_end, dt, breaks):
    if breaks is None:
        n = max(1, int(np.ceil((t_end - t0) / dt - 1e-9)))
        return np.linspace(t0, t_end, n + 1), False
    # one uniform sub-grid per hold segment so no step straddles a switch
    b = np.asarray(breaks, dtype=float)
    b = b[(b > t0) & (b < t_end)]
    edges = np.concatenate([[t0], b, [t_end]])
    parts = [edges[:1]]
    for a, c in zip(edges[:-1], edges[1:]):
        if c - a <= 0:
            continue
        n = max(1, int(np.ceil((c - a) / dt - 1e-9)))
        parts.append(np.linspace(a, c, n + 1)[1:])
    return np.concatenate(parts), True


def integrate(u_of_t, x0, p, t_end, dt, t0=0.0, gamma=None, breaks=None):
    """Fixed-step RK4 simulation of the time-domain model.

    ``u_of_t`` maps a time to ``(F_T, F_H)``.  When ``breaks`` is given (or
    ``u_of_t`` is a :class:`PiecewiseControl`) the step grid is aligned with
    the switching times and the control is held over each step.  ``gamma``
    overrides the recovery fractions ``(gamma_t, gamma_h)``.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (N_TIME_STATES,):
        raise DomainError(f"initial state needs {N_TIME_STATES} entries")
    if x[L] <= 0:
        raise DomainError("rope length must be positive")
    if breaks is None and isinstance(u_of_t, PiecewiseControl):
        breaks = u_of_t.breaks
    nodes, held = _step_nodes(float(t0), float(t_end), float(dt), breaks)
    gam = np.array([p.gamma_t, p.gamma_h] if gamma is None else gamma, dtype=float)

    n = len(nodes)
    states = np.empty((n, N_TIME_STATES))
    controls = np.empty((n, 2))
    powers = np.empty((n, 2))
    regen = np.zeros((n, 2))
    work = np.zeros((n, 2))
    states[0] = x
    for j in range(n - 1):
        ta, tb = nodes[j], nodes[j + 1]
        h = tb - ta
        if held:
            u0 = um = u1 = np.asarray(u_of_t(0.5 * (ta + tb)), dtype=float)
        else:
            u0, um, u1 = (np.asarray(u_of_t(s), dtype=float) for s in (ta, ta + 0.5 * h, tb))
        k1 = time_derivatives(x, u0, p)
        k2 = time_derivatives(x + 0.5 * h * k1, um, p)
        k3 = time_derivatives(x + 0.5 * h * k2, um, p)
        k4 = time_derivatives(x + h * k3, u1, p)
        x_new = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x_new)) or np.max(np.abs(x_new)) > BLOWUP_LIMIT:
            raise BlowUpError(f"state exceeded {BLOWUP_LIMIT:g} at t={tb:.6g}")
        if x_new[L] <= 0:
            raise DomainError(f"rope length reached zero at t={tb:.6g}")
        pa = np.array(actuator_power(x, u0))
        pb = np.array(actuator_power(x_new, u1))
        work[j + 1] = work[j] + 0.5 * h * (pa + pb)
        regen[j + 1] = regen[j] + 0.5 * h * (regen_power_flow(pa, gam) + regen_power_flow(pb, gam))
        controls[j] = u0
        powers[j] = pa
        states[j + 1] = x = x_new
    controls[-1] = controls[-2] if n > 1 else np.asarray(u_of_t(nodes[0]), dtype=float)
    powers[-1] = np.array(actuator_power(states[-1], controls[-1]))
    return TimeTrajectory(
        t=nodes,
        states=states,
        controls=controls,
        powers=powers,
        regen_energy=regen,
        work=work,
        mechanical=mechanical_energy(states, p),
    )


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of replaying a solution in the time domain."""

    corridor_violation: float
    grid_corridor_violation: float
    worst_grid_index: int
    input_violation: float
    final_mismatch: tuple
    energy_t: float
    energy_h: float
    solved_energy: float
    energy_discrepancy: float
    sway_extremum: float
    theta_max: float

    @property
    def energy(self):
        return self.energy_t + self.energy_h

    def violations(self):
        """Constraint violations beyond tolerance: corridor and input bounds."""
        out = []
        if self.corridor_violation > CORRIDOR_TOLERANCE:
            out.append(f"simulated payload leaves the corridor by {self.corridor_violation:.3e} m")
        if self.grid_corridor_violation > CORRIDOR_TOLERANCE:
            out.append(
                f"grid point {self.worst_grid_index} leaves the corridor by "
                f"{self.grid_corridor_violation:.3e} m"
            )
        if self.input_violation > INPUT_TOLERANCE:
            out.append(f"inputs exceed their bounds by {self.input_violation:.3e} N")
        return out

    def warnings(self):
        """Accuracy checks of the open-loop replay that exceed their tolerance."""
        out = []
        if self.sway_extremum > self.theta_max + SWAY_TOLERANCE:
            out.append(f"simulated sway reaches {self.sway_extremum:.4f} rad")
        if self.energy_discrepancy > ENERGY_TOLERANCE:
            out.append(f"simulated energy differs from the solved total by "
                       f"{100 * self.energy_discrepancy:.2f}%")
        return out

    @property
    def ok(self):
        return not self.violations()

    def to_dict(self):
        return {
            "corridor_violation": self.corridor_violation,
            "grid_corridor_violation": self.grid_corridor_violation,
            "worst_grid_index": self.worst_grid_index,
            "input_violation": self.input_violation,
            "final_mismatch": list(self.final_mismatch),
            "energy_t": self.energy_t,
            "energy_h": self.energy_h,
            "solved_energy": self.solved_energy,
            "energy_discrepancy": self.energy_discrepancy,
            "sway_extremum": self.sway_extremum,
            "violations": self.violations(),
            "warnings": self.warnings(),
        }


def corridor_excess(profile, y_min, x_p, y_p):
    """Signed distance by which depths leave the corridor (positive = outside)."""
    cap = profile.rail_height - height_at(profile, x_p)
    return np.maximum(np.asarray(y_p) - cap, y_min - np.asarray(y_p))


def validate(sol, spec, dt=None, trajectory=False):
    """Replay ``sol`` and compare it with what the optimizer claims.

    Returns the report, or ``(report, trajectory)`` when asked.
    """
    ctrl = reconstruct_controls(sol)
    t0, t_f = float(sol.states[0, T]), float(sol.states[-1, T])
    if dt is None:
        dt = (t_f - t0) / 5000.0
    x0 = to_time_state(sol.states[0], spec.grid.xp0)
    traj = integrate(ctrl, x0, spec.params, t_f, dt, t0=t0)

    sim_excess = corridor_excess(spec.profile, spec.y_min, traj.states[:, 0], traj.states[:, YP])
    grid_excess = corridor_excess(spec.profile, spec.y_min, spec.grid.points, sol.states[:, YP])
    lim = spec.limits
    u = np.asarray(sol.controls)
    input_excess = max(
        float(np.max(lim.ft_min - u[:, 0])), float(np.max(u[:, 0] - lim.ft_max)),
        float(np.max(lim.fh_min - u[:, 1])), float(np.max(u[:, 1] - lim.fh_max)), 0.0,
    )

    target = to_time_state(sol.states[-1], spec.grid.xpf)
    for j, val in enumerate(spec.final[1:8], start=1):
        if val is not None:
            target[j] = val
    mismatch = tuple(float(v) for v in np.abs(traj.final_state - target))

    e_t, e_h = (float(v) for v in traj.regen_energy[-1])
    solved = float(sol.states[-1, E_T] + sol.states[-1, E_H])
    total = e_t + e_h
    report = ValidationReport(
        corridor_violation=max(float(np.max(sim_excess)), 0.0),
        grid_corridor_violation=max(float(np.max(grid_excess)), 0.0),
        worst_grid_index=int(np.argmax(grid_excess)),
        input_violation=input_excess,
        final_mismatch=mismatch,
        energy_t=e_t,
        energy_h=e_h,
        solved_energy=solved,
        energy_discrepancy=abs(total - solved) / max(abs(total), 1e-9),
        sway_extremum=float(np.max(np.abs(traj.states[:, TH]))),
        theta_max=lim.theta_max,
    )
    return (report, traj) if trajectory else report
