"""Epigraph treatment of regenerative power.

The supply-side power ``max(P, gamma * P)`` is not differentiable at
``P = 0``.  Each actuator instead gets an auxiliary power ``z`` that is
affine in ``x_p`` on every grid interval,

    z(x_p) = eta1 * x_p + eta0,

and is constrained from below by both branches of the max.  Minimizing the
integral of ``z`` makes one of the two inequalities active wherever ``z`` is
free to move.

Inequalities are imposed at three points per interval: both grid endpoints
and the midpoint, with the midpoint state taken as the endpoint average.
"""

from __future__ import annotations

import numpy as np

from .dynamics import power_terms
from .spatial import L, L_DOT, N_SPATIAL_STATES, TH, TH_DOT, V

N_EVAL_POINTS = 3
N_INTERVAL_INEQ = 4 * N_EVAL_POINTS


def aux_value(coeffs, x_p):
    """Auxiliary power of one interval at position ``x_p``."""
    eta1, eta0 = coeffs
    return eta1 * x_p + eta0


def spatial_power(s, ft, fh):
    """Trolley and hoist power of a spatial state (list of components)."""
    return power_terms(s[V], s[L], s[L_DOT], s[TH], s[TH_DOT], ft, fh)


def envelope_residuals(p_t, p_h, z_t, z_h, params):
    """``(z_T - P_T, z_T - gamma_T P_T, z_H - P_H, z_H - gamma_H P_H)``."""
    return (
        z_t - p_t,
        z_t - params.gamma_t * p_t,
        z_h - p_h,
        z_h - params.gamma_h * p_h,
    )


def epigraph_constraints(state, u, z_t, z_h, p):
    """Four epigraph residuals at one point; feasible when all are >= 0."""
    s = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    comps = [s[..., i] for i in range(N_SPATIAL_STATES)]
    p_t, p_h = spatial_power(comps, u[..., 0], u[..., 1])
    return np.stack(envelope_residuals(p_t, p_h, z_t, z_h, p), axis=-1)


def interval_points(x_left, x_right, s_left, s_right):
    """Positions and states of the three evaluation points of an interval.

    ``s_left`` and ``s_right`` are sequences of state components; jets are
    accepted so the transcriber can reuse this.
    """
    s_mid = [0.5 * (a + b) for a, b in zip(s_left, s_right)]
    x_mid = 0.5 * (x_left + x_right)
    return (x_left, s_left), (x_mid, s_mid), (x_right, s_right)


def interval_residuals(x_left, x_right, s_left, s_right, ft, fh, eta_t, eta_h, p):
    """The twelve epigraph residuals of one interval, point-major order."""
    out = []
    for x, s in interval_points(x_left, x_right, s_left, s_right):
        p_t, p_h = spatial_power(s, ft, fh)
        z_t = aux_value(eta_t, x)
        z_h = aux_value(eta_h, x)
        out.extend(envelope_residuals(p_t, p_h, z_t, z_h, p))
    return out


def solution_residuals(sol):
    """Epigraph residuals of a discretized solution, shape ``(K, 3, 4)``."""
    pts = sol.grid.points
    states = sol.states
    left = [states[:-1, i] for i in range(N_SPATIAL_STATES)]
    right = [states[1:, i] for i in range(N_SPATIAL_STATES)]
    res = interval_residuals(
        pts[:-1], pts[1:], left, right,
        sol.controls[:, 0], sol.controls[:, 1],
        (sol.eta_t[:, 0], sol.eta_t[:, 1]), (sol.eta_h[:, 0], sol.eta_h[:, 1]),
        sol.params,
    )
    return np.stack(res, axis=-1).reshape(-1, N_EVAL_POINTS, 4)


def tightness_report(sol):
    """Per-point slack of the epigraph and its worst case.

    For every evaluation point and actuator the gap is the smaller of the two
    residuals, i.e. how far ``z`` sits above ``max(P, gamma * P)``.  Returns
    ``(gaps, max_gap)`` with ``gaps`` of shape ``(K, 3, 2)`` holding the
    trolley and hoist gaps.
    """
    res = solution_residuals(sol)
    gaps = np.stack(
        [np.minimum(res[..., 0], res[..., 1]), np.minimum(res[..., 2], res[..., 3])], axis=-1
    )
    return gaps, float(np.max(gaps))


def point_powers(sol):
    """Actuator powers at the evaluation points, shape ``(K, 3, 2)``."""
    pts = sol.grid.points
    states = sol.states
    left = [states[:-1, i] for i in range(N_SPATIAL_STATES)]
    right = [states[1:, i] for i in range(N_SPATIAL_STATES)]
    out = []
    for _, s in interval_points(pts[:-1], pts[1:], left, right):
        out.append(np.stack(spatial_power(s, sol.controls[:, 0], sol.controls[:, 1]), axis=-1))
    return np.stack(out, axis=1)
