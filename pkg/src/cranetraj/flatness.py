"""Dynamically consistent starting trajectories from the payload path.

The crane is differentially flat with the payload position as flat output:
given ``x_p(t)`` and ``y_p(t)`` the rope angle follows from the direction of
the payload acceleration, the rope tension from its magnitude, and the
trolley force from the trolley acceleration.  A smooth rest-to-rest motion
along a smooth path through the corridor therefore yields states and inputs
that satisfy the equations of motion exactly, which is a far better starting
point for the interior-point solver than straight-line interpolation.
"""

from __future__ import annotations

import numpy as np

from .corridor import corridor_bounds
from .epigraph import spatial_power
from .spatial import E_H, E_T, N_SPATIAL_STATES as NS, V, YP


def _septic(tau):
    """Rest-to-rest blend with vanishing derivatives up to third order."""
    tau = np.clip(tau, 0.0, 1.0)
    p = [35 * tau**4 - 84 * tau**5 + 70 * tau**6 - 20 * tau**7,
         140 * tau**3 - 420 * tau**4 + 420 * tau**5 - 140 * tau**6,
         420 * tau**2 - 1680 * tau**3 + 2100 * tau**4 - 840 * tau**5,
         840 * tau - 5040 * tau**2 + 8400 * tau**3 - 4200 * tau**4]
    return p


def corridor_path(spec, margin=0.03, n=10001):
    """Smooth depth profile ``y(x)`` that stays inside the corridor.

    The payload rises from its initial depth to one safe level before the
    first cap that would block it, travels level, and drops to its final
    depth after the last such cap.  Both transitions use the septic blend so
    the path has three continuous derivatives.  Returns the fine abscissa and
    ``y`` with its first three derivatives.
    """
    grid = spec.grid
    corridor = corridor_bounds(spec.profile, grid)
    xs = np.linspace(grid.xp0, grid.xpf, n)
    # cap between grid points: the tighter of the two bracketing caps
    idx = np.clip(np.searchsorted(grid.points, xs, side="right") - 1, 0, grid.k - 1)
    cap = np.minimum(corridor.upper[idx], corridor.upper[idx + 1]) - margin
    y0 = spec.initial[YP]
    y1 = spec.final[YP] if spec.final[YP] is not None else y0
    level = max(min(cap.min(), y0, y1), corridor.lower.max() + margin)
    blocked0 = np.nonzero(cap < y0)[0]
    blocked1 = np.nonzero(cap < y1)[0]
    a = xs[blocked0[0]] if blocked0.size else xs[0]
    b = xs[blocked1[-1]] if blocked1.size else xs[-1]
    y = np.full(n, level)
    d = [np.zeros(n) for _ in range(3)]
    for lo, hi, start, stop in ((xs[0], a, y0, level), (b, xs[-1], level, y1)):
        if hi <= lo:
            continue
        blend = _septic((xs - lo) / (hi - lo))
        inside = (xs >= lo) & (xs <= hi)
        rise = stop - start
        y[inside] = start + rise * blend[0][inside]
        for j in range(3):
            d[j][inside] = rise * blend[j + 1][inside] / (hi - lo) ** (j + 1)
    return xs, (y, d[0], d[1], d[2])


def _time_samples(spec, duration, path, n_t=6001):
    p = spec.params
    grid = spec.grid
    xs, (y, d1, d2, d3) = path
    dist = grid.xpf - grid.xp0
    t = np.linspace(0.0, duration, n_t)
    s = _septic(t / duration)
    x = grid.xp0 + dist * s[0]
    xd = dist * s[1] / duration
    xdd = dist * s[2] / duration**2
    xddd = dist * s[3] / duration**3
    yy, y1, y2, y3 = (np.interp(x, xs, a) for a in (y, d1, d2, d3))
    yd = y1 * xd
    ydd = y2 * xd**2 + y1 * xdd
    yddd = y3 * xd**3 + 3 * y2 * xd * xdd + y1 * xddd
    gy = p.g - ydd
    theta = np.arctan2(-xdd, gy)
    den = xdd**2 + gy**2
    theta_dot = (-xddd * gy - xdd * yddd) / den
    fh = p.m2 * np.sqrt(den)
    c = np.cos(theta)
    ell = yy / c
    ell_dot = yd / c + yy * np.sin(theta) * theta_dot / c**2
    x_trolley = x - ell * np.sin(theta)
    dt = t[1] - t[0]
    acc_trolley = np.gradient(np.gradient(x_trolley, dt), dt)
    ft = p.m1 * acc_trolley - fh * np.sin(theta)
    states = np.stack([t, xd, yy, yd, ell, ell_dot, theta, theta_dot], axis=1)
    return x, states, np.stack([ft, fh], axis=1)


def _violation(spec, states, u):
    lim = spec.limits
    worst = max(
        np.max(np.abs(states[:, 6])) / max(lim.theta_max, 1e-12),
        np.max(states[:, 4]) / lim.l_max,
        np.max(u[:, 0]) / lim.ft_max if lim.ft_max > 0 else 0.0,
        np.min(u[:, 0]) / lim.ft_min if lim.ft_min < 0 else 0.0,
        np.max(u[:, 1]) / lim.fh_max,
    )
    return worst


def flat_guess(spec, durations=None):
    """Decision vector sampled from a flat rest-to-rest motion.

    The motion duration is the shortest candidate whose inputs and sway stay
    within 90% of their limits (or the gentlest candidate if none does).
    """
    from .transcription import Layout

    grid = spec.grid
    path = corridor_path(spec)
    if durations is None:
        durations = np.arange(2.0, 20.01, 0.25)
    chosen = None
    for duration in durations:
        sample = _time_samples(spec, duration, path)
        if _violation(spec, sample[1], sample[2]) <= 0.9:
            chosen = sample
            break
    if chosen is None:
        chosen = sample
    x, states_t, u_t = chosen
    t = states_t[:, 0]

    pts = grid.points
    t_pts = np.interp(pts, x, t)
    t_mid = np.interp(grid.midpoints, x, t)
    states = np.zeros((grid.k + 1, NS))
    for i in range(8):
        states[:, i] = np.interp(t_pts, t, states_t[:, i])
    for i, pinned in ((0, spec.initial), (grid.k, spec.final)):
        for j, val in enumerate(pinned[:8]):
            if val is not None:
                states[i, j] = val
    lim = spec.limits
    controls = np.stack([np.interp(t_mid, t, u_t[:, 0]), np.interp(t_mid, t, u_t[:, 1])], axis=1)
    controls[:, 0] = np.clip(controls[:, 0], lim.ft_min, lim.ft_max)
    controls[:, 1] = np.clip(controls[:, 1], lim.fh_min, lim.fh_max)

    etas = []
    for which in (0, 1):
        left = spatial_power([states[:-1, i] for i in range(NS)], controls[:, 0], controls[:, 1])
        right = spatial_power([states[1:, i] for i in range(NS)], controls[:, 0], controls[:, 1])
        gamma = spec.params.gamma_t if which == 0 else spec.params.gamma_h
        zl = np.maximum(left[which], gamma * left[which])
        zr = np.maximum(right[which], gamma * right[which])
        eta = np.empty((grid.k, 2))
        eta[:, 0] = (zr - zl) / grid.dx
        eta[:, 1] = zl - eta[:, 0] * pts[:-1]
        etas.append(eta)
    v_mid = np.maximum(0.5 * (states[:-1, V] + states[1:, V]), 1e-6)
    for col, eta in ((E_T, etas[0]), (E_H, etas[1])):
        z_mid = eta[:, 0] * grid.midpoints + eta[:, 1]
        states[1:, col] = np.cumsum(grid.dx * z_mid / v_mid)
    return Layout(grid.k).pack(states, controls, etas[0], etas[1])
