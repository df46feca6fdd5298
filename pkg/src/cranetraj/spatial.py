"""Dynamics with the payload position ``x_p`` as independent variable.

The spatial state replaces ``x_p`` by elapsed time and appends the two
consumed-energy integrals::

    0 t         1 x_p_dot   2 y_p   3 y_p_dot   4 l
    5 l_dot     6 theta     7 theta_dot   8 E_T   9 E_H

Derivatives with respect to ``x_p`` are written ``s'``.  The dynamics are
kept in the implicit form ``x_p_dot * s' = f(s, u, z_T, z_H)`` so that the
model stays well defined where the payload is momentarily at rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DomainError, motion_terms

N_SPATIAL_STATES = 10
T, V, YP, YP_DOT, L, L_DOT, TH, TH_DOT, E_T, E_H = range(N_SPATIAL_STATES)
STATE_NAMES = ("t", "xp_dot", "yp", "yp_dot", "l", "l_dot", "theta", "theta_dot", "e_t", "e_h")


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid of ``k`` intervals on ``[xp0, xpf]``."""

    xp0: float = 0.0
    xpf: float = 1.0
    k: int = 50

    def __post_init__(self):
        if not self.xpf > self.xp0:
            raise DomainError(f"grid end {self.xpf} must exceed start {self.xp0}")
        if int(self.k) != self.k or self.k < 2:
            raise DomainError(f"grid needs at least 2 intervals, got k={self.k}")

    @property
    def dx(self):
        return (self.xpf - self.xp0) / self.k

    @property
    def points(self):
        return np.linspace(self.xp0, self.xpf, self.k + 1)

    @property
    def midpoints(self):
        pts = self.points
        return 0.5 * (pts[:-1] + pts[1:])


def rhs_components(s, ft, fh, z_t, z_h, p):
    """Implicit right-hand side as a list of ten components.

    ``s`` is any indexable sequence of the ten spatial state components
    (arrays or jets).
    """
    accel = motion_terms(s[V], s[YP_DOT], s[L], s[L_DOT], s[TH], s[TH_DOT], ft, fh, p)
    return [1.0 + 0.0 * s[V], *accel, z_t, z_h]


def spatial_rhs(s, u, z_t, z_h, p):
    """``f`` such that ``x_p_dot * s' = f``; never divides by ``x_p_dot``."""
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(s[..., L] <= 0):
        raise DomainError("rope length must be positive")
    comps = [s[..., i] for i in range(N_SPATIAL_STATES)]
    f = rhs_components(comps, u[..., 0], u[..., 1], z_t, z_h, p)
    return np.stack(np.broadcast_arrays(*f), axis=-1)


def implicit_residual(s, s_prime, u, z_t, z_h, p):
    """``x_p_dot * s' - f``; vanishes exactly where the spatial dynamics hold."""
    s = np.asarray(s, dtype=float)
    s_prime = np.asarray(s_prime, dtype=float)
    return s[..., V, None] * s_prime - spatial_rhs(s, u, z_t, z_h, p)


def mayer_objective(s_final, alpha):
    """Weighted final time and consumed energy."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    s_final = np.asarray(s_final, dtype=float)
    return alpha * s_final[..., T] + (1.0 - alpha) * (s_final[..., E_T] + s_final[..., E_H])


def to_spatial(time_state, t, e_t=0.0, e_h=0.0):
    """Spatial state from a time-domain state plus clock and energy totals."""
    x = np.asarray(time_state, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
    e_t = np.broadcast_to(np.asarray(e_t, dtype=float), x.shape[:-1])
    e_h = np.broadcast_to(np.asarray(e_h, dtype=float), x.shape[:-1])
    return np.concatenate([t[..., None], x[..., 1:], e_t[..., None], e_h[..., None]], axis=-1)


def to_time_state(spatial_state, x_p):
    """Time-domain state from a spatial state at payload position ``x_p``."""
    s = np.asarray(spatial_state, dtype=float)
    x_p = np.broadcast_to(np.asarray(x_p, dtype=float), s.shape[:-1])
    return np.concatenate([x_p[..., None], s[..., V:TH_DOT + 1]], axis=-1)
