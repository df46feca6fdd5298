"""Time-domain cart-pendulum model with a hoisting rope.

State ordering (last axis of a time state array)::

    0 x_p      payload horizontal position   [m]
    1 x_p_dot  payload horizontal velocity   [m/s]
    2 y_p      payload depth below the rail  [m]   (positive downward)
    3 y_p_dot                                [m/s]
    4 l        rope length                   [m]
    5 l_dot                                  [m/s]
    6 theta    sway angle                    [rad]
    7 theta_dot                              [rad/s]

Controls are ``(F_T, F_H)``: the trolley drive force and the hoist rope
tension, both in newtons.

Every function below accepts scalars or arrays with a trailing state axis.
The equations of motion are written once in :func:`motion_terms`, which is
also evaluated on :class:`~cranetraj.jet.Jet` objects by the transcriber.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_TIME_STATES = 8
XP, XP_DOT, YP, YP_DOT, L, L_DOT, TH, TH_DOT = range(N_TIME_STATES)


class DomainError(ValueError):
    """An argument lies outside the domain where the model is defined."""


@dataclass(frozen=True)
class CraneParams:
    """Physical constants of the crane.

    Masses are in kg, gravity in m/s^2; ``gamma_t`` and ``gamma_h`` are the
    fractions of negative (braking/lowering) power that flow back to the
    supply for the trolley drive and the hoist.
    """

    m1: float = 1.0
    m2: float = 0.5
    g: float = 9.81
    gamma_t: float = 0.8
    gamma_h: float = 0.8

    def __post_init__(self):
        for name in ("m1", "m2", "g"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be positive, got {value}")
        for name in ("gamma_t", "gamma_h"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")

    @property
    def hover_force(self):
        return self.m2 * self.g


def motion_terms(xp_dot, yp_dot, l, l_dot, th, th_dot, ft, fh, p):
    """Accelerations of the model, i.e. time derivatives of states 1..7.

    Returns the 7-tuple ``(d x_p_dot, d y_p, d y_p_dot, d l, d l_dot,
    d theta, d theta_dot)``; the derivative of ``x_p`` itself is
    ``xp_dot`` and is left to the caller.
    """
    s = np.sin(th)
    c = np.cos(th)
    trolley_push = (ft + fh * s) / p.m1
    return (
        -(fh * s) / p.m2,
        yp_dot,
        -(fh * c) / p.m2 + p.g,
        l_dot,
        l * th_dot**2 + p.g * c - fh / p.m2 - s * trolley_push,
        th_dot,
        -(2.0 * l_dot * th_dot + p.g * s + c * trolley_push) / l,
    )


def _check_rope(l):
    if np.any(np.asarray(l) <= 0):
        raise DomainError("rope length must be positive")


def time_derivatives(state, u, p):
    """Right-hand side of the time-domain equations of motion."""
    x = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_rope(x[..., L])
    terms = motion_terms(
        x[..., XP_DOT], x[..., YP_DOT], x[..., L], x[..., L_DOT],
        x[..., TH], x[..., TH_DOT], u[..., 0], u[..., 1], p,
    )
    out = np.empty(np.broadcast_shapes(x.shape, u.shape[:-1] + (N_TIME_STATES,)))
    out[..., XP] = x[..., XP_DOT]
    for i, term in enumerate(terms, start=1):
        out[..., i] = term
    return out


def trolley_velocity(xp_dot, l, l_dot, th, th_dot):
    return xp_dot - np.sin(th) * l_dot - l * np.cos(th) * th_dot


def trolley_kinematics(state):
    """Trolley position and velocity ``(x_T, x_T_dot)`` from a payload state."""
    x = np.asarray(state, dtype=float)
    x_t = x[..., XP] - np.sin(x[..., TH]) * x[..., L]
    v_t = trolley_velocity(x[..., XP_DOT], x[..., L], x[..., L_DOT], x[..., TH], x[..., TH_DOT])
    return x_t, v_t


def power_terms(xp_dot, l, l_dot, th, th_dot, ft, fh):
    """Trolley and hoist power, generic over arrays and jets."""
    return ft * trolley_velocity(xp_dot, l, l_dot, th, th_dot), -fh * l_dot


def actuator_power(state, u):
    """Mechanical power delivered by the trolley drive and the hoist.

    Positive values mean the actuator feeds energy into the system.
    """
    x = np.asarray(state, dtype=float)
    u = np.asarray(u, dtype=float)
    return power_terms(
        x[..., XP_DOT], x[..., L], x[..., L_DOT], x[..., TH], x[..., TH_DOT],
        u[..., 0], u[..., 1],
    )


def regen_power_flow(power, gamma):
    """Supply-side power ``max(P, gamma * P)`` of an actuator with recovery."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any((gamma < 0) | (gamma > 1)):
        raise DomainError(f"regeneration efficiency must lie in [0, 1], got {gamma}")
    power = np.asarray(power, dtype=float)
    return np.maximum(power, gamma * power)


def mechanical_energy(state, p):
    """Kinetic plus potential energy of trolley and payload.

    The potential is ``-m2 * g * y_p`` because depth is measured downward.
    The trolley runs on a horizontal rail, so its potential is constant and
    omitted.
    """
    x = np.asarray(state, dtype=float)
    _, v_t = trolley_kinematics(x)
    kinetic = 0.5 * p.m1 * v_t**2 + 0.5 * p.m2 * (x[..., XP_DOT] ** 2 + x[..., YP_DOT] ** 2)
    return kinetic - p.m2 * p.g * x[..., YP]


def rest_state(x_p, depth):
    """Payload hanging straight down at rest, ``depth`` metres below the rail."""
    return np.array([x_p, 0.0, depth, 0.0, depth, 0.0, 0.0, 0.0])
