"""Direct collocation of the spatial crane problem into a sparse NLP.

Decision vector layout for ``K`` intervals::

    [ states at K+1 grid points (10 each) | controls (F_T, F_H) per interval
      | (eta1, eta0) of z_T per interval | (eta1, eta0) of z_H per interval ]

Dynamics use the implicit midpoint rule: on interval ``k`` the residual
``v_mid * (s_{k+1} - s_k) / dx - f(s_mid, u_k, z_T(x_mid), z_H(x_mid))``
must vanish, with ``s_mid`` and ``v_mid`` the endpoint averages.  The
epigraph inequalities come from :mod:`cranetraj.epigraph`.  Boundary
conditions are equality constraints; the corridor and the remaining box
limits are variable bounds.

All derivatives are exact: each interval's 22 constraint functions depend
on 26 local variables and are differentiated with batched jets.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import nlp
from .corridor import StackProfile, bundled_profile, corridor_bounds
from .dynamics import CraneParams, DomainError, motion_terms, power_terms
from .epigraph import N_INTERVAL_INEQ, aux_value, interval_residuals, spatial_power
from .jet import Jet
from .spatial import (
    E_H, E_T, L, L_DOT, N_SPATIAL_STATES as NS, T, TH, TH_DOT, V, YP, YP_DOT, SpatialGrid,
    mayer_objective, rhs_components,
)

N_LOCAL = 2 * NS + 6
N_INTERVAL_EQ = NS


class InfeasibleBoundsError(ValueError):
    pass


@dataclass(frozen=True)
class Limits:
    """Box limits on states and inputs.

    ``y_min`` defaults to the ground clearance of the stack profile.
    """

    l_max: float = 0.75
    theta_max: float = 0.1
    ft_min: float = -1.0
    ft_max: float = 1.0
    fh_min: float = 0.0
    fh_max: float = 8.0
    y_min: float | None = None
    v_min_interior: float = 1e-3


def rest_boundary(depth, final=False):
    """Boundary template: payload at rest hanging ``depth`` below the rail.

    ``None`` marks a free entry.  The initial template pins the clock and both
    energy totals to zero; the final one leaves them free.  At rest with zero
    sway the rope length and its rate equal the depth and its rate, a relation the
    dynamics preserve, so the final template leaves ``l`` and ``l_dot``
    free to avoid redundant equality constraints.
    """
    if final:
        return (None, 0.0, depth, 0.0, None, None, 0.0, 0.0, None, None)
    return (0.0, 0.0, depth, 0.0, depth, 0.0, 0.0, 0.0, 0.0, 0.0)


BUNDLED_DEPTH = 0.6


@dataclass(frozen=True)
class OcpSpec:
    params: CraneParams = field(default_factory=CraneParams)
    grid: SpatialGrid = field(default_factory=SpatialGrid)
    profile: StackProfile = field(default_factory=bundled_profile)
    alpha: float = 0.5
    initial: tuple = rest_boundary(BUNDLED_DEPTH)
    final: tuple = rest_boundary(BUNDLED_DEPTH, final=True)
    limits: Limits = field(default_factory=Limits)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        for name in ("initial", "final"):
            tpl = tuple(getattr(self, name))
            if len(tpl) == 8:
                tpl = tpl + ((0.0, 0.0) if name == "initial" else (None, None))
            if len(tpl) != NS:
                raise DomainError(f"{name} boundary needs {NS} entries, got {len(tpl)}")
            object.__setattr__(self, name, tpl)
        lim = self.limits
        for lo, hi in (("ft_min", "ft_max"), ("fh_min", "fh_max")):
            if getattr(lim, lo) > getattr(lim, hi):
                raise InfeasibleBoundsError(f"{lo} exceeds {hi}")
        if lim.l_max <= 0 or lim.theta_max < 0:
            raise InfeasibleBoundsError("l_max must be positive and theta_max nonnegative")

    def with_alpha(self, alpha):
        return replace(self, alpha=alpha)

    @property
    def y_min(self):
        lim = self.limits
        return self.profile.ground_clearance if lim.y_min is None else lim.y_min


def bundled_spec(alpha=0.5, k=50, **kw):
    """The bundled loading scenario on ``[0, 1]`` m."""
    return OcpSpec(grid=SpatialGrid(0.0, 1.0, k), alpha=alpha, **kw)


class Layout:
    """Index bookkeeping for the decision vector."""

    def __init__(self, k):
        self.k = k
        self.n_states = NS * (k + 1)
        self.u0 = self.n_states
        self.et0 = self.u0 + 2 * k
        self.eh0 = self.et0 + 2 * k
        self.n = self.eh0 + 2 * k
        idx = np.empty((k, N_LOCAL), dtype=np.int64)
        ks = np.arange(k)
        for i in range(NS):
            idx[:, i] = NS * ks + i
            idx[:, NS + i] = NS * (ks + 1) + i
        idx[:, 2 * NS] = self.u0 + 2 * ks
        idx[:, 2 * NS + 1] = self.u0 + 2 * ks + 1
        idx[:, 2 * NS + 2] = self.et0 + 2 * ks
        idx[:, 2 * NS + 3] = self.et0 + 2 * ks + 1
        idx[:, 2 * NS + 4] = self.eh0 + 2 * ks
        idx[:, 2 * NS + 5] = self.eh0 + 2 * ks + 1
        self.local = idx

    def state(self, k, i):
        return NS * k + i

    def unpack(self, w):
        k = self.k
        states = w[: self.n_states].reshape(k + 1, NS)
        controls = w[self.u0: self.et0].reshape(k, 2)
        eta_t = w[self.et0: self.eh0].reshape(k, 2)
        eta_h = w[self.eh0: self.n].reshape(k, 2)
        return states, controls, eta_t, eta_h

    def pack(self, states, controls, eta_t, eta_h):
        return np.concatenate([np.ravel(states), np.ravel(controls), np.ravel(eta_t),
                               np.ravel(eta_h)])


def local_functions(z, x_left, x_right, dx, p):
    """The 22 constraint functions of one interval from its 26 local variables.

    Returns ``(collocation, epigraph)`` lists of length 10 and 12.
    """
    s_left = z[:NS]
    s_right = z[NS: 2 * NS]
    ft, fh = z[2 * NS], z[2 * NS + 1]
    eta_t = (z[2 * NS + 2], z[2 * NS + 3])
    eta_h = (z[2 * NS + 4], z[2 * NS + 5])
    s_mid = [0.5 * (a + b) for a, b in zip(s_left, s_right)]
    x_mid = 0.5 * (x_left + x_right)
    f = rhs_components(s_mid, ft, fh, aux_value(eta_t, x_mid), aux_value(eta_h, x_mid), p)
    v_mid = s_mid[V]
    coll = [v_mid * ((b - a) / dx) - fi for a, b, fi in zip(s_left, s_right, f)]
    epi = interval_residuals(x_left, x_right, s_left, s_right, ft, fh, eta_t, eta_h, p)
    return coll, epi


_MID_STATES = (V, YP_DOT, L, L_DOT, TH, TH_DOT)
_POWER_STATES = (V, L, L_DOT, TH, TH_DOT)


def _selection(states, weights):
    """Linear map from the local variables to point states plus both controls."""
    out = np.zeros((len(states) + 2, N_LOCAL))
    for r, j in enumerate(states):
        out[r, j] = weights[0]
        out[r, NS + j] = weights[1]
    out[-2, 2 * NS] = 1.0
    out[-1, 2 * NS + 1] = 1.0
    return out


def _bilinear_hessians():
    """Hessians of ``v_mid * (b_i - a_i)`` for every state ``i``."""
    g_v = np.zeros(N_LOCAL)
    g_v[[V, NS + V]] = 0.5
    out = np.zeros((NS, N_LOCAL, N_LOCAL))
    for i in range(NS):
        g_d = np.zeros(N_LOCAL)
        g_d[i], g_d[NS + i] = -1.0, 1.0
        out[i] = np.outer(g_v, g_d) + np.outer(g_d, g_v)
    return out


_MAP_MID = _selection(_MID_STATES, (0.5, 0.5))
_MAP_POINTS = tuple(_selection(_POWER_STATES, w) for w in ((1.0, 0.0), (0.5, 0.5), (0.0, 1.0)))
_BILINEAR = _bilinear_hessians()


class CraneNlp:
    """The transcribed problem; implements the interface used by :mod:`nlp`."""

    has_hessian = True

    def __init__(self, spec):
        self.spec = spec
        grid = spec.grid
        self.grid = grid
        self.layout = lay = Layout(grid.k)
        self.n = lay.n
        pts = grid.points
        self.x_left = pts[:-1]
        self.x_right = pts[1:]

        fixed = []
        for k_pt, tpl in ((0, spec.initial), (grid.k, spec.final)):
            for i, val in enumerate(tpl):
                if val is not None:
                    fixed.append((lay.state(k_pt, i), float(val)))
        self.fixed_idx = np.array([i for i, _ in fixed], dtype=np.int64)
        self.fixed_val = np.array([v for _, v in fixed])
        self.m_coll = NS * grid.k
        self.m_eq = self.m_coll + len(fixed)
        self.m_ineq = N_INTERVAL_INEQ * grid.k

        self.corridor = corridor_bounds(spec.profile, grid)
        self.lb, self.ub = self._bounds()
        self._check_boundary_feasible()

        loc = lay.local
        k = grid.k
        rows_c = (np.arange(k)[:, None, None] * NS + np.arange(NS)[None, :, None])
        self._jc_rows = np.broadcast_to(rows_c, (k, NS, N_LOCAL)).ravel()
        self._jc_cols = np.broadcast_to(loc[:, None, :], (k, NS, N_LOCAL)).ravel()
        rows_i = (np.arange(k)[:, None, None] * N_INTERVAL_INEQ
                  + np.arange(N_INTERVAL_INEQ)[None, :, None])
        self._ji_rows = np.broadcast_to(rows_i, (k, N_INTERVAL_INEQ, N_LOCAL)).ravel()
        self._ji_cols = np.broadcast_to(loc[:, None, :], (k, N_INTERVAL_INEQ, N_LOCAL)).ravel()
        self._h_rows = np.broadcast_to(loc[:, :, None], (k, N_LOCAL, N_LOCAL)).ravel()
        self._h_cols = np.broadcast_to(loc[:, None, :], (k, N_LOCAL, N_LOCAL)).ravel()
        nb = len(self.fixed_idx)
        self._jb = sp.csr_matrix((np.ones(nb), (np.arange(nb), self.fixed_idx)), shape=(nb, self.n))

        grad = np.zeros(self.n)
        grad[lay.state(k, T)] = spec.alpha
        grad[lay.state(k, E_T)] = 1.0 - spec.alpha
        grad[lay.state(k, E_H)] = 1.0 - spec.alpha
        self._grad = grad
        self._cache_key = None
        self._cache = None

    # -- bounds ---------------------------------------------------------------
    def _bounds(self):
        spec, lay, k = self.spec, self.layout, self.grid.k
        lim = spec.limits
        lb = np.full(self.n, -np.inf)
        ub = np.full(self.n, np.inf)
        st_lb = lb[: lay.n_states].reshape(k + 1, NS)
        st_ub = ub[: lay.n_states].reshape(k + 1, NS)
        st_lb[:, T] = 0.0
        st_lb[:, V] = 0.0
        st_lb[1:-1, V] = lim.v_min_interior
        st_lb[:, YP] = spec.y_min
        st_ub[:, YP] = self.corridor.upper
        st_lb[:, L] = 0.0
        st_ub[:, L] = lim.l_max
        st_lb[:, TH] = -lim.theta_max
        st_ub[:, TH] = lim.theta_max
        u_lb = lb[lay.u0: lay.et0].reshape(k, 2)
        u_ub = ub[lay.u0: lay.et0].reshape(k, 2)
        u_lb[:, 0], u_ub[:, 0] = lim.ft_min, lim.ft_max
        u_lb[:, 1], u_ub[:, 1] = lim.fh_min, lim.fh_max
        if np.any(lb > ub):
            raise InfeasibleBoundsError("lower bound exceeds upper bound")
        return lb, ub

    def _check_boundary_feasible(self):
        for idx, val in zip(self.fixed_idx, self.fixed_val):
            if not self.lb[idx] <= val <= self.ub[idx]:
                k, i = divmod(int(idx), NS)
                raise InfeasibleBoundsError(
                    f"boundary value {val} of state {i} at grid point {k} violates its bounds "
                    f"[{self.lb[idx]}, {self.ub[idx]}]"
                )
        # a pinned variable needs no bound; keeping one would put the barrier
        # on an active constraint from the start
        self.lb[self.fixed_idx] = -np.inf
        self.ub[self.fixed_idx] = np.inf

    # -- evaluation -------------------------------------------------------------
    def _local(self, w):
        return np.asarray(w, dtype=float)[self.layout.local]

    def _values(self, w):
        loc = self._local(w)
        z = [loc[:, i] for i in range(N_LOCAL)]
        coll, epi = local_functions(z, self.x_left, self.x_right, self.grid.dx, self.spec.params)
        return np.stack(coll, axis=1).ravel(), np.stack(epi, axis=1).ravel()

    def _jets(self, w):
        key = np.asarray(w, dtype=float).tobytes()
        if key != self._cache_key:
            z = Jet.seed(self._local(w))
            coll, epi = local_functions(z, self.x_left, self.x_right, self.grid.dx,
                                        self.spec.params)
            self._cache = (
                np.stack([c.grad for c in coll], axis=1),
                np.stack([e.grad for e in epi], axis=1),
            )
            self._cache_key = key
        return self._cache

    def objective(self, w):
        lay, k = self.layout, self.grid.k
        return float(mayer_objective(np.asarray(w)[lay.state(k, 0): lay.state(k, 0) + NS],
                                     self.spec.alpha))

    def gradient(self, w):
        return self._grad.copy()

    def constraints_eq(self, w):
        coll, _ = self._values(w)
        return np.concatenate([coll, np.asarray(w)[self.fixed_idx] - self.fixed_val])

    def constraints_ineq(self, w):
        return self._values(w)[1]

    def jacobian_eq(self, w):
        gc, _ = self._jets(w)
        jc = sp.csr_matrix((gc.ravel(), (self._jc_rows, self._jc_cols)),
                           shape=(self.m_coll, self.n))
        return sp.vstack([jc, self._jb]).tocsr()

    def jacobian_ineq(self, w):
        _, gi = self._jets(w)
        return sp.csr_matrix((gi.ravel(), (self._ji_rows, self._ji_cols)),
                             shape=(self.m_ineq, self.n))

    def hessian(self, w, y_eq, y_ineq):
        """Hessian of ``y_eqᵀ c_E + y_ineqᵀ c_I`` (the objective is linear).

        Only a few local variables enter each constraint nonlinearly, so the
        second-order jets are seeded on those and mapped back linearly.
        """
        k, p = self.grid.k, self.spec.params
        loc = self._local(w)
        yc = np.asarray(y_eq)[: self.m_coll].reshape(k, NS)
        yi = np.asarray(y_ineq).reshape(k, 3, 4)
        blocks = np.einsum("ki,iab->kab", yc, _BILINEAR) / self.grid.dx

        # right-hand side at the interval midpoint
        ctrl = loc[:, 2 * NS: 2 * NS + 2]
        mid = 0.5 * (loc[:, list(_MID_STATES)] + loc[:, [NS + j for j in _MID_STATES]])
        z = Jet.seed(np.concatenate([mid, ctrl], axis=1), second_order=True)
        s = dict(zip(_MID_STATES, z))
        accel = motion_terms(s[V], s[YP_DOT], s[L], s[L_DOT], s[TH], s[TH_DOT], z[-2], z[-1], p)
        h_mid = -sum(yc[:, i + 1, None, None] * a.hess for i, a in enumerate(accel))
        blocks += _MAP_MID.T @ h_mid @ _MAP_MID

        # powers at the three epigraph points
        gam = np.array([p.gamma_t, p.gamma_h])
        for j, amap in enumerate(_MAP_POINTS):
            z = Jet.seed(loc @ amap.T, second_order=True)
            s = dict(zip(_POWER_STATES, z))
            p_t, p_h = power_terms(s[V], s[L], s[L_DOT], s[TH], s[TH_DOT], z[-2], z[-1])
            wt = yi[:, j, 0] + gam[0] * yi[:, j, 1]
            wh = yi[:, j, 2] + gam[1] * yi[:, j, 3]
            h_pt = -(wt[:, None, None] * p_t.hess + wh[:, None, None] * p_h.hess)
            blocks += amap.T @ h_pt @ amap
        return sp.csr_matrix((blocks.ravel(), (self._h_rows, self._h_cols)),
                             shape=(self.n, self.n))

    def sparsity(self):
        """Boolean pattern of the stacked Jacobian ``[J_E; J_I]``."""
        ones = np.ones(self.n)
        je = self.jacobian_eq(ones).copy()
        ji = self.jacobian_ineq(ones).copy()
        je.data[:] = 1.0
        ji.data[:] = 1.0
        return sp.vstack([je, ji]).tocsr().astype(bool)


def transcribe(spec):
    return CraneNlp(spec)


def evaluate_derivatives(problem, w):
    """Objective gradient and stacked constraint Jacobian ``[J_E; J_I]``."""
    w = np.asarray(w, dtype=float)
    bad = np.nonzero(~np.isfinite(w))[0]
    if bad.size:
        raise nlp.NonFiniteError(f"non-finite decision variable at index {int(bad[0])}")
    jac = sp.vstack([problem.jacobian_eq(w), problem.jacobian_ineq(w)]).tocsr()
    bad = np.nonzero(~np.isfinite(jac.data))[0]
    if bad.size:
        row = int(np.searchsorted(jac.indptr, bad[0], side="right") - 1)
        raise nlp.NonFiniteError(f"non-finite Jacobian entry in constraint row {row}")
    return problem.gradient(w), jac


def initial_guess(spec):
    """A cheap starting point that respects the variable bounds."""
    grid, p, lim = spec.grid, spec.params, spec.limits
    k = grid.k
    pts = grid.points
    frac = (pts - grid.xp0) / (grid.xpf - grid.xp0)
    corridor = corridor_bounds(spec.profile, grid)

    def endpoint(i, default):
        a = spec.initial[i]
        b = spec.final[i]
        a = default if a is None else a
        b = a if b is None else b
        return a, b

    states = np.zeros((k + 1, NS))
    for i in range(NS):
        a, b = endpoint(i, 0.0)
        states[:, i] = a + (b - a) * frac

    distance = grid.xpf - grid.xp0
    a_max = p.g * np.sin(lim.theta_max) if lim.theta_max > 0 else p.g
    speed = max(0.1, distance / (2.0 * np.sqrt(distance / a_max)))
    v0, vf = endpoint(V, 0.0)
    states[:, V] = speed
    states[0, V], states[-1, V] = v0, vf
    t0, _ = endpoint(T, 0.0)
    states[:, T] = t0 + (pts - grid.xp0) / speed
    mid = 0.5 * (corridor.lower + corridor.upper)
    states[:, YP] = np.minimum(states[:, YP], mid)
    states[:, YP] = np.clip(states[:, YP], corridor.lower, corridor.upper)
    states[:, L] = np.minimum(states[:, YP], lim.l_max)
    states[:, TH] = np.clip(states[:, TH], -lim.theta_max, lim.theta_max)
    # rates consistent with the interpolated depth profile
    slope = np.gradient(states[:, YP], pts)
    states[:, YP_DOT] = states[:, V] * slope
    states[:, L_DOT] = states[:, YP_DOT]
    states[:, TH_DOT] = 0.0
    for i, pinned in ((0, spec.initial), (k, spec.final)):
        for j, val in enumerate(pinned):
            if val is not None:
                states[i, j] = val

    controls = np.tile([0.0, np.clip(p.hover_force, lim.fh_min, lim.fh_max)], (k, 1))
    controls[:, 0] = np.clip(0.0, lim.ft_min, lim.ft_max)
    eta_t = np.zeros((k, 2))
    eta_h = np.zeros((k, 2))
    for coeffs, which in ((eta_t, 0), (eta_h, 1)):
        left = spatial_power([states[:-1, i] for i in range(NS)], controls[:, 0], controls[:, 1])
        right = spatial_power([states[1:, i] for i in range(NS)], controls[:, 0], controls[:, 1])
        pl, pr = left[which], right[which]
        coeffs[:, 0] = (pr - pl) / grid.dx
        coeffs[:, 1] = pl - coeffs[:, 0] * pts[:-1]
    # energy totals by the midpoint rule of the collocation scheme
    v_mid = np.maximum(0.5 * (states[:-1, V] + states[1:, V]), 1e-6)
    x_mid = grid.midpoints
    for col, coeffs in ((E_T, eta_t), (E_H, eta_h)):
        z_mid = coeffs[:, 0] * x_mid + coeffs[:, 1]
        states[1:, col] = states[0, col] + np.cumsum(grid.dx * z_mid / v_mid)
    return Layout(k).pack(states, controls, eta_t, eta_h)


@dataclass
class DiscretizedSolution:
    grid: SpatialGrid
    params: CraneParams
    alpha: float
    states: np.ndarray
    controls: np.ndarray
    eta_t: np.ndarray
    eta_h: np.ndarray
    objective: float
    status: str
    iterations: int = 0
    kkt: tuple = ()
    seconds: float = 0.0

    @property
    def converged(self):
        return self.status == nlp.CONVERGED

    @property
    def final_time(self):
        return float(self.states[-1, T])

    @property
    def energy(self):
        return float(self.states[-1, E_T] + self.states[-1, E_H])

    def decision_vector(self):
        return Layout(self.grid.k).pack(self.states, self.controls, self.eta_t, self.eta_h)

    def z_at_points(self):
        """Auxiliary powers at the left, mid and right point of each interval."""
        pts = self.grid.points
        xs = np.stack([pts[:-1], 0.5 * (pts[:-1] + pts[1:]), pts[1:]], axis=1)
        z_t = self.eta_t[:, :1] * xs + self.eta_t[:, 1:]
        z_h = self.eta_h[:, :1] * xs + self.eta_h[:, 1:]
        return z_t, z_h


def solution_from_vector(spec, w, outcome=None):
    states, controls, eta_t, eta_h = Layout(spec.grid.k).unpack(np.asarray(w, dtype=float))
    return DiscretizedSolution(
        grid=spec.grid,
        params=spec.params,
        alpha=spec.alpha,
        states=states.copy(),
        controls=controls.copy(),
        eta_t=eta_t.copy(),
        eta_h=eta_h.copy(),
        objective=float(mayer_objective(states[-1], spec.alpha)),
        status=outcome.status if outcome else "unsolved",
        iterations=outcome.iterations if outcome else 0,
        kkt=tuple(outcome.kkt) if outcome else (),
        seconds=outcome.seconds if outcome else 0.0,
    )


def solve_ocp(spec, w0=None, options=None):
    """Transcribe and solve; returns ``(DiscretizedSolution, SolveOutcome)``.

    Without ``w0`` the solver starts from a flat rest-to-rest motion
    (:func:`cranetraj.flatness.flat_guess`).
    """
    from .flatness import flat_guess

    problem = transcribe(spec)
    if w0 is None:
        w0 = flat_guess(spec)
    elif isinstance(w0, DiscretizedSolution):
        w0 = w0.decision_vector()
    outcome = nlp.solve(problem, w0, options)
    return solution_from_vector(spec, outcome.w, outcome), outcome
