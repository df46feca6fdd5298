"""Primal-dual interior-point solver for smooth nonlinear programs.

Problems have the form::

    min  f(w)   s.t.  c_E(w) = 0,  c_I(w) >= 0,  lb <= w <= ub

Inequalities are turned into equalities with nonnegative slacks, all bounds
are handled with a logarithmic barrier, and each iteration takes a Newton
step on the perturbed KKT conditions.  Steps are kept strictly inside the
bounds by a fraction-to-boundary rule and globalized by a backtracking line
search on an l1 merit function with up to a few second-order corrections.

The augmented KKT matrix is permuted to reduce its bandwidth and factorized by
a sparse LU restricted to diagonal pivots, so the signs of the pivots give the
inertia.  Wrong inertia is repaired by adding a multiple of the identity to
the Hessian block; when the line search keeps cutting steps short, that shift
is raised further and relaxed again once full steps return.

Multiplier convention: the Lagrangian is
``f + y_Eᵀ c_E - λ_Iᵀ c_I - z_Lᵀ (w - lb) - z_Uᵀ (ub - w)`` with
``λ_I, z_L, z_U >= 0``.  ``NlpProblem.hessian`` receives ``(w, y_E, y_I)``
with ``y_I = -λ_I`` and must return ``∇²f + Σ y_E ∇²c_E + Σ y_I ∇²c_I``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import reverse_cuthill_mckee

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
INFEASIBLE = "infeasible_detected"
NUMERICAL_FAILURE = "numerical_failure"


class NonFiniteError(ValueError):
    pass


def _sparse(m, shape):
    if m is None:
        return sp.csr_matrix(shape)
    if sp.issparse(m):
        return m.tocsr()
    return sp.csr_matrix(np.atleast_2d(np.asarray(m, dtype=float)).reshape(shape))


class NlpProblem:
    """A nonlinear program assembled from plain callables.

    ``eq``/``ineq`` are ``(fun, jac)`` pairs or ``None``; ``hess`` is optional
    and follows the convention described in the module docstring.  Jacobians
    and Hessians may be dense arrays or scipy sparse matrices.
    """

    def __init__(self, n, objective, gradient, eq=None, ineq=None, lb=None, ub=None, hess=None):
        self.n = int(n)
        self._f = objective
        self._g = gradient
        self._eq = eq
        self._ineq = ineq
        self._hess = hess
        self.lb = np.full(self.n, -np.inf) if lb is None else np.asarray(lb, dtype=float)
        self.ub = np.full(self.n, np.inf) if ub is None else np.asarray(ub, dtype=float)
        w = np.zeros(self.n)
        self.m_eq = 0 if eq is None else np.atleast_1d(eq[0](w)).size
        self.m_ineq = 0 if ineq is None else np.atleast_1d(ineq[0](w)).size

    @property
    def has_hessian(self):
        return self._hess is not None

    def objective(self, w):
        return float(self._f(w))

    def gradient(self, w):
        return np.asarray(self._g(w), dtype=float).reshape(self.n)

    def constraints_eq(self, w):
        if self._eq is None:
            return np.zeros(0)
        return np.atleast_1d(np.asarray(self._eq[0](w), dtype=float))

    def jacobian_eq(self, w):
        if self._eq is None:
            return sp.csr_matrix((0, self.n))
        return _sparse(self._eq[1](w), (self.m_eq, self.n))

    def constraints_ineq(self, w):
        if self._ineq is None:
            return np.zeros(0)
        return np.atleast_1d(np.asarray(self._ineq[0](w), dtype=float))

    def jacobian_ineq(self, w):
        if self._ineq is None:
            return sp.csr_matrix((0, self.n))
        return _sparse(self._ineq[1](w), (self.m_ineq, self.n))

    def hessian(self, w, y_eq, y_ineq):
        return _sparse(self._hess(w, y_eq, y_ineq), (self.n, self.n))


@dataclass
class SolverOptions:
    kkt_tolerance: float = 1e-6
    max_iterations: int = 500
    mu_init: float = 0.1
    mu_reduction: float = 0.2
    tau: float = 0.995
    regularization_floor: float = 1e-8
    hessian: str = "auto"  # "exact", "bfgs" or "auto"
    bound_push: float = 1e-2
    verbose: bool = False

    def __post_init__(self):
        for name in ("kkt_tolerance", "mu_init", "mu_reduction", "regularization_floor", "bound_push"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.hessian not in ("auto", "exact", "bfgs"):
            raise ValueError(f"unknown hessian mode {self.hessian!r}")


@dataclass
class Multipliers:
    eq: np.ndarray
    ineq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass
class SolveOutcome:
    w: np.ndarray
    multipliers: Multipliers
    status: str
    iterations: int
    objective: float
    kkt: tuple
    log: list = field(default_factory=list)
    slack: np.ndarray | None = None
    seconds: float = 0.0

    @property
    def converged(self):
        return self.status == CONVERGED


def kkt_residuals(problem, w, multipliers):
    """Infinity norms ``(stationarity, primal_eq, primal_ineq, complementarity)``.

    ``primal_ineq`` also covers bound violations; ``complementarity`` also
    covers sign violations of the inequality and bound multipliers.
    """
    w = np.asarray(w, dtype=float)
    g = problem.gradient(w)
    grad_l = g - multipliers.lower + multipliers.upper
    if problem.m_eq:
        grad_l = grad_l + problem.jacobian_eq(w).T @ multipliers.eq
    c_e = problem.constraints_eq(w)
    c_i = problem.constraints_ineq(w)
    if problem.m_ineq:
        grad_l = grad_l - problem.jacobian_ineq(w).T @ multipliers.ineq
    stationarity = _inf(grad_l)
    primal_eq = _inf(c_e)
    lb_gap = w - problem.lb
    ub_gap = problem.ub - w
    primal_ineq = max(
        0.0,
        -np.min(c_i, initial=np.inf),
        -np.min(lb_gap, initial=np.inf),
        -np.min(ub_gap, initial=np.inf),
    )
    fin_l = np.isfinite(problem.lb)
    fin_u = np.isfinite(problem.ub)
    comp = [
        _inf(multipliers.ineq * c_i),
        _inf(multipliers.lower[fin_l] * lb_gap[fin_l]),
        _inf(multipliers.upper[fin_u] * ub_gap[fin_u]),
        max(0.0, -np.min(multipliers.ineq, initial=0.0)),
        max(0.0, -np.min(multipliers.lower, initial=0.0)),
        max(0.0, -np.min(multipliers.upper, initial=0.0)),
    ]
    return stationarity, primal_eq, primal_ineq, max(comp)


def _inf(x):
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0


class _Lifted:
    """The problem over ``v = (w, s)`` with equalities ``(c_E, c_I - s)``."""

    def __init__(self, problem):
        self.p = problem
        self.n = problem.n
        self.mi = problem.m_ineq
        self.me = problem.m_eq
        self.nv = self.n + self.mi
        self.m = self.me + self.mi
        self.vl = np.concatenate([problem.lb, np.zeros(self.mi)])
        self.vu = np.concatenate([problem.ub, np.full(self.mi, np.inf)])
        self.neg_eye = -sp.identity(self.mi, format="csr")

    def split(self, v):
        return v[: self.n], v[self.n:]

    def f(self, v):
        return self.p.objective(v[: self.n])

    def grad(self, v):
        return np.concatenate([self.p.gradient(v[: self.n]), np.zeros(self.mi)])

    def c(self, v):
        w, s = self.split(v)
        return np.concatenate([self.p.constraints_eq(w), self.p.constraints_ineq(w) - s])

    def jac(self, v):
        w = v[: self.n]
        je = self.p.jacobian_eq(w)
        ji = self.p.jacobian_ineq(w)
        top = sp.hstack([je, sp.csr_matrix((self.me, self.mi))])
        bottom = sp.hstack([ji, self.neg_eye])
        return sp.vstack([top, bottom]).tocsr()

    def hess(self, v, y):
        w = v[: self.n]
        h = self.p.hessian(w, y[: self.me], y[self.me:])
        return sp.block_diag([h, sp.csr_matrix((self.mi, self.mi))]).tocsr()


class InteriorPointSolver:
    # constants of the algorithm that are not worth exposing
    kappa_eps = 10.0
    eta_armijo = 1e-4
    rho_penalty = 0.1
    z_safeguard = 1e10
    barrier_damping = 1e-5
    damping_growth = 10.0
    damping_decay = 3.0
    constraint_regularization = 1e-9
    max_soc = 4
    min_step = 1e-14

    def __init__(self, problem, options=None):
        self.problem = problem
        self.opts = options or SolverOptions()
        self.lp = _Lifted(problem)
        mode = self.opts.hessian
        if mode == "auto":
            mode = "exact" if getattr(problem, "has_hessian", False) else "bfgs"
        if mode == "exact" and not getattr(problem, "has_hessian", False):
            raise ValueError("exact Hessian requested but the problem provides none")
        self.mode = mode

    # -- helpers ------------------------------------------------------------
    def _gaps(self, v):
        lp = self.lp
        return v - lp.vl, lp.vu - v

    def _barrier(self, v, mu):
        # one-sided bounds get a small linear term so the barrier cannot
        # push such variables off to infinity
        dl, du = self._gaps(v)
        fl, fu = np.isfinite(dl), np.isfinite(du)
        kd = self.barrier_damping * mu
        return (-mu * (np.sum(np.log(dl[fl])) + np.sum(np.log(du[fu])))
                + kd * (np.sum(dl[fl & ~fu]) + np.sum(du[fu & ~fl])))

    def _barrier_grad(self, v, mu):
        dl, du = self._gaps(v)
        out = np.zeros_like(v)
        fl, fu = np.isfinite(dl), np.isfinite(du)
        out[fl] -= mu / dl[fl]
        out[fu] += mu / du[fu]
        kd = self.barrier_damping * mu
        out[fl & ~fu] += kd
        out[fu & ~fl] -= kd
        return out

    def _max_step(self, x, dx, lower, upper, tau):
        alpha = 1.0
        dl = x - lower
        mask = np.isfinite(lower) & (dx < 0)
        if np.any(mask):
            alpha = min(alpha, np.min(-tau * dl[mask] / dx[mask]))
        du = upper - x
        mask = np.isfinite(upper) & (dx > 0)
        if np.any(mask):
            alpha = min(alpha, np.min(tau * du[mask] / dx[mask]))
        return alpha

    def _push_inside(self, v):
        lp, k = self.lp, self.opts.bound_push
        lo, hi = lp.vl, lp.vu
        v = v.copy()
        both = np.isfinite(lo) & np.isfinite(hi)
        if np.any(both & (hi - lo <= 0)):
            raise ValueError("variable bounds with lb >= ub are not supported")
        with np.errstate(invalid="ignore"):
            pl = np.where(both, np.minimum(k * np.maximum(1, np.abs(lo)), k * (hi - lo)),
                          k * np.maximum(1, np.abs(lo)))
            pu = np.where(both, np.minimum(k * np.maximum(1, np.abs(hi)), k * (hi - lo)),
                          k * np.maximum(1, np.abs(hi)))
            fl, fu = np.isfinite(lo), np.isfinite(hi)
            v[fl] = np.maximum(v[fl], (lo + pl)[fl])
            v[fu] = np.minimum(v[fu], (hi - pu)[fu])
        return v

    def _factor(self, w_mat, jac, sigma, dw, dc):
        """Factor the KKT matrix with diagonal pivots and report its inertia.

        A symmetric permutation with diagonal pivoting gives ``U`` whose
        diagonal carries the pivots of an LDL^T factorization, so counting its
        signs yields the inertia (Sylvester).  The small ``dc`` block keeps the
        matrix quasi-definite so that diagonal pivots exist.
        """
        lp = self.lp
        top_left = w_mat + sp.diags(sigma + dw)
        if lp.m == 0:
            kkt = top_left.tocsc()
        else:
            kkt = sp.bmat([[top_left, jac.T], [jac, -dc * sp.identity(lp.m)]], format="csc")
        # a bandwidth-reducing symmetric permutation keeps fill low for the
        # interval-banded matrices of collocation problems
        perm = reverse_cuthill_mckee(kkt.tocsr(), symmetric_mode=True)
        lu = spla.splu(kkt[perm][:, perm].tocsc(), permc_spec="NATURAL", diag_pivot_thresh=0.0,
                       options=dict(SymmetricMode=True))
        d = lu.U.diagonal()
        n_pos = int(np.sum(d > 0))
        n_neg = int(np.sum(d < 0))
        return _RefinedLU(lu, kkt, perm), n_pos, n_neg

    def _multipliers(self, v, y, zl, zu):
        n, me = self.lp.n, self.lp.me
        return Multipliers(eq=y[:me].copy(), ineq=-y[me:].copy(), lower=zl[:n].copy(),
                           upper=zu[:n].copy())

    # -- main loop ----------------------------------------------------------
    def solve(self, w0):
        t_start = time.perf_counter()
        p, lp, o = self.problem, self.lp, self.opts
        w0 = np.asarray(w0, dtype=float)
        if w0.shape != (p.n,):
            raise ValueError(f"w0 has shape {w0.shape}, expected ({p.n},)")
        if p.lb.shape != (p.n,) or p.ub.shape != (p.n,):
            raise ValueError("bound vectors do not match the problem dimension")
        if not np.all(np.isfinite(w0)):
            raise NonFiniteError("w0 contains non-finite entries")

        w = self._push_inside(np.concatenate([w0, np.zeros(lp.mi)]))[: lp.n]
        c_i0 = p.constraints_ineq(w)
        s0 = np.maximum(c_i0, o.bound_push * np.maximum(1.0, np.abs(c_i0)))
        v = self._push_inside(np.concatenate([w, s0]))
        self._check_finite(v)

        fin_l, fin_u = np.isfinite(lp.vl), np.isfinite(lp.vu)
        zl = np.where(fin_l, 1.0, 0.0)
        zu = np.where(fin_u, 1.0, 0.0)
        mu = o.mu_init
        mu_min = o.kkt_tolerance / 10.0
        y = self._initial_y(v, zl, zu)
        nu = 1.0
        dw_last = 0.0
        damping = 0.0
        bfgs = np.eye(lp.n) if self.mode == "bfgs" else None
        history = []
        status = MAX_ITERATIONS
        it = 0

        f = lp.f(v)
        g = lp.grad(v)
        c = lp.c(v)
        jac = lp.jac(v)

        for it in range(o.max_iterations + 1):
            mult = self._multipliers(v, y, zl, zu)
            kkt = kkt_residuals(p, v[: lp.n], mult)
            slack_gap = _inf(c[lp.me:])
            kkt = (kkt[0], kkt[1], max(kkt[2], slack_gap), kkt[3])
            entry = {
                "iter": it, "f": f, "inf_pr": _inf(c), "inf_du": kkt[0], "mu": mu,
                "step": history[-1]["step_taken"] if history else 0.0,
            }
            if max(kkt) <= o.kkt_tolerance:
                status = CONVERGED
                entry["step_taken"] = 0.0
                history.append(entry)
                self._log(entry)
                break
            if it == o.max_iterations:
                entry["step_taken"] = 0.0
                history.append(entry)
                self._log(entry)
                break

            # barrier update (possibly several times in a row)
            while mu > mu_min and self._barrier_error(v, g, c, jac, y, zl, zu, mu) <= self.kappa_eps * mu:
                mu = max(mu_min, min(o.mu_reduction * mu, mu**1.5))
                nu = max(nu, 1.0)
            tau = max(o.tau, 1.0 - mu)

            sigma = np.zeros(lp.nv)
            dl, du = self._gaps(v)
            sigma[fin_l] += zl[fin_l] / dl[fin_l]
            sigma[fin_u] += zu[fin_u] / du[fin_u]
            if self.mode == "exact":
                w_mat = lp.hess(v, y)
            else:
                w_mat = sp.block_diag([sp.csr_matrix(bfgs), sp.csr_matrix((lp.mi, lp.mi))]).tocsr()
            grad_phi = g + self._barrier_grad(v, mu)
            rhs = -np.concatenate([grad_phi + jac.T @ y, c])

            solved = self._regularized_solve(w_mat, jac, sigma, rhs, c, dw_last, damping)
            if solved is None:
                status = NUMERICAL_FAILURE
                entry["step_taken"] = 0.0
                history.append(entry)
                self._log(entry)
                break
            lu, dwv, dcv, sol = solved
            if dwv > 0:
                dw_last = dwv
            dv = sol[: lp.nv]
            dy = sol[lp.nv:]

            # bound multiplier steps
            dzl = np.zeros(lp.nv)
            dzu = np.zeros(lp.nv)
            dzl[fin_l] = mu / dl[fin_l] - zl[fin_l] - zl[fin_l] / dl[fin_l] * dv[fin_l]
            dzu[fin_u] = mu / du[fin_u] - zu[fin_u] + zu[fin_u] / du[fin_u] * dv[fin_u]

            alpha_max = self._max_step(v, dv, lp.vl, lp.vu, tau)
            alpha_z = min(
                self._max_step(zl, dzl, np.where(fin_l, 0.0, -np.inf), np.full(lp.nv, np.inf), tau),
                self._max_step(zu, dzu, np.where(fin_u, 0.0, -np.inf), np.full(lp.nv, np.inf), tau),
            )

            # penalty parameter and directional derivative of the merit
            c_norm = np.sum(np.abs(c))
            curv = dv @ (w_mat @ dv) + dv @ (sigma * dv)
            if c_norm > 0:
                nu_req = (grad_phi @ dv + 0.5 * max(curv, 0.0)) / ((1 - self.rho_penalty) * c_norm)
                if nu < nu_req:
                    nu = nu_req + 1e-3
            merit0 = f + self._barrier(v, mu) + nu * c_norm
            deriv = grad_phi @ dv - nu * c_norm

            accepted = None
            alpha = alpha_max
            first = True
            while alpha >= self.min_step:
                v_trial = v + alpha * dv
                f_trial, c_trial = self._eval_fc(v_trial)
                if f_trial is not None:
                    merit = f_trial + self._barrier(v_trial, mu) + nu * np.sum(np.abs(c_trial))
                    if merit <= merit0 + self.eta_armijo * alpha * deriv:
                        accepted = (alpha, v_trial, f_trial, c_trial)
                        break
                    if first and c_norm > 0:
                        soc = self._second_order_correction(lu, v, dv, c_trial, alpha, tau, merit0,
                                                            deriv, mu, nu)
                        if soc is not None:
                            accepted = soc
                            break
                first = False
                alpha *= 0.5
            if accepted is None:
                status = INFEASIBLE if _inf(c) > o.kkt_tolerance else NUMERICAL_FAILURE
                entry["step_taken"] = 0.0
                history.append(entry)
                self._log(entry)
                break

            alpha, v_new, f, c_new = accepted
            entry["step_taken"] = alpha
            # steps cut hard by the line search mean the quadratic model is
            # poor; damp the Hessian more until full steps come back
            if alpha < 0.1 * alpha_max:
                damping = min(max(self.damping_growth * max(dwv, damping), 1e-6), 1e6)
            elif alpha == alpha_max:
                damping = damping / self.damping_decay if damping > 1e-7 else 0.0
            entry["regularization"] = dwv
            entry["alpha_max"] = alpha_max
            entry["merit"] = (merit0, f + self._barrier(v_new, mu) + nu * np.sum(np.abs(c_new)))
            history.append(entry)
            self._log(entry)

            y_new = y + alpha * dy
            a_z = min(alpha_z, alpha_max)
            zl = zl + a_z * dzl
            zu = zu + a_z * dzu
            v_old, g_old, jac_old = v, g, jac
            v = v_new
            c = c_new
            g = lp.grad(v)
            jac = lp.jac(v)
            y = y_new
            zl, zu = self._safeguard_z(v, zl, zu, mu)
            if bfgs is not None:
                bfgs = _damped_bfgs(bfgs, v[: lp.n] - v_old[: lp.n],
                                    (g + jac.T @ y)[: lp.n] - (g_old + jac_old.T @ y)[: lp.n])

        mult = self._multipliers(v, y, zl, zu)
        w_final = v[: lp.n].copy()
        kkt = kkt_residuals(p, w_final, mult)
        return SolveOutcome(
            w=w_final,
            multipliers=mult,
            status=status,
            iterations=it,
            objective=p.objective(w_final),
            kkt=kkt,
            log=history,
            slack=v[lp.n:].copy(),
            seconds=time.perf_counter() - t_start,
        )

    def _log(self, e):
        if self.opts.verbose:
            line = (f"{e['iter']:4d} {e['f']: .8e} {e['inf_pr']:.2e} {e['inf_du']:.2e} "
                    f"{e['mu']:.1e} {e['step']:.2e}")
            if e["iter"] == 0:
                print("iter  f               ||c||    ||gradL||  mu      step")
            print(line)
        log.debug("ipm %s", e)

    def _check_finite(self, v):
        lp = self.lp
        vals = [np.atleast_1d(lp.f(v)), lp.grad(v), lp.c(v)]
        for arr in vals:
            bad = np.nonzero(~np.isfinite(arr))[0]
            if bad.size:
                raise NonFiniteError(f"evaluation is non-finite at index {int(bad[0])}")

    def _eval_fc(self, v):
        try:
            with np.errstate(all="ignore"):
                f = self.lp.f(v)
                c = self.lp.c(v)
        except (ValueError, ZeroDivisionError, FloatingPointError):
            return None, None
        if not (np.isfinite(f) and np.all(np.isfinite(c))):
            return None, None
        return f, c

    def _initial_y(self, v, zl, zu):
        lp = self.lp
        if lp.m == 0:
            return np.zeros(0)
        jac = lp.jac(v)
        g = lp.grad(v) - zl + zu
        kkt = sp.bmat([[sp.identity(lp.nv), jac.T], [jac, None]], format="csc")
        try:
            sol = spla.splu(kkt).solve(np.concatenate([-g, np.zeros(lp.m)]))
        except RuntimeError:
            return np.zeros(lp.m)
        y = sol[lp.nv:]
        if not np.all(np.isfinite(y)) or _inf(y) > 1e3:
            return np.zeros(lp.m)
        return y

    def _barrier_error(self, v, g, c, jac, y, zl, zu, mu):
        dl, du = self._gaps(v)
        fl, fu = np.isfinite(dl), np.isfinite(du)
        stat = g + jac.T @ y - zl + zu
        kd = self.barrier_damping * mu
        stat[fl & ~fu] += kd
        stat[fu & ~fl] -= kd
        comp = np.concatenate([dl[fl] * zl[fl] - mu, du[fu] * zu[fu] - mu])
        return max(_inf(stat), _inf(c), _inf(comp))

    def _regularized_solve(self, w_mat, jac, sigma, rhs, c, dw_last, damping=0.0):
        """Solve the KKT system, shifting the Hessian until the inertia is right."""
        lp = self.lp
        dc = self.constraint_regularization if lp.m else 0.0
        dw = damping
        floor = self.opts.regularization_floor
        for _ in range(60):
            try:
                lu, n_pos, n_neg = self._factor(w_mat, jac, sigma, dw, dc)
            except RuntimeError:
                lu = None
            if lu is not None and n_pos == lp.nv and n_neg == lp.m:
                sol = lu.solve(rhs)
                if np.all(np.isfinite(sol)):
                    return lu, dw, dc, sol
            if lu is not None and n_pos + n_neg < lp.nv + lp.m:
                dc = max(dc * 10.0, floor)
            if dw == damping:
                first = 1e-4 if dw_last == 0.0 else max(floor, dw_last / 3.0)
                dw = max(first, 8.0 * dw)
            else:
                dw *= 8.0 if dw_last else 100.0
            if dw > 1e40:
                return None
        return None

    def _second_order_correction(self, lu, v, dv, c_trial, alpha, tau, merit0, deriv, mu, nu):
        """Up to ``max_soc`` corrections of the trial step toward the constraints."""
        lp = self.lp
        d_soc = alpha * dv
        c_prev = c_trial
        for _ in range(self.max_soc):
            corr = lu.solve(np.concatenate([np.zeros(lp.nv), -c_prev]))[: lp.nv]
            d_soc = d_soc + corr
            a_soc = self._max_step(v, d_soc, lp.vl, lp.vu, tau)
            v_trial = v + a_soc * d_soc
            f_trial, c_new = self._eval_fc(v_trial)
            if f_trial is None:
                return None
            merit = f_trial + self._barrier(v_trial, mu) + nu * np.sum(np.abs(c_new))
            if merit <= merit0 + self.eta_armijo * alpha * deriv:
                return alpha * a_soc, v_trial, f_trial, c_new
            if a_soc < 1.0 or np.sum(np.abs(c_new)) > 0.99 * np.sum(np.abs(c_prev)):
                return None
            c_prev = c_new
        return None

    def _safeguard_z(self, v, zl, zu, mu):
        dl, du = self._gaps(v)
        fl, fu = np.isfinite(dl), np.isfinite(du)
        k = self.z_safeguard
        zl = zl.copy()
        zu = zu.copy()
        zl[fl] = np.clip(zl[fl], mu / (k * dl[fl]), k * mu / dl[fl])
        zu[fu] = np.clip(zu[fu], mu / (k * du[fu]), k * mu / du[fu])
        return zl, zu


class _RefinedLU:
    """Factorization wrapper that polishes solves by iterative refinement."""

    def __init__(self, lu, matrix, perm, steps=2):
        self.lu = lu
        self.matrix = matrix
        self.perm = perm
        self.steps = steps

    def _solve(self, rhs):
        x = np.empty_like(rhs)
        x[self.perm] = self.lu.solve(rhs[self.perm])
        return x

    def solve(self, rhs):
        x = self._solve(rhs)
        for _ in range(self.steps):
            x = x + self._solve(rhs - self.matrix @ x)
        return x


def _damped_bfgs(b, s, y):
    """Powell-damped BFGS update, keeps ``b`` positive definite."""
    ss = s @ s
    if ss < 1e-20:
        return b
    bs = b @ s
    sbs = s @ bs
    sy = s @ y
    if sy < 0.2 * sbs:
        theta = 0.8 * sbs / (sbs - sy)
        y = theta * y + (1 - theta) * bs
        sy = s @ y
    return b - np.outer(bs, bs) / sbs + np.outer(y, y) / sy


def solve(problem, w0, options=None):
    """Run the interior-point method from ``w0``."""
    return InteriorPointSolver(problem, options).solve(w0)
