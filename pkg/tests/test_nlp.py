import numpy as np
import pytest

from cranetraj.nlp import (
    CONVERGED, Multipliers, NlpProblem, NonFiniteError, SolverOptions, kkt_residuals, solve,
)


def bound_qp():
    return NlpProblem(1, lambda w: w[0] ** 2, lambda w: 2 * w, lb=[1.0],
                      hess=lambda w, ye, yi: [[2.0]])


def rosenbrock(exact=True):
    def f(w):
        return (1 - w[0]) ** 2 + 100 * (w[1] - w[0] ** 2) ** 2

    def g(w):
        return np.array([-2 * (1 - w[0]) - 400 * w[0] * (w[1] - w[0] ** 2),
                         200 * (w[1] - w[0] ** 2)])

    def h(w, ye, yi):
        return np.array([[2 - 400 * (w[1] - 3 * w[0] ** 2), -400 * w[0]], [-400 * w[0], 200.0]])

    return NlpProblem(2, f, g, hess=h if exact else None)


def equality_qp():
    return NlpProblem(
        2, lambda w: w @ w, lambda w: 2 * w,
        eq=(lambda w: [w[0] + w[1] - 1.0], lambda w: [[1.0, 1.0]]),
        hess=lambda w, ye, yi: 2 * np.eye(2),
    )


def test_bound_qp():
    out = solve(bound_qp(), [5.0])
    assert out.status == CONVERGED
    assert out.w[0] == pytest.approx(1.0, abs=1e-6)
    assert out.multipliers.lower[0] == pytest.approx(2.0, abs=1e-5)


@pytest.mark.parametrize("exact", [True, False])
def test_rosenbrock(exact):
    out = solve(rosenbrock(exact), [-1.2, 1.0], SolverOptions(max_iterations=500))
    assert out.status == CONVERGED
    np.testing.assert_allclose(out.w, [1.0, 1.0], atol=1e-6)


def test_equality_qp():
    out = solve(equality_qp(), [3.0, -2.0])
    assert out.status == CONVERGED
    np.testing.assert_allclose(out.w, [0.5, 0.5], atol=1e-6)
    assert out.multipliers.eq[0] == pytest.approx(-1.0, abs=1e-6)


def test_inequality_constraint_multiplier():
    # min x^2 + y^2  s.t.  x + 2y >= 2: optimum (0.4, 0.8), multiplier 0.8
    prob = NlpProblem(
        2, lambda w: w @ w, lambda w: 2 * w,
        ineq=(lambda w: [w[0] + 2 * w[1] - 2.0], lambda w: [[1.0, 2.0]]),
        hess=lambda w, ye, yi: 2 * np.eye(2),
    )
    out = solve(prob, [0.0, 0.0])
    assert out.status == CONVERGED
    np.testing.assert_allclose(out.w, [0.4, 0.8], atol=1e-6)
    assert out.multipliers.ineq[0] == pytest.approx(0.8, abs=1e-6)
    assert np.all(out.slack > 0)


def test_kkt_residuals_at_hand_solved_optimum():
    mult = Multipliers(eq=np.array([-1.0]), ineq=np.zeros(0), lower=np.zeros(2), upper=np.zeros(2))
    res = kkt_residuals(equality_qp(), np.array([0.5, 0.5]), mult)
    assert max(res) <= 1e-12


def test_kkt_residuals_far_from_optimum():
    mult = Multipliers(eq=np.zeros(1), ineq=np.zeros(0), lower=np.zeros(2), upper=np.zeros(2))
    res = kkt_residuals(equality_qp(), np.array([4.0, -1.0]), mult)
    assert res[0] > 1e-6 and res[1] == pytest.approx(2.0)


def test_kkt_residuals_grow_with_perturbation():
    prob = equality_qp()
    out = solve(prob, [3.0, -2.0])
    rng = np.random.default_rng(11)
    means = []
    for delta in (1e-4, 1e-3, 1e-2, 1e-1):
        trials = [max(kkt_residuals(prob, out.w + delta * rng.normal(size=2), out.multipliers))
                  for _ in range(20)]
        means.append(np.mean(trials))
    assert all(a < b for a, b in zip(means, means[1:]))


def test_infeasible_problem_is_not_reported_converged():
    prob = NlpProblem(
        1, lambda w: w[0] ** 2, lambda w: 2 * w, ub=[1.0],
        eq=(lambda w: [w[0] - 2.0], lambda w: [[1.0]]), hess=lambda w, ye, yi: [[2.0]],
    )
    out = solve(prob, [0.0], SolverOptions(max_iterations=200))
    assert out.status != CONVERGED


def test_input_validation():
    with pytest.raises(ValueError, match="shape"):
        solve(bound_qp(), [1.0, 2.0])
    with pytest.raises(NonFiniteError):
        solve(bound_qp(), [np.nan])
    with pytest.raises(ValueError):
        SolverOptions(tau=1.0)
    with pytest.raises(ValueError):
        SolverOptions(mu_init=0.0)


def test_exact_hessian_requires_one():
    with pytest.raises(ValueError, match="exact Hessian"):
        solve(rosenbrock(exact=False), [0.0, 0.0], SolverOptions(hessian="exact"))


def test_log_is_deterministic():
    a = solve(rosenbrock(), [-1.2, 1.0])
    b = solve(rosenbrock(), [-1.2, 1.0])
    assert a.log == b.log
    np.testing.assert_array_equal(a.w, b.w)
    keys = {"iter", "f", "inf_pr", "inf_du", "mu", "step"}
    assert all(keys <= set(e) for e in a.log)


def test_verbose_prints_iteration_table(capsys):
    solve(bound_qp(), [5.0], SolverOptions(verbose=True))
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split()[:2] == ["iter", "f"]
    assert len(lines) > 2


def test_barrier_parameter_never_increases():
    out = solve(equality_qp(), [3.0, -2.0])
    mus = [e["mu"] for e in out.log]
    assert all(a >= b for a, b in zip(mus, mus[1:]))


@pytest.mark.parametrize("make, w0", [(rosenbrock, [-1.2, 1.0]), (equality_qp, [3.0, -2.0])])
def test_merit_decreases_along_accepted_steps(make, w0):
    out = solve(make(), w0)
    steps = [e["merit"] for e in out.log if "merit" in e]
    assert steps
    assert all(after <= before for before, after in steps)
