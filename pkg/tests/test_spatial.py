import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cranetraj.dynamics import CraneParams, DomainError, time_derivatives
from cranetraj.spatial import (
    E_H, E_T, L, T, V, SpatialGrid, implicit_residual, mayer_objective, spatial_rhs, to_spatial,
    to_time_state,
)
from oracles import forward_input, spatial_equivalence

P = CraneParams(m1=1.0, m2=1.0)


def hanging(v=1.0):
    return np.array([0.4, v, 3, 0, 3, 0, 0, 0, 0.1, 0.2])


def test_grid_validation():
    with pytest.raises(DomainError):
        SpatialGrid(1.0, 0.0, 10)
    with pytest.raises(DomainError):
        SpatialGrid(0.0, 1.0, 1)
    g = SpatialGrid(0.0, 1.0, 4)
    assert g.dx == 0.25
    np.testing.assert_allclose(g.points, [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_allclose(g.midpoints, [0.125, 0.375, 0.625, 0.875])


def test_rhs_at_equilibrium():
    f = spatial_rhs(hanging(), [0.0, P.m2 * P.g], 0.0, 0.0, P)
    np.testing.assert_array_equal(f, np.eye(10)[0])


def test_rhs_energy_rates_are_aux_powers():
    f = spatial_rhs(hanging(), [0.3, 2.0], 0.3, 0.7, P)
    assert (f[E_T], f[E_H]) == (0.3, 0.7)


def test_rhs_matches_time_derivatives():
    rng = np.random.default_rng(3)
    s = rng.normal(size=(100, 10))
    s[:, L] = rng.uniform(0.1, 3, 100)
    u = rng.normal(size=(100, 2))
    f = spatial_rhs(s, u, 0.0, 0.0, P)
    xdot = time_derivatives(to_time_state(s, 0.0), u, P)
    np.testing.assert_array_equal(f[:, 1:8], xdot[:, 1:8])
    assert np.all(f[:, T] == 1.0)


def test_rhs_rejects_slack_rope():
    s = hanging()
    s[L] = 0.0
    with pytest.raises(DomainError):
        spatial_rhs(s, [0, 0], 0, 0, P)


def test_residual_vanishes_on_scaled_rhs():
    s = hanging(v=2.0)
    s[6] = 0.05
    u = np.array([0.2, 9.0])
    f = spatial_rhs(s, u, 0.1, -0.2, P)
    np.testing.assert_allclose(implicit_residual(s, f / 2.0, u, 0.1, -0.2, P), 0.0, atol=1e-15)


def test_residual_at_standstill_cannot_vanish():
    s = hanging(v=0.0)
    r = implicit_residual(s, np.full(10, 123.0), [0.0, 9.81], 0, 0, P)
    assert r[T] == -1.0


def test_time_domain_motion_satisfies_spatial_dynamics():
    res, vmin = spatial_equivalence(forward_input(np.random.default_rng(5)))
    assert vmin >= 0.1
    assert np.max(np.abs(res)) <= 1e-6


def test_mayer_objective_examples():
    s = np.zeros(10)
    s[[T, E_T, E_H]] = 2.5, 7, 9
    assert mayer_objective(s, 1.0) == 2.5
    s[[E_T, E_H]] = 0.2, 0.3
    assert mayer_objective(s, 0.0) == pytest.approx(0.5)
    s[[T, E_T, E_H]] = 2, 0.4, 0.6
    assert mayer_objective(s, 0.5) == pytest.approx(1.5)
    with pytest.raises(DomainError):
        mayer_objective(s, 1.01)


@given(st.floats(0, 10), st.floats(-5, 5), st.floats(-5, 5))
def test_mayer_objective_affine_in_alpha(tf, et, eh):
    s = np.zeros(10)
    s[[T, E_T, E_H]] = tf, et, eh
    j = [mayer_objective(s, a) for a in (0.0, 0.3, 1.0)]
    slope = tf - (et + eh)
    assert j[1] == pytest.approx(j[0] + 0.3 * slope, abs=1e-12)
    assert j[2] == pytest.approx(j[0] + slope, abs=1e-12)


def test_energy_states_grow_with_nonnegative_aux_power():
    s = hanging(v=0.7)
    f = spatial_rhs(s, [0.1, 4.0], 0.2, 0.0, P)
    assert f[E_T] / s[V] >= 0 and f[E_H] / s[V] >= 0


def test_state_conversions_round_trip():
    x = np.array([0.3, 0.5, 0.6, 0.1, 0.6, 0.1, 0.02, -0.1])
    s = to_spatial(x, 1.2, 0.4, 0.5)
    assert s[T] == 1.2 and s[E_T] == 0.4 and s[E_H] == 0.5
    np.testing.assert_array_equal(to_time_state(s, 0.3), x)
