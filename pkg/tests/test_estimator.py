import math

import numpy as np
import pytest

from msrm import ConfigError, DomainError, RobotParams
from msrm.dynamics import conservative_vector, mass_matrix
from msrm.estimator import (check_gain, estimator_init, estimator_update,
                            residual_from_integral, residual_reference, static_step_response)

P = RobotParams()
LOAD = np.array([0.12, 0.0, 0.12, 0.0])


def test_initial_state():
    s = estimator_init([1.0, 0.2, -1.0, 0.3], [0.5, 0.0, 0.1, 0.0], P, 100.0)
    assert np.allclose(s.r, 0.0) and np.allclose(s.P, s.P0) and s.t == 0.0
    with pytest.raises(DomainError):
        estimator_init(np.zeros(4), np.zeros(4), P, 0.0)


def test_gain_limit():
    check_gain(1000.0, 1e-3)
    with pytest.raises(ConfigError):
        check_gain(1001.0, 1e-3)


@pytest.mark.parametrize("ki", [10.0, 100.0, 1000.0])
def test_static_step_matches_first_order_response(ki):
    t, r = static_step_response(LOAD, ki, 1e-3, 0.1)
    ref = residual_reference(LOAD, ki, t[:, None])
    # the exact discretization reproduces the closed form at the samples
    assert np.abs(r - ref).max() < 1e-12


def test_static_step_away_from_straight_pose():
    Omega = np.array([4.0, 0.3, -3.0, 1.2])
    t, r = static_step_response(LOAD, 100.0, 1e-3, 0.1, Omega=Omega)
    assert np.allclose(r, residual_reference(LOAD, 100.0, t[:, None]), atol=1e-12)


def test_accuracy_improves_with_gain():
    errs = []
    for ki in (10.0, 100.0, 1000.0):
        t, r = static_step_response(LOAD, ki, 1e-3, 0.1)
        errs.append(np.abs(r - LOAD).mean())
    assert errs[0] > errs[1] > errs[2]


def test_half_life():
    t, r = static_step_response(LOAD, 100.0, 1e-4, 0.02)
    k = int(np.argmax(r[:, 0] >= 0.5 * LOAD[0]))
    assert abs(t[k] - math.log(2) / 100.0) <= 1e-4
    assert np.all(np.diff(r[:, 0]) >= 0)


def test_integral_form_is_consistent_with_recursion():
    rng = np.random.default_rng(3)
    s = estimator_init(np.zeros(4), np.zeros(4), P, 50.0)
    Omega = np.zeros(4)
    for k in range(200):
        Omega = Omega + 1e-3 * rng.normal(size=4)
        v = rng.normal(size=4) * 0.1
        s = estimator_update(s, Omega, v, rng.normal(size=4) * 0.01, 1e-3, P)
        assert np.allclose(residual_from_integral(s), s.r, atol=1e-10)


def test_moving_robot_with_known_torque():
    # a prescribed motion with the torque computed from the momentum
    # balance (no C^T v term needed at constant inertia: straight, slow)
    K_I, dt = 100.0, 1e-3
    s = estimator_init(np.zeros(4), np.zeros(4), P, K_I)
    M = mass_matrix(np.zeros(4), P)
    v_prev = np.zeros(4)
    for k in range(1, 201):
        v = 1e-3 * np.sin(0.05 * k) * np.ones(4)
        tau_c = M @ (v - v_prev) / dt - LOAD + conservative_vector(np.zeros(4), P)
        s = estimator_update(s, np.zeros(4), v, tau_c, dt, P)
        v_prev = v
    assert np.allclose(s.r, LOAD * (1 - math.exp(-K_I * 0.2)), atol=1e-4)


def test_update_rejects_non_positive_step():
    s = estimator_init(np.zeros(4), np.zeros(4), P, 10.0)
    with pytest.raises(DomainError):
        estimator_update(s, np.zeros(4), np.zeros(4), np.zeros(4), 0.0, P)
