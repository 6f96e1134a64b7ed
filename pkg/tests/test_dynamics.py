import numpy as np
import pytest
from hypothesis import given
from scipy.integrate import solve_ivp

from helpers import central_difference, configuration, random_configuration, velocity
from msrm import DomainError, RobotParams
from msrm.dynamics import (christoffel_coriolis, conservative_vector, coriolis_matrix,
                           dynamics_terms, forward_dynamics, kinetic_energy, mass_matrix,
                           mass_matrix_partials, perturb_params, potential_energy, solve_spd,
                           total_energy)

P = RobotParams()


def test_inertia_at_straight_pose():
    # rotary inertia of the springs plus the two tip masses, by hand
    M = mass_matrix(np.zeros(4), P)
    l = 0.15
    m = 0.25
    # point-mass contributions at the straight pose: segment 1 tip moves
    # l^2/2 per unit kappa1, segment 2 tip moves l^2/2 + l*l (lever) per kappa1
    # and l^2/2 per kappa2; only the x direction moves
    a1 = l * l / 2
    b1 = l * l / 2 + l * l
    b2 = l * l / 2
    expect = np.zeros((4, 4))
    expect[0, 0] = 4.5e-3 * l * l + m * (a1 ** 2 + b1 ** 2)
    expect[2, 2] = 4.5e-3 * l * l + m * b2 ** 2
    expect[0, 2] = expect[2, 0] = m * b1 * b2
    expect[1, 1] = expect[3, 3] = 9e-4
    assert np.allclose(M, expect, rtol=1e-12, atol=1e-16)


def test_potential_at_straight_pose():
    # tip masses at heights l1 and l1 + l2, potential -m g z
    assert potential_energy(np.zeros(4), P) == pytest.approx(-0.25 * 9.81 * 0.45, rel=1e-14)
    assert potential_energy(np.zeros(4), P) == pytest.approx(-1.1036, abs=1e-4)


@given(configuration)
def test_inertia_is_symmetric_positive_definite(Omega):
    M = mass_matrix(Omega, P)
    assert np.allclose(M, M.T, rtol=0, atol=1e-16)
    assert np.linalg.eigvalsh(M).min() > 0


@given(configuration, velocity)
def test_kinetic_energy_matches_inertia(Omega, Omega_dot):
    M = mass_matrix(Omega, P)
    assert np.isclose(0.5 * Omega_dot @ M @ Omega_dot, kinetic_energy(Omega, Omega_dot, P),
                      rtol=1e-11, atol=1e-16)


def test_inertia_partials_match_finite_differences(rng):
    for Omega in random_configuration(rng, 20):
        dM = mass_matrix_partials(Omega, P)
        fd = central_difference(lambda x: mass_matrix(x, P), Omega)
        assert np.allclose(dM, np.moveaxis(fd, -1, 0), atol=1e-9)
        assert np.allclose(dM, mass_matrix_partials(Omega, P, method="fd"), atol=1e-9)
    with pytest.raises(ValueError):
        mass_matrix_partials(Omega, P, method="magic")


def test_coriolis_equals_christoffel_construction(rng):
    for Omega in random_configuration(rng, 20):
        v = rng.uniform(-3, 3, 4)
        C = coriolis_matrix(Omega, v, P)
        assert np.allclose(C, coriolis_matrix(Omega, v, P, method="fd"), atol=1e-9)
        # C v from the Lagrangian: dM/dt v - 1/2 d(v^T M v)/dOmega
        dM = mass_matrix_partials(Omega, P)
        grad_T = np.array([v @ dM[k] @ v for k in range(4)])
        assert np.allclose(C @ v, np.tensordot(v, dM, 1) @ v - 0.5 * grad_T, atol=1e-12)


def test_christoffel_helper_on_simple_inertia():
    # M = diag(1, q0^2) (polar coordinates): C = [[0, -q0 v1], [q0 v1, q0 v0]]
    # padded to four coordinates
    q0, v = 2.0, np.array([0.3, -0.7, 0.0, 0.0])
    dM = np.zeros((4, 4, 4))
    dM[0, 1, 1] = 2 * q0
    C = christoffel_coriolis(dM, v)
    assert np.allclose(C[:2, :2], [[0.0, -q0 * v[1]], [q0 * v[1], q0 * v[0]]])


@given(configuration, velocity)
def test_inertia_rate_minus_twice_coriolis_is_skew(Omega, Omega_dot):
    dM = mass_matrix_partials(Omega, P)
    M_dot = np.tensordot(Omega_dot, dM, 1)
    S = M_dot - 2 * coriolis_matrix(Omega, Omega_dot, P)
    assert np.abs(S + S.T).max() < 1e-10


def test_conservative_vector_is_potential_gradient(rng):
    for Omega in random_configuration(rng, 20):
        fd = central_difference(lambda x: potential_energy(x, P), Omega)
        assert np.allclose(conservative_vector(Omega, P), fd, atol=1e-8)


def test_straight_pose_is_an_equilibrium():
    assert np.allclose(conservative_vector(np.zeros(4), P), 0.0, atol=1e-15)
    a = forward_dynamics(np.zeros(4), np.zeros(4), np.zeros(4), np.zeros(4), P)
    assert np.allclose(a, 0.0, atol=1e-12)


def test_free_response_matches_scipy_and_conserves_energy():
    # oracle: Lagrange's equations from the energy functions alone,
    # integrated by scipy with tight tolerances
    def rhs(t, x):
        q, v = x[:4], x[4:]
        M = mass_matrix(q, P)
        dM = mass_matrix_partials(q, P, method="fd")
        gT = np.array([v @ dM[k] @ v for k in range(4)])
        dU = central_difference(lambda y: potential_energy(y, P), q)
        return np.r_[v, np.linalg.solve(M, -np.tensordot(v, dM, 1) @ v + 0.5 * gT - dU)]

    x0 = np.array([3.0, 0.5, -2.0, 1.0, 0.5, 0.0, -1.0, 0.2])
    sol = solve_ivp(rhs, (0, 0.2), x0, rtol=1e-10, atol=1e-12, method="DOP853")

    def rhs_pkg(t, x):
        return np.r_[x[4:], forward_dynamics(x[:4], x[4:], np.zeros(4), np.zeros(4), P)]

    ref = solve_ivp(rhs_pkg, (0, 0.2), x0, rtol=1e-11, atol=1e-13, method="DOP853")
    assert np.allclose(ref.y[:, -1], sol.y[:, -1], atol=1e-5)
    E0 = total_energy(x0[:4], x0[4:], P)
    E1 = total_energy(ref.y[:4, -1], ref.y[4:, -1], P)
    assert abs(E1 - E0) < 1e-8 * abs(E0)


def test_forward_dynamics_balances_applied_torque(rng):
    Omega, v = random_configuration(rng), rng.uniform(-2, 2, 4)
    terms = dynamics_terms(Omega, v, P)
    a = rng.normal(size=4)
    tau_c = terms.M @ a + terms.C @ v + terms.N
    assert np.allclose(forward_dynamics(Omega, v, tau_c, np.zeros(4), P), a, atol=1e-8)
    with pytest.raises(DomainError):
        forward_dynamics(Omega, v, [np.nan, 0, 0, 0], np.zeros(4), P)


def test_solve_spd_rejects_indefinite_matrix():
    A = np.diag([1.0, 2.0, 3.0, 4.0])
    assert np.allclose(solve_spd(A, np.ones(4)), 1 / np.diag(A))
    with pytest.raises(DomainError):
        solve_spd(np.diag([1.0, -1.0, 1.0, 1.0]), np.ones(4))


def test_perturbed_plant_scales_inertia_and_stiffness():
    Q = perturb_params(P, 0.25)
    assert Q.masses == (0.3125, 0.3125)
    assert np.isclose(Q.k_bend, 0.625) and np.isclose(Q.j_torsion, 1.125e-3)
    assert Q.lengths == P.lengths and Q.g == P.g
    assert np.isclose(perturb_params(P, 0.1).masses[0], 0.275)
    Omega = np.array([2.0, 0.3, 1.0, -0.4])
    assert np.allclose(mass_matrix(Omega, Q), 1.25 * mass_matrix(Omega, P))
    for bad in (-0.1, 1.0):
        with pytest.raises(DomainError):
            perturb_params(P, bad)


def test_params_validation():
    with pytest.raises(DomainError):
        RobotParams(k_bend=0.0)
    with pytest.raises(DomainError):
        RobotParams(lengths=(0.15,))
