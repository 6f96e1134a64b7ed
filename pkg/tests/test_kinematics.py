import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.spatial.transform import Rotation

from helpers import central_difference, configuration, random_configuration
from msrm import DomainError, RobotParams, SingularityWarning
from msrm.kinematics import (actuators_to_configuration, arc_functions, cable_lengths,
                             configuration_to_actuators, format_transform_discrepancy,
                             forward_kinematics, jacobian_actuator_to_config,
                             jacobian_config_to_task, left_jacobian_inverse,
                             literal_segment_transform, mass_point_kinematics,
                             normalize_configuration, rotation_vector, segment_derivatives,
                             segment_transform, skew, tip_pose, vee)
from msrm._kernels import SERIES_THRESHOLD

P = RobotParams()


def arc_oracle(kappa, phi, length):
    """Segment frame by brute force: compose elementary rotations with scipy
    and integrate the unit tangent along the arc."""
    def rot(s):
        return (Rotation.from_euler("z", phi) * Rotation.from_euler("y", -kappa * s)
                * Rotation.from_euler("z", -phi))
    tangent = [lambda s, i=i: rot(s).apply([0.0, 0.0, 1.0])[i] for i in range(3)]
    O = np.array([quad(f, 0.0, length, epsabs=1e-14, epsrel=1e-13)[0] for f in tangent])
    return rot(length).as_matrix(), O


# -- arc functions -------------------------------------------------------------

def test_arc_function_branches_agree_at_threshold():
    for t in (0.9 * SERIES_THRESHOLD, SERIES_THRESHOLD, -0.5 * SERIES_THRESHOLD):
        a = np.array(arc_functions(t, series=True))
        b = np.array(arc_functions(t, series=False))
        assert np.allclose(a, b, rtol=0, atol=1e-11)


@pytest.mark.parametrize("t", [1e-4, 5e-3, 0.3, 2.0, -1.7, 5.5])
def test_arc_function_derivatives_match_finite_differences(t):
    h = 1e-5
    f = np.array(arc_functions(t))
    fp = np.array(arc_functions(t + h))
    fm = np.array(arc_functions(t - h))
    d = (fp - fm) / (2 * h)
    assert np.allclose(d[[0, 3]], f[[1, 4]], atol=1e-8)
    assert np.allclose(d[[1, 4]], f[[2, 5]], atol=1e-8)


# -- segment transform ----------------------------------------------------------

def test_straight_segment_is_a_pure_translation():
    H = segment_transform(0.0, 0.4, 0.15)
    assert np.allclose(H[:3, :3], np.eye(3), atol=1e-15)
    assert np.allclose(H[:3, 3], [0.0, 0.0, 0.15], atol=1e-15)
    assert np.array_equal(H[3], [0.0, 0.0, 0.0, 1.0])


def test_quarter_turn_bends_toward_negative_x():
    l = 0.15
    H = segment_transform(math.pi / 2 / l, 0.0, l)
    r = 2 * l / math.pi
    assert np.allclose(H[:3, 3], [-r, 0.0, r], atol=1e-14)
    # tip tangent points along -x
    assert np.allclose(H[:3, 2], [-1.0, 0.0, 0.0], atol=1e-14)


@pytest.mark.parametrize("kappa,phi", [(3.0, 0.7), (-8.0, 2.5), (1e-4, -1.0), (20.0, -2.9)])
def test_segment_transform_matches_brute_force_arc(kappa, phi):
    R, O = arc_oracle(kappa, phi, 0.15)
    H = segment_transform(kappa, phi, 0.15)
    assert np.allclose(H[:3, :3], R, atol=1e-12)
    assert np.allclose(H[:3, 3], O, atol=1e-12)


@given(st.floats(-40, 40), st.floats(-np.pi, np.pi))
def test_segment_rotation_is_proper(kappa, phi):
    R = segment_transform(kappa, phi, 0.15)[:3, :3]
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-10)
    assert abs(np.linalg.det(R) - 1.0) < 1e-10


def test_printed_matrix_is_not_a_rotation():
    # diagnostic only: the entry-by-entry matrix violates orthogonality, the
    # composed transform used everywhere does not
    R = literal_segment_transform(3.0, 0.7, 0.15)[:3, :3]
    assert np.abs(R.T @ R - np.eye(3)).max() > 1e-2
    text = format_transform_discrepancy(3.0, 0.7, 0.15)
    assert "H[1,3]" in text
    with pytest.raises(DomainError):
        literal_segment_transform(0.0, 0.0, 0.15)


def test_segment_derivatives_match_finite_differences():
    k, p, l = 4.0, 0.6, 0.15
    d = segment_derivatives(k, p, l)
    fk = lambda x: segment_transform(x[0], x[1], l)
    J = central_difference(fk, [k, p])
    for a in range(2):
        assert np.allclose(d.dR[a], J[:3, :3, a], atol=1e-8)
        assert np.allclose(d.dO[a], J[:3, 3, a], atol=1e-8)
    first = lambda x: np.concatenate([segment_derivatives(x[0], x[1], l).dO.ravel()])
    H = central_difference(first, [k, p]).reshape(2, 3, 2)
    for a in range(2):
        for b in range(2):
            assert np.allclose(d.ddO[a, b], H[a, :, b], atol=1e-7)


# -- rotations -------------------------------------------------------------------

def test_skew_vee_roundtrip(rng):
    v = rng.normal(size=3)
    assert np.allclose(vee(skew(v)), v)
    assert np.allclose(skew(v) @ [1.0, 2.0, 3.0], np.cross(v, [1.0, 2.0, 3.0]))


@given(st.tuples(*[st.floats(-1, 1)] * 3), st.floats(0.0, 3.1))
def test_rotation_vector_matches_scipy(axis, angle):
    a = np.array(axis)
    if np.linalg.norm(a) < 1e-3:
        return
    w = angle * a / np.linalg.norm(a)
    R = Rotation.from_rotvec(w).as_matrix()
    assert np.allclose(rotation_vector(R), w, atol=1e-9)


def test_rotation_vector_near_pi():
    w = (math.pi - 1e-9) * np.array([0.0, 0.6, 0.8])
    R = Rotation.from_rotvec(w).as_matrix()
    assert np.allclose(rotation_vector(R), w, atol=1e-6)


def test_left_jacobian_inverse_maps_spatial_rate(rng):
    for _ in range(20):
        w0 = rng.normal(size=3)
        w0 *= rng.uniform(0, 3.0) / np.linalg.norm(w0)
        u = rng.normal(size=3)
        R0 = Rotation.from_rotvec(w0).as_matrix()
        f = lambda d: rotation_vector(Rotation.from_rotvec(d[0] * u).as_matrix() @ R0)
        fd = central_difference(f, [0.0])[:, 0]
        assert np.allclose(left_jacobian_inverse(w0) @ u, fd, atol=1e-7)


# -- forward kinematics and Jacobians -----------------------------------------------

@given(configuration)
def test_forward_kinematics_composes_segments(Omega):
    fk = forward_kinematics(Omega, P)
    H = segment_transform(Omega[0], Omega[1], 0.15) @ segment_transform(Omega[2], Omega[3], 0.15)
    assert np.allclose(fk.base_to_tip, H, atol=1e-13)
    assert np.allclose(tip_pose(Omega, P), fk.chi, atol=1e-12)
    assert np.linalg.norm(fk.chi[:3]) <= sum(P.lengths) + 1e-12


def test_task_jacobian_matches_finite_differences(rng):
    for Omega in random_configuration(rng, 50):
        J = jacobian_config_to_task(Omega, P)
        fd = central_difference(lambda x: tip_pose(x, P), Omega)
        assert np.allclose(J, fd, atol=1e-6 * max(1.0, np.abs(fd).max()))


def test_mass_point_partials_match_finite_differences(rng):
    Omega = random_configuration(rng)
    mp = mass_point_kinematics(Omega, P.lengths)
    fd = central_difference(lambda x: mass_point_kinematics(x, P.lengths, False).positions,
                            Omega)
    assert np.allclose(mp.jac, fd, atol=1e-8)
    fd2 = central_difference(lambda x: mass_point_kinematics(x, P.lengths, False).jac,
                             Omega, h=1e-5)
    assert np.allclose(mp.hess, fd2, atol=1e-7)
    assert np.allclose(mp.positions[1], tip_pose(Omega, P)[:3])


# -- actuator space -----------------------------------------------------------------

def test_straight_segment_has_equal_cables():
    q = configuration_to_actuators(0.0, 1.0, 0.15, 0.03)
    assert np.allclose(q, 0.15)
    assert np.allclose(actuators_to_configuration(q, 0.03), [[0.0, 0.0, 0.15]])


def test_lengthening_one_cable_bends_the_segment():
    q = np.full(3, 0.15)
    q[0] += 1e-3
    k, p, _ = actuators_to_configuration(q, 0.03)[0]
    assert k > 0
    # the longer cable ends up on the outside of the bend
    assert np.argmax(configuration_to_actuators(k, p, 0.15, 0.03)) == 0


@given(st.floats(1e-3, 30.0), st.floats(-np.pi + 1e-9, np.pi))
def test_configuration_actuator_roundtrip(kappa, phi):
    q = configuration_to_actuators(kappa, phi, 0.15, 0.03)
    k, p, l = actuators_to_configuration(q, 0.03)[0]
    assert abs(k - kappa) < 1e-9 and abs(l - 0.15) < 1e-12
    assert abs(math.remainder(p - phi, 2 * math.pi)) < 1e-9
    # mean cable length is the arc length
    assert abs(q.mean() - 0.15) < 1e-15


def test_cable_lengths_shape_and_domain():
    q = cable_lengths([2.0, 0.3, -1.0, 0.0], P)
    assert q.shape == (6,)
    with pytest.raises(DomainError):
        configuration_to_actuators(50.0, 0.0, 0.15, 0.03)   # a full turn
    with pytest.raises(DomainError):
        configuration_to_actuators(40.0, 0.0, 0.15, 0.03)   # slack cable
    with pytest.raises(DomainError):
        actuators_to_configuration([0.1, 0.1, -0.1], 0.03)


def test_actuator_jacobian_matches_finite_differences(rng):
    for _ in range(20):
        Omega = np.array([rng.uniform(1, 20), rng.uniform(-3, 3),
                          rng.uniform(1, 20), rng.uniform(-3, 3)])
        q = cable_lengths(Omega, P)
        J = jacobian_actuator_to_config(q, P.r_disk)
        f = lambda x: actuators_to_configuration(x, P.r_disk)[:, :2].ravel()
        assert np.allclose(J, central_difference(f, q, h=1e-8), rtol=1e-5, atol=1e-3)


def test_actuator_jacobian_warns_for_straight_segment():
    q = cable_lengths([0.0, 0.0, 5.0, 1.0], P)
    with pytest.warns(SingularityWarning):
        J = jacobian_actuator_to_config(q, P.r_disk)
    assert not J[:2].any() and J[2:].any()


def test_uniform_cable_shift_scales_curvature():
    # adding the same length to all three cables leaves phi alone and
    # scales kappa by l / (l + shift)
    q = configuration_to_actuators(6.0, 0.4, 0.15, 0.03)
    k, p, l = actuators_to_configuration(q + 0.01, 0.03)[0]
    assert abs(p - 0.4) < 1e-12
    assert abs(k - 6.0 * 0.15 / 0.16) < 1e-12
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        J = jacobian_actuator_to_config(np.r_[q, q], 0.03)
    assert np.allclose(J[0, :3].sum(), -3 * 6.0 / (3 * 0.15), rtol=1e-9)


@given(configuration)
def test_normalization_preserves_pose(Omega):
    n = normalize_configuration(Omega)
    assert n[0] >= 0 and n[2] >= 0
    assert -math.pi < n[1] <= math.pi and -math.pi < n[3] <= math.pi
    assert np.allclose(forward_kinematics(n, P).base_to_tip, forward_kinematics(Omega, P).base_to_tip, atol=1e-12)
    assert np.allclose(normalize_configuration(n), n)
