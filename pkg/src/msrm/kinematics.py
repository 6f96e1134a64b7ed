"""Constant-curvature kinematics of the two-segment manipulator.

Three coordinate sets are used throughout the package:

* actuator space ``q``: six cable lengths, three per segment (m);
* configuration space ``Omega = [kappa1, phi1, kappa2, phi2]``: curvature
  (1/m) and bending-plane angle (rad) of each segment;
* task space ``chi = [x, y, z, wx, wy, wz]``: tip position plus the
  rotation vector (axis times angle) of the tip frame.

The base sits at the origin with the undeformed backbone along +z. A segment
with ``kappa > 0`` and ``phi = 0`` bends toward -x. Negative curvature is
accepted everywhere and is equivalent to ``(-kappa, phi + pi)``; use
:func:`normalize_configuration` for the canonical form.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from ._kernels import SERIES_THRESHOLD
from .errors import DomainError, SingularityWarning

CURVATURE_EPS = 1e-6

_SQRT3 = math.sqrt(3.0)


def skew(v):
    """Cross-product matrix of a 3-vector."""
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def vee(W):
    """Inverse of :func:`skew` (uses the antisymmetric part)."""
    return 0.5 * np.array([W[2, 1] - W[1, 2], W[0, 2] - W[2, 0], W[1, 0] - W[0, 1]])


def rot_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def arc_functions(theta, series=None):
    """Return ``f = (1 - cos t)/t`` and ``g = sin t / t`` with their first
    two derivatives, as ``(f, f', f'', g, g', g'')``.

    ``series`` forces (True) or forbids (False) the Taylor branch; by
    default it is used for ``|theta| < SERIES_THRESHOLD``.
    """
    t = float(theta)
    if series is None:
        series = abs(t) < SERIES_THRESHOLD
    return _k.arc_functions(t, bool(series))


def _segment_rotation(theta, phi):
    u = np.array([-math.sin(phi), math.cos(phi), 0.0])
    U = skew(u)
    R = np.eye(3) - math.sin(theta) * U + 2.0 * math.sin(0.5 * theta) ** 2 * (U @ U)
    return R, U


def segment_transform(kappa, phi, length):
    """Homogeneous transform from the base to the tip of one segment.

    The rotation is ``Rz(phi) Ry(-kappa*l) Rz(-phi)`` and the translation is
    the end point of the circular arc. Near zero curvature the translation
    uses the series form, so the straight limit ``R = I, O = (0, 0, l)`` is
    reached continuously.
    """
    theta = kappa * length
    R, _ = _segment_rotation(theta, phi)
    f, _, _, g, _, _ = arc_functions(theta)
    H = np.eye(4)
    H[:3, :3] = R
    H[:3, 3] = length * np.array([-f * math.cos(phi), -f * math.sin(phi), g])
    return H


def literal_segment_transform(kappa, phi, length):
    """The segment transform exactly as commonly printed for this robot,
    entry by entry. Only defined for ``kappa > 0``; kept as a diagnostic.
    """
    if kappa <= 0:
        raise DomainError("literal transform needs kappa > 0")
    cp, sp = math.cos(phi), math.sin(phi)
    ckl, skl = math.cos(kappa * length), math.sin(kappa * length)
    a = ckl - 1.0
    return np.array([
        [cp * cp * a + 1.0, sp * cp * a, sp * ckl, cp * a / kappa],
        [sp * cp * a, ckl - cp * cp * a, sp * skl, -sp * a / kappa],
        [-cp * skl, -sp * skl, ckl, skl / kappa],
        [0.0, 0.0, 0.0, 1.0],
    ])


def transform_discrepancy(kappa, phi, length):
    """Per-entry difference ``segment_transform - literal_segment_transform``."""
    return segment_transform(kappa, phi, length) - literal_segment_transform(kappa, phi, length)


def format_transform_discrepancy(kappa, phi, length, tol=1e-12):
    """Human-readable listing of the entries where the two transforms differ."""
    D = transform_discrepancy(kappa, phi, length)
    lines = [f"kappa={kappa:g} phi={phi:g} l={length:g}"]
    for i, j in zip(*np.nonzero(np.abs(D) > tol)):
        lines.append(f"  H[{i + 1},{j + 1}]: composed - literal = {D[i, j]:+.6e}")
    if len(lines) == 1:
        lines.append("  no differences")
    return "\n".join(lines)


@dataclass(frozen=True)
class SegmentDerivatives:
    """Transform of one segment and its partials in ``(kappa, phi)``.

    ``dO[a]`` / ``dR[a]`` are first partials, ``ddO[a, b]`` / ``ddR[a, b]``
    second partials, with index 0 for kappa and 1 for phi.
    """

    O: np.ndarray
    R: np.ndarray
    dO: np.ndarray
    dR: np.ndarray
    ddO: np.ndarray
    ddR: np.ndarray


# positions of [[X_kk, X_kp], [X_pk, X_pp]] in the stacked families
_SECOND = np.array([[3, 4], [4, 5]])


def segment_derivatives(kappa, phi, length, second=True):
    Rf, Of = _k.families(float(kappa), float(phi), float(length))
    ddO = ddR = None
    if second:
        ddO = Of[_SECOND]
        ddR = Rf[_SECOND]
    return SegmentDerivatives(Of[0], Rf[0], Of[1:3], Rf[1:3], ddO, ddR)


def rotation_vector(R):
    """Axis-angle vector of a rotation matrix (angle in [0, pi]).

    The representation is singular at an angle of pi, where the axis sign is
    ambiguous; there the sign is chosen to agree with the antisymmetric part.
    """
    return _k.rotation_vector(np.ascontiguousarray(R, dtype=float))


def left_jacobian_inverse(omega):
    """Maps the spatial angular rate ``vee(dR R^T)`` to the rate of the
    rotation vector ``omega``."""
    return _k.left_jacobian_inverse(np.ascontiguousarray(omega, dtype=float))


@dataclass(frozen=True)
class ForwardKinematics:
    """Task state ``chi`` and the two frames of the chain (4x4 each)."""

    chi: np.ndarray
    base_to_mid: np.ndarray
    base_to_tip: np.ndarray

    @property
    def position(self):
        return self.chi[:3]


def forward_kinematics(Omega, params):
    k1, p1, k2, p2 = (float(v) for v in Omega)
    l1, l2 = params.lengths
    H1 = segment_transform(k1, p1, l1)
    H = H1 @ segment_transform(k2, p2, l2)
    chi = np.concatenate([H[:3, 3], rotation_vector(H[:3, :3])])
    return ForwardKinematics(chi, H1, H)


def tip_pose(Omega, params):
    """Tip position and rotation vector (the ``chi`` of
    :func:`forward_kinematics`) from the compiled kernel."""
    k1, p1, k2, p2 = (float(v) for v in Omega)
    return _k.tip_pose(k1, p1, k2, p2, *params.lengths)


def jacobian_config_to_task(Omega, params):
    """Analytic 6x4 Jacobian ``d chi / d Omega``.

    Rotational rows are derivatives of the rotation vector, so they share
    its singularity at a tip rotation angle of pi.
    """
    k1, p1, k2, p2 = (float(v) for v in Omega)
    return _k.config_jacobian(k1, p1, k2, p2, *params.lengths)


@dataclass(frozen=True)
class MassPointKinematics:
    """Positions of the two segment tips with first and second partials.

    ``positions[i]`` is tip ``i``; ``jac[i]`` is 3x4; ``hess[i][:, a, b]``
    is the second partial of tip ``i`` in ``Omega_a, Omega_b``.
    """

    positions: np.ndarray
    jac: np.ndarray
    hess: np.ndarray


def mass_point_kinematics(Omega, lengths, second=True):
    k1, p1, k2, p2 = (float(v) for v in Omega)
    pos, jac, hess = _k.mass_points(k1, p1, k2, p2, float(lengths[0]),
                                    float(lengths[1]), second)
    return MassPointKinematics(pos, jac, hess if second else None)


def actuators_to_configuration(q, r):
    """Cable lengths to per-segment ``(kappa, phi, l)``.

    ``q`` holds three lengths per segment (any number of segments). Returns
    an array of shape ``(n_segments, 3)``. Straight segments (curvature
    below ``CURVATURE_EPS``) get ``kappa = phi = 0``.
    """
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    if r <= 0 or np.any(q <= 0):
        raise DomainError("cable lengths and disk radius must be positive")
    out = np.empty((q.shape[0], 3))
    for i, (a, b, c) in enumerate(q):
        total = a + b + c
        radicand = a * a + b * b + c * c - a * b - b * c - c * a
        kappa = 2.0 * math.sqrt(max(radicand, 0.0)) / (r * total)
        if kappa < CURVATURE_EPS:
            kappa, phi = 0.0, 0.0
        else:
            phi = math.atan2(2.0 * a - b - c, _SQRT3 * (b - c))
            if phi <= -math.pi:
                phi += 2.0 * math.pi
        out[i] = kappa, phi, total / 3.0
    return out


def configuration_to_actuators(kappa, phi, length, r):
    """Cable lengths ``l (1 + r kappa sin(phi + 2 pi j / 3))`` for j = 0, 1, 2.

    Broadcasts over segments; returns shape ``(..., 3)``.
    """
    kappa, phi, length = np.broadcast_arrays(np.asarray(kappa, float),
                                             np.asarray(phi, float),
                                             np.asarray(length, float))
    if np.any(np.abs(kappa * length) >= 2 * math.pi):
        raise DomainError("bend angle kappa*l must stay below a full turn")
    offsets = np.array([0.0, 2 * math.pi / 3, 4 * math.pi / 3])
    q = length[..., None] * (1.0 + r * kappa[..., None] * np.sin(phi[..., None] + offsets))
    if np.any(q <= 0):
        raise DomainError(f"configuration needs non-positive cable length (r*kappa={r * kappa})")
    return q


def cable_lengths(Omega, params):
    """All six cable lengths for configuration ``Omega``."""
    Omega = np.asarray(Omega, dtype=float)
    return configuration_to_actuators(Omega[0::2], Omega[1::2],
                                      np.asarray(params.lengths), params.r_disk).ravel()


def jacobian_actuator_to_config(q, r):
    """Analytic 4x6 Jacobian of ``(kappa1, phi1, kappa2, phi2)`` in the six
    cable lengths.

    Both rows of a straight segment are non-differentiable; they are
    returned as zeros and a :class:`SingularityWarning` is issued.
    """
    q = np.asarray(q, dtype=float).reshape(2, 3)
    J = np.zeros((4, 6))
    for i, (a, b, c) in enumerate(q):
        total = a + b + c
        radicand = a * a + b * b + c * c - a * b - b * c - c * a
        root = math.sqrt(max(radicand, 0.0))
        if 2.0 * root / (r * total) < CURVATURE_EPS:
            warnings.warn(f"segment {i + 1} is straight; its Jacobian rows are undefined",
                          SingularityWarning, stacklevel=2)
            continue
        d_rad = np.array([2 * a - b - c, 2 * b - a - c, 2 * c - a - b])
        J[2 * i, 3 * i:3 * i + 3] = (2.0 / r) * (d_rad / (2.0 * root * total) - root / total**2)
        num, den = 2 * a - b - c, _SQRT3 * (b - c)
        d_num = np.array([2.0, -1.0, -1.0])
        d_den = _SQRT3 * np.array([0.0, 1.0, -1.0])
        J[2 * i + 1, 3 * i:3 * i + 3] = (den * d_num - num * d_den) / (num * num + den * den)
    return J


def normalize_configuration(Omega):
    """Canonical form: ``kappa >= 0`` and ``phi`` in ``(-pi, pi]``."""
    out = np.array(Omega, dtype=float)
    for i in (0, 2):
        if out[i] < 0:
            out[i] = -out[i]
            out[i + 1] += math.pi
        phi = math.remainder(out[i + 1], 2 * math.pi)
        out[i + 1] = math.pi if phi <= -math.pi else phi
    return out
