"""Pseudo-rigid-body Lagrangian dynamics in configuration space.

Each segment contributes a bending spring/inertia on ``psi_i = kappa_i l_i``,
a torsional spring/inertia on ``phi_i`` and a point mass lumped at its tip.
The potential of the point masses is ``-m g z``, with ``z`` the height along
the undeformed backbone, so the straight pose is a minimum of gravity as
well as of the springs.

Standard form::

    M(Omega) Omega_ddot + C(Omega, Omega_dot) Omega_dot + N(Omega) = tau_e + tau_c
"""
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import DomainError
from .kinematics import mass_point_kinematics
from .params import RobotParams, perturb_params  # noqa: F401  (re-exported)

FD_STEP = 1e-6


@dataclass(frozen=True)
class DynamicsTerms:
    """Snapshot of ``M``, ``C``, ``N`` evaluated at ``(Omega, velocity)``."""

    M: np.ndarray
    C: np.ndarray
    N: np.ndarray
    velocity: np.ndarray

    @property
    def coriolis_force(self):
        return self.C @ self.velocity


def _pseudo_rigid_inertia(params):
    l1, l2 = params.lengths
    return np.diag([params.j_bend * l1 * l1, params.j_torsion,
                    params.j_bend * l2 * l2, params.j_torsion])


def _pseudo_rigid_stiffness(params):
    l1, l2 = params.lengths
    return np.diag([params.k_bend * l1 * l1, params.k_torsion,
                    params.k_bend * l2 * l2, params.k_torsion])


def potential_energy(Omega, params):
    Omega = np.asarray(Omega, dtype=float)
    mp = mass_point_kinematics(Omega, params.lengths, second=False)
    elastic = 0.5 * Omega @ _pseudo_rigid_stiffness(params) @ Omega
    heights = mp.positions[:, 2]
    return elastic - params.g * float(np.dot(params.masses, heights))


def kinetic_energy(Omega, Omega_dot, params):
    Omega_dot = np.asarray(Omega_dot, dtype=float)
    mp = mass_point_kinematics(Omega, params.lengths, second=False)
    T = 0.5 * Omega_dot @ _pseudo_rigid_inertia(params) @ Omega_dot
    for m, J in zip(params.masses, mp.jac):
        v = J @ Omega_dot
        T += 0.5 * m * float(v @ v)
    return T


def christoffel_coriolis(dM, Omega_dot):
    """Coriolis matrix from inertia partials ``dM[m] = dM/dOmega_m``.

    ``C[k, j] = 1/2 sum_m (dM[m, k, j] + dM[j, k, m] - dM[k, m, j]) v_m``;
    each ``dM[m]`` is symmetric, which is used to contract with matmuls.
    """
    a = (Omega_dot @ dM.reshape(4, 16)).reshape(4, 4)
    b = dM @ Omega_dot
    return 0.5 * (a + b.T - b)


def _kernel(Omega, Omega_dot, params):
    return _k.dynamics(np.asarray(Omega, dtype=float), np.asarray(Omega_dot, dtype=float),
                       *params.lengths, *params.masses, params.k_bend, params.k_torsion,
                       params.j_bend, params.j_torsion, params.g)


def mass_matrix(Omega, params):
    return _kernel(Omega, np.zeros(4), params)[0]


def mass_matrix_partials(Omega, params, method="analytic", step=FD_STEP):
    """``dM[k] = dM/dOmega_k``, analytically or by central differences."""
    Omega = np.asarray(Omega, dtype=float)
    if method == "analytic":
        return _kernel(Omega, np.zeros(4), params)[3]
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    dM = np.empty((4, 4, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = step
        dM[k] = (mass_matrix(Omega + e, params) - mass_matrix(Omega - e, params)) / (2 * step)
    return dM


def coriolis_matrix(Omega, Omega_dot, params, method="analytic"):
    if method == "analytic":
        return _kernel(Omega, Omega_dot, params)[1]
    dM = mass_matrix_partials(Omega, params, method=method)
    return christoffel_coriolis(dM, np.asarray(Omega_dot, dtype=float))


def conservative_vector(Omega, params):
    """Gradient of :func:`potential_energy` (springs plus gravity)."""
    return _kernel(Omega, np.zeros(4), params)[2]


def dynamics_terms(Omega, Omega_dot, params):
    """``M``, ``C`` and ``N`` in one pass."""
    Omega_dot = np.asarray(Omega_dot, dtype=float)
    M, C, N, _ = _kernel(Omega, Omega_dot, params)
    return DynamicsTerms(M, C, N, Omega_dot)


def solve_spd(M, b):
    """Solve ``M x = b`` for symmetric positive-definite ``M`` (Cholesky).

    Raises :class:`DomainError` when ``M`` is not positive definite.
    """
    x = _k.spd_solve(np.ascontiguousarray(M, dtype=float), np.ascontiguousarray(b, dtype=float))
    if not math.isfinite(x.sum()):
        raise DomainError("matrix is not positive definite or the right-hand side is not finite")
    return x


def forward_dynamics(Omega, Omega_dot, tau_c, tau_e, params, terms=None):
    """Configuration acceleration from the standard-form equation."""
    arrays = [np.asarray(v, dtype=float) for v in (Omega, Omega_dot, tau_c, tau_e)]
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise DomainError("forward_dynamics received non-finite input")
    Omega, Omega_dot, tau_c, tau_e = arrays
    if terms is None:
        terms = dynamics_terms(Omega, Omega_dot, params)
    rhs = tau_c + tau_e - terms.C @ Omega_dot - terms.N
    return solve_spd(terms.M, rhs)


def total_energy(Omega, Omega_dot, params):
    return kinetic_energy(Omega, Omega_dot, params) + potential_energy(Omega, params)
