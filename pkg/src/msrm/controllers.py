"""Tracking controllers in configuration space.

All laws act on the *nominal* model terms (``M``, ``C``, ``N`` built from the
controller's parameter set), so parametric uncertainty enters only through
the plant. Three laws are provided:

* ``absm_control``: adaptive back-stepping sliding mode with a lumped
  uncertainty estimate ``D_hat`` (see :func:`absm_adaptation`);
* ``sm_control``: the same structure without adaptation and ``nu = 1``;
* ``pd_control``: inverse-dynamics PD (computed torque).

The plant convention is ``M Omega_ddot + C Omega_dot + N = tau_c + tau_e - D``
with ``D`` the lumped uncertainty expressed on the nominal model, so a
positive ``D_hat`` is added to the torque to cancel it.
"""
from dataclasses import dataclass

import numpy as np

from .dynamics import solve_spd
from .errors import DomainError


@dataclass(frozen=True)
class ABSMParams:
    """Gains of the sliding-mode family (defaults are the tuned values).

    ``epsilon`` is a scalar standing for ``epsilon * I``.
    """

    epsilon: float = 2.9
    nu: float = 1.9
    gamma: float = 1.1
    lam: float = 10.5
    delta: float = 0.05
    eta: float = 1000.0

    def __post_init__(self):
        values = (self.epsilon, self.nu, self.gamma, self.lam, self.delta, self.eta)
        if min(values) <= 0:
            raise DomainError(f"controller gains must be positive, got {self}")
        if self.phi_norm < 0:
            raise DomainError(f"nu(epsilon + lam) - 0.25 must be >= 0, got {self.phi_norm}")

    @property
    def phi_norm(self):
        """Determinant of the per-coordinate 2x2 block of ``Phi``."""
        return self.nu * (self.epsilon + self.lam) - 0.25

    def phi_block(self):
        """2x2 block of ``Phi`` acting on ``(e_p_i, e_v_i)`` for one coordinate."""
        lam, nu = self.lam, self.nu
        return np.array([[self.epsilon + lam * nu * lam, nu * lam - 0.5],
                         [nu * lam - 0.5, nu]])


@dataclass(frozen=True)
class PDParams:
    kp: float = 125.0
    kd: float = 5.0

    def __post_init__(self):
        if np.min(self.kp) <= 0 or np.min(self.kd) <= 0:
            raise DomainError("PD gains must be positive definite")


@dataclass(frozen=True)
class TrackingErrors:
    e_p: np.ndarray
    e_p_dot: np.ndarray
    sigma: np.ndarray
    e_v: np.ndarray
    s: np.ndarray


def compute_errors(Omega, Omega_dot, Omega_d, Omega_d_dot, params=ABSMParams()):
    e_p = np.asarray(Omega, dtype=float) - Omega_d
    e_p_dot = np.asarray(Omega_dot, dtype=float) - Omega_d_dot
    sigma = params.epsilon * e_p
    e_v = e_p_dot + sigma
    s = params.lam * e_p + e_v
    return TrackingErrors(e_p, e_p_dot, sigma, e_v, s)


def _sliding_law(errors, Omega_d_ddot, terms, tau_e_est, params, nu):
    e = errors
    accel = (-params.lam * (e.e_v - params.epsilon * e.e_p) + Omega_d_ddot
             - params.epsilon * e.e_p_dot - nu * e.s
             - params.gamma * nu * np.tanh(e.s / params.delta))
    return terms.M @ accel + terms.coriolis_force + terms.N - tau_e_est


def absm_control(errors, Omega_d_ddot, nominal_terms, D_hat, tau_e_est, params=ABSMParams()):
    """Adaptive back-stepping sliding-mode torque.

    ``tanh(s / delta)`` is applied componentwise, so the switching part is
    bounded by ``gamma * nu * M`` per channel.
    """
    tau = _sliding_law(errors, Omega_d_ddot, nominal_terms, tau_e_est, params, params.nu)
    return tau + D_hat


def sm_control(errors, Omega_d_ddot, nominal_terms, tau_e_est, params=ABSMParams()):
    """Non-adaptive sliding-mode torque (``nu = 1``, no ``D_hat``)."""
    return _sliding_law(errors, Omega_d_ddot, nominal_terms, tau_e_est, params, 1.0)


def absm_adaptation(s, nominal_M, eta):
    """Uncertainty-estimate rate ``D_hat_dot = -Gamma M^{-T} s``.

    ``eta`` is either a positive scalar (``Gamma = eta * I``) or a symmetric
    positive-definite gain matrix ``Gamma``. Because the inertia entries are
    of order 1e-4, the scalar form gives an adaptation loop with natural
    frequency ``sqrt(eta) / |M|``; :func:`inertia_scaled_gain` produces a
    gain with the same Lyapunov argument but a frequency of ``sqrt(eta)``.
    """
    # M is symmetric, so M^{-T} s is an SPD solve
    w = solve_spd(nominal_M, np.asarray(s, dtype=float))
    if np.ndim(eta) == 0:
        return -float(eta) * w
    return -np.asarray(eta) @ w


def inertia_scaled_gain(M_ref, eta):
    """Constant adaptation gain ``Gamma = eta * M_ref M_ref^T``.

    With it the adaptation law becomes ``D_hat_dot = -eta M_ref M^{-1} s``,
    which equals ``-eta M_ref s`` whenever ``M`` is near ``M_ref``.
    """
    M_ref = np.asarray(M_ref, dtype=float)
    return eta * (M_ref @ M_ref.T)


def pd_control(errors, Omega_d_ddot, nominal_terms, params=PDParams()):
    """Computed-torque PD: ``tau = M u + C Omega_dot + N`` with
    ``u = Omega_d_ddot - kd e_p_dot - kp e_p``."""
    u = Omega_d_ddot - params.kd * errors.e_p_dot - params.kp * errors.e_p
    return nominal_terms.M @ u + nominal_terms.coriolis_force + nominal_terms.N


def lyapunov_v3_and_derivative(errors, D_tilde, params=ABSMParams(), gain=None):
    """Composite Lyapunov value and the negative quadratic bound on its rate.

    Returns ``(V3, -E^T Phi E)`` where ``V3 = 1/2 |e_p|^2 + 1/2 |s|^2 +
    1/2 D_tilde^T Gamma^{-1} D_tilde``. ``gain`` is the adaptation gain
    (scalar or matrix); it defaults to ``params.eta``.

    ``E^T Phi E = epsilon |e_p|^2 - e_p . e_v + nu |s|^2``.
    """
    e = errors
    D_tilde = np.asarray(D_tilde, dtype=float)
    gain = params.eta if gain is None else gain
    if np.ndim(gain) == 0:
        adapt = 0.5 * float(D_tilde @ D_tilde) / float(gain)
    else:
        adapt = 0.5 * float(D_tilde @ np.linalg.solve(gain, D_tilde))
    V3 = 0.5 * float(e.e_p @ e.e_p) + 0.5 * float(e.s @ e.s) + adapt
    quad = (params.epsilon * float(e.e_p @ e.e_p) - float(e.e_p @ e.e_v)
            + params.nu * float(e.s @ e.s))
    return V3, -quad


def lyapunov_v3_rate(errors, e_p_ddot, D_tilde, D_hat_dot, params=ABSMParams(), gain=None):
    """``dV3/dt`` along a trajectory, from the measured error acceleration.

    ``e_p . e_p_dot + s . s_dot - D_tilde^T Gamma^{-1} D_hat_dot`` with
    ``s_dot = (lam + epsilon) e_p_dot + e_p_ddot`` and the lumped
    uncertainty taken as constant. Unlike the bound returned by
    :func:`lyapunov_v3_and_derivative` this includes the switching term and
    any load-estimation error.
    """
    e = errors
    gain = params.eta if gain is None else gain
    s_dot = (params.lam + params.epsilon) * e.e_p_dot + np.asarray(e_p_ddot, dtype=float)
    D_hat_dot = np.asarray(D_hat_dot, dtype=float)
    if np.ndim(gain) == 0:
        adapt = float(D_tilde @ D_hat_dot) / float(gain)
    else:
        adapt = float(D_tilde @ np.linalg.solve(gain, D_hat_dot))
    return float(e.e_p @ e.e_p_dot + e.s @ s_dot) - adapt
