"""Generalized-momentum residual for external load estimation.

The residual

    r(t) = K_I [P(t) - int_0^t (tau_c - N + r) ds - P(0)],   P = M(Omega) Omega_dot

obeys ``r_dot = K_I (P_dot - tau_c + N - r)``, a first-order filter of the
external load (the ``C^T Omega_dot`` term of the momentum rate is dropped,
which is accurate for slow motion).

The discrete update treats ``P_dot - tau_c + N`` as constant over the step
and integrates the filter exactly, so it is stable and unbiased for any
``K_I * dt``; the running integral is kept consistent with the defining
formula above.
"""
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import conservative_vector, mass_matrix
from .errors import ConfigError, DomainError
from .params import RobotParams


@dataclass(frozen=True)
class ResidualEstimatorState:
    P: np.ndarray
    integral_acc: np.ndarray
    r: np.ndarray
    K_I: float
    P0: np.ndarray
    t: float = 0.0
    N_prev: np.ndarray = None


def estimator_init(Omega0, Omega0_dot, params, K_I):
    if not K_I > 0:
        raise DomainError(f"estimator gain must be positive, got {K_I}")
    P0 = mass_matrix(Omega0, params) @ np.asarray(Omega0_dot, dtype=float)
    zero = np.zeros(4)
    N0 = conservative_vector(Omega0, params)
    return ResidualEstimatorState(P0.copy(), zero, zero, float(K_I), P0, 0.0, N0)


def check_gain(K_I, dt):
    """The harness keeps ``K_I * dt <= 1`` so the residual bandwidth stays
    below the sampling rate."""
    if K_I * dt > 1.0:
        raise ConfigError(f"K_I * dt = {K_I * dt:g} exceeds 1 (K_I={K_I}, dt={dt})")


def estimator_update(state, Omega, Omega_dot, tau_c, dt, params, drive_integral=None):
    """Advance the residual over one step of length ``dt``.

    ``(Omega, Omega_dot)`` is the post-step plant state. ``drive_integral``
    is ``int (tau_c - N) ds`` over the step when the caller has it (the
    harness integrates it alongside the plant); otherwise it is formed with
    the trapezoidal rule from ``tau_c`` held over the step and ``N`` at the
    two ends.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    P = mass_matrix(Omega, params) @ np.asarray(Omega_dot, dtype=float)
    N = None
    if drive_integral is None:
        N = conservative_vector(Omega, params)
        N_prev = N if state.N_prev is None else state.N_prev
        drive_integral = dt * (np.asarray(tau_c, dtype=float) - 0.5 * (N + N_prev))
    # load seen over the step, held constant, then filtered exactly
    load = (P - state.P - drive_integral) / dt
    decay = math.exp(-state.K_I * dt)
    r = decay * state.r + (1.0 - decay) * load
    # int r over the step for the piecewise-constant load
    r_integral = load * dt - (r - state.r) / state.K_I
    integral_acc = state.integral_acc + drive_integral + r_integral
    return ResidualEstimatorState(P, integral_acc, r, state.K_I, state.P0, state.t + dt, N)


def static_step_response(tau_e, K_I, dt=1e-3, duration=0.1, Omega=None, params=None):
    """Residual of a robot held still at ``Omega`` while a constant load
    ``tau_e`` acts from ``t = 0``.

    The actuators balance the load (``tau_c = N - tau_e``), so the momentum
    stays zero and the whole load has to come from the integral term.
    Returns ``(t, r)`` with ``r`` of shape ``(n + 1, 4)``.
    """
    if params is None:
        params = RobotParams()
    Omega = np.zeros(4) if Omega is None else np.asarray(Omega, dtype=float)
    tau_e = np.broadcast_to(np.asarray(tau_e, dtype=float), (4,))
    zero = np.zeros(4)
    tau_c = conservative_vector(Omega, params) - tau_e
    n = int(round(duration / dt))
    t = dt * np.arange(n + 1)
    r = np.zeros((n + 1, 4))
    state = estimator_init(Omega, zero, params, K_I)
    for k in range(n):
        state = estimator_update(state, Omega, zero, tau_c, dt, params)
        r[k + 1] = state.r
    return t, r


def residual_from_integral(state):
    """Residual recomputed from the defining formula (consistency check)."""
    return state.K_I * (state.P - state.integral_acc - state.P0)


def residual_reference(tau_e, K_I, t):
    """First-order response ``tau_e (1 - exp(-K_I t))`` to a constant load."""
    return np.asarray(tau_e, dtype=float) * (1.0 - np.exp(-K_I * np.asarray(t, dtype=float)))
