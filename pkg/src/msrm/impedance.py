"""Time-varying impedance profiles, their stability certificate, and the
admittance reference that turns an estimated load into a compliant
configuration-space trajectory.

A profile describes target inertia ``M``, damping ``C`` and stiffness ``K``
(6x6, task space). Each is a scalar signal times a constant SPD shape
matrix::

    X(t) = (base + amp * sin(freq * t + phase)) * S_X

Damping may instead be tied to the inertia through a rate constant
``alpha``: ``C = M_dot + alpha * M`` ("coupled" damping). That choice makes
the first certificate matrix ``B = M_dot + alpha M - C`` vanish.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as _k
from .dynamics import solve_spd
from .errors import CertificationError, ConfigError
from .kinematics import jacobian_config_to_task

TASK_DIM = 6
# relative floor added to the configuration-space impedance; the bending
# plane angles of a straight segment have no task-space stiffness at all
DEFAULT_RIDGE = 0.1
# finite-difference step (s) for the Jacobian rate along the reference motion
JDOT_STEP = 1e-6


@dataclass(frozen=True)
class ScalarSignal:
    """``base + amp * sin(freq * t + phase)`` with analytic derivatives."""

    base: float
    amp: float = 0.0
    freq: float = 0.0
    phase: float = 0.0

    def __call__(self, t):
        a = self.freq * t + self.phase
        w = self.freq
        s, c = math.sin(a), math.cos(a)
        return (self.base + self.amp * s, self.amp * w * c, -self.amp * w * w * s)

    @property
    def lower_bound(self):
        return self.base - abs(self.amp)


def _shape(S):
    if S is None:
        return np.eye(TASK_DIM)
    S = np.asarray(S, dtype=float)
    if S.shape != (TASK_DIM, TASK_DIM) or not np.allclose(S, S.T, atol=1e-12):
        raise ConfigError("impedance shape matrices must be symmetric 6x6")
    if np.linalg.eigvalsh(S)[0] <= 0:
        raise ConfigError("impedance shape matrices must be positive definite")
    return S


@dataclass(frozen=True)
class ImpedanceProfile:
    """Target task-space impedance.

    ``damping`` is ``None`` for coupled damping ``C = M_dot + alpha M``
    (then ``alpha`` must be supplied before evaluation, typically by
    :func:`select_alpha`).
    """

    inertia: ScalarSignal
    stiffness: ScalarSignal
    damping: ScalarSignal = None
    alpha: float = None
    shapes: dict = field(default_factory=dict)
    name: str = "custom"

    def __post_init__(self):
        shapes = {k: _shape(self.shapes.get(k)) for k in ("M", "C", "K")}
        object.__setattr__(self, "shapes", shapes)
        signals = [self.inertia, self.stiffness] + ([self.damping] if self.damping else [])
        if any(sig.lower_bound <= 0 for sig in signals):
            raise ConfigError(f"profile {self.name!r} is not positive definite for all t")
        if self.alpha is not None and self.alpha <= 0:
            raise ConfigError("alpha must be positive")

    @property
    def coupled_damping(self):
        return self.damping is None

    def with_alpha(self, alpha):
        return replace(self, alpha=float(alpha))


def variable_profile(alpha=None):
    """Sinusoidal inertia and stiffness with coupled damping."""
    return ImpedanceProfile(
        inertia=ScalarSignal(15.0, 10.0, math.pi / 5),
        stiffness=ScalarSignal(30.0, 20.0, math.pi / 2),
        alpha=alpha, name="variable")


def invariable_profile():
    return ImpedanceProfile(
        inertia=ScalarSignal(15.0), stiffness=ScalarSignal(30.0),
        damping=ScalarSignal(20.0), name="invariable")


def profile_from_dict(d):
    """Build a profile from its JSON description (see the scenario schema)."""
    if isinstance(d, str):
        d = {"kind": d}
    kind = d.get("kind", "custom")
    alpha = d.get("alpha")
    if kind == "variable":
        return variable_profile(alpha)
    if kind == "invariable":
        return invariable_profile()
    if kind != "custom":
        raise ConfigError(f"unknown profile kind {kind!r}")

    def signal(key, required=True):
        v = d.get(key)
        if v is None:
            if required:
                raise ConfigError(f"custom profile needs {key!r}")
            return None
        if isinstance(v, (int, float)):
            return ScalarSignal(float(v))
        return ScalarSignal(float(v["base"]), float(v.get("amp", 0.0)),
                            float(v.get("freq", 0.0)), float(v.get("phase", 0.0)))

    return ImpedanceProfile(
        inertia=signal("inertia"), stiffness=signal("stiffness"),
        damping=signal("damping", required=False), alpha=alpha,
        shapes=d.get("shapes", {}), name=d.get("name", "custom"))


@dataclass(frozen=True)
class ProfileSample:
    M: np.ndarray
    M_dot: np.ndarray
    M_ddot: np.ndarray
    C: np.ndarray
    C_dot: np.ndarray
    K: np.ndarray
    K_dot: np.ndarray


def _alpha_for(profile, alpha):
    alpha = profile.alpha if alpha is None else alpha
    if alpha is None and profile.coupled_damping:
        raise ConfigError("coupled damping needs alpha; run select_alpha first")
    return alpha


def _scalars(profile, t, alpha):
    """Scalar signals ``(m, m', m'', c, c', k, k')``."""
    m, dm, ddm = profile.inertia(t)
    k, dk, _ = profile.stiffness(t)
    if profile.coupled_damping:
        c, dc = dm + alpha * m, ddm + alpha * dm
    else:
        c, dc, _ = profile.damping(t)
    return m, dm, ddm, c, dc, k, dk


def eval_profile(profile, t, alpha=None):
    """Matrices and derivatives of the profile at time ``t``.

    Returns ``(M, M_dot, M_ddot, C, C_dot, K, K_dot)`` as a
    :class:`ProfileSample`.
    """
    if t < 0:
        raise ValueError("profile time must be non-negative")
    alpha = _alpha_for(profile, alpha)
    m, dm, ddm, c, dc, k, dk = _scalars(profile, t, alpha)
    SM, SC, SK = profile.shapes["M"], profile.shapes["C"], profile.shapes["K"]
    if profile.coupled_damping:
        # C = M_dot + alpha M shares the inertia shape
        SC = SM
    return ProfileSample(m * SM, dm * SM, ddm * SM, c * SC, dc * SC, k * SK, dk * SK)


def task_matrices(profile, t, alpha=None):
    """``(M, C, K)`` of the profile at ``t`` without derivatives."""
    m, _, _, c, _, k, _ = _scalars(profile, t, _alpha_for(profile, alpha))
    SC = profile.shapes["M"] if profile.coupled_damping else profile.shapes["C"]
    return m * profile.shapes["M"], c * SC, k * profile.shapes["K"]


# -- certificate -------------------------------------------------------------

def certificate_matrices(sample, alpha):
    """``B``, ``Q`` and ``mu`` of the stability certificate at one sample."""
    p = sample
    B = p.M_dot + alpha * p.M - p.C
    Q = ((alpha * alpha + 2 * alpha) * p.M_dot - alpha * p.M_ddot + alpha * p.C_dot
         + p.K_dot - 2 * alpha * p.K)
    mu = -alpha * alpha * p.M - alpha * p.M_dot + p.K + alpha * p.C
    return B, Q, mu


def _lmax(A):
    return float(np.linalg.eigvalsh(A)[-1])


def _lmin(A):
    return float(np.linalg.eigvalsh(A)[0])


def stiffness_rate_bound(sample, alpha):
    """Upper bound on ``lambda_max(K_dot)`` that guarantees ``Q <= 0``.

    Obtained from Weyl's inequality applied term by term to ``Q``.
    """
    p = sample
    return (2 * alpha * _lmin(p.K) - (alpha * alpha + 2 * alpha) * _lmax(p.M_dot)
            + alpha * _lmin(p.M_ddot) - alpha * _lmax(p.C_dot))


@dataclass(frozen=True)
class StabilityReport:
    """Per-sample certificate eigenvalues and the overall verdict."""

    alpha: float
    times: np.ndarray
    b_max: np.ndarray
    q_max: np.ndarray
    mu_min: np.ndarray
    kdot_max: np.ndarray
    kdot_bound: np.ndarray
    b_margin: float
    q_margin: float
    mu_margin: float
    passed: bool
    violation_time: float = None
    violation_eigenvalue: float = None

    def to_dict(self, samples=False):
        d = {
            "alpha": self.alpha,
            "passed": self.passed,
            "b_margin": self.b_margin,
            "q_margin": self.q_margin,
            "mu_min": self.mu_margin,
            "n_samples": int(self.times.size),
            "violation_time": self.violation_time,
            "violation_eigenvalue": self.violation_eigenvalue,
        }
        if samples:
            for key in ("times", "b_max", "q_max", "mu_min", "kdot_max", "kdot_bound"):
                d[key] = getattr(self, key).tolist()
        return d


def _scalar_profile(profile):
    return all(np.array_equal(S, np.eye(TASK_DIM)) for S in profile.shapes.values())


def _certificate_eigs(profile, alpha, t_grid):
    """Vectorized ``(b_max, q_max, mu_min, kdot_max, kdot_bound)`` over the grid."""
    t = np.asarray(t_grid, dtype=float)
    if _scalar_profile(profile):
        # every matrix is scalar * I, so its eigenvalues are the scalar
        m, dm, ddm = _signal_arrays(profile.inertia, t)
        k, dk, _ = _signal_arrays(profile.stiffness, t)
        if profile.coupled_damping:
            c, dc = dm + alpha * m, ddm + alpha * dm
        else:
            c, dc, _ = _signal_arrays(profile.damping, t)
        b = dm + alpha * m - c
        q = (alpha * alpha + 2 * alpha) * dm - alpha * ddm + alpha * dc + dk - 2 * alpha * k
        mu = -alpha * alpha * m - alpha * dm + k + alpha * c
        bound = 2 * alpha * k - (alpha * alpha + 2 * alpha) * dm + alpha * ddm - alpha * dc
        return b, q, mu, dk, bound
    out = np.empty((5, t.size))
    for i, ti in enumerate(t):
        p = eval_profile(profile, ti, alpha)
        B, Q, mu = certificate_matrices(p, alpha)
        out[:, i] = (_lmax(B), _lmax(Q), _lmin(mu), _lmax(p.K_dot),
                     stiffness_rate_bound(p, alpha))
    return tuple(out)


def _signal_arrays(sig, t):
    a = sig.freq * t + sig.phase
    w = sig.freq
    return (sig.base + sig.amp * np.sin(a), sig.amp * w * np.cos(a),
            -sig.amp * w * w * np.sin(a))


def check_stability(profile, alpha, t_grid):
    """Evaluate the certificate on a time grid.

    The profile passes when ``lambda_max(B) <= 0``, ``lambda_max(Q) <= 0``
    and ``lambda_min(mu) > 0`` at every sample. Failures are reported, not
    raised; the first violating sample is recorded.
    """
    t = np.asarray(t_grid, dtype=float)
    b, q, mu, kdot, bound = _certificate_eigs(profile, alpha, t)
    bad = (b > 0) | (q > 0) | (mu <= 0)
    vt = ve = None
    if bad.any():
        i = int(np.argmax(bad))
        vt = float(t[i])
        # report the offending eigenvalue (mu reported as its negative)
        candidates = [(b[i], b[i] > 0), (q[i], q[i] > 0), (-mu[i], mu[i] <= 0)]
        ve = float(next(v for v, flag in candidates if flag))
    return StabilityReport(
        alpha=float(alpha), times=t, b_max=b, q_max=q, mu_min=mu,
        kdot_max=kdot, kdot_bound=bound,
        b_margin=float(b.max()), q_margin=float(q.max()), mu_margin=float(mu.min()),
        passed=not bad.any(), violation_time=vt, violation_eigenvalue=ve)


def alpha_upper_bound(profile, t_grid):
    """``min_t (lambda_min(C) - lambda_max(M_dot)) / lambda_max(M)``.

    Only meaningful for profiles whose damping does not depend on alpha;
    returns ``None`` for coupled damping.
    """
    if profile.coupled_damping:
        return None
    vals = []
    for t in np.asarray(t_grid, dtype=float):
        p = eval_profile(profile, t, alpha=0.0)
        vals.append((_lmin(p.C) - _lmax(p.M_dot)) / _lmax(p.M))
    return float(min(vals))


def _feasible(profile, alpha, t_grid):
    return check_stability(profile, alpha, t_grid).passed


def feasible_alpha_interval(profile, t_grid, alpha_max=None, n_scan=400, tol=1e-10):
    """Bracket the set of certified alpha values.

    The certified set is generally an interval that can be bounded away
    from zero, so it is located by a logarithmic scan followed by bisection
    of both ends. Returns ``(lo, hi)`` of the interval containing the
    largest feasible scan point, or ``None`` when no scan point passes.
    """
    if alpha_max is None:
        alpha_max = alpha_upper_bound(profile, t_grid)
        if alpha_max is None:
            alpha_max = 100.0
    if alpha_max <= 0:
        return None
    scan = np.geomspace(alpha_max * 1e-6, alpha_max, n_scan)
    ok = np.array([_feasible(profile, a, t_grid) for a in scan])
    if not ok.any():
        return None
    j = int(np.flatnonzero(ok)[-1])
    i = j
    while i > 0 and ok[i - 1]:
        i -= 1

    def bisect(good, bad):
        while abs(bad - good) > tol * max(1.0, good):
            mid = 0.5 * (good + bad)
            if _feasible(profile, mid, t_grid):
                good = mid
            else:
                bad = mid
        return good

    hi = scan[j] if j == n_scan - 1 else bisect(scan[j], scan[j + 1])
    lo = scan[i] if i == 0 else bisect(scan[i], scan[i - 1])
    return float(lo), float(hi)


def select_alpha(profile, t_grid, safety=1e-3, alpha_max=None):
    """Largest certified rate constant, backed off by a relative ``safety``
    margin so that times between grid samples are also covered.

    Raises :class:`CertificationError` (with the worst sample) when no
    alpha passes.
    """
    interval = feasible_alpha_interval(profile, t_grid, alpha_max=alpha_max)
    if interval is None:
        probe = alpha_max or alpha_upper_bound(profile, t_grid) or 1.0
        probe = probe if probe > 0 else 1.0
        rep = check_stability(profile, probe, t_grid)
        raise CertificationError(
            f"no alpha certifies profile {profile.name!r}; first violation at "
            f"t={rep.violation_time} (eigenvalue {rep.violation_eigenvalue:.6g})",
            time=rep.violation_time, eigenvalue=rep.violation_eigenvalue)
    lo, hi = interval
    alpha = max(lo, hi * (1.0 - safety))
    return float(alpha)


def certify(profile, t_grid, alpha=None):
    """Stability report at ``alpha`` (or the profile's own alpha); when
    neither is set the alpha comes from :func:`select_alpha`.

    Raises :class:`CertificationError` only when no alpha can be found.
    """
    alpha = profile.alpha if alpha is None else alpha
    if alpha is None:
        alpha = select_alpha(profile, t_grid)
    return check_stability(profile, alpha, t_grid)


def default_time_grid(duration, spacing=1e-3):
    n = int(round(duration / spacing))
    return np.linspace(0.0, n * spacing, n + 1)


# -- Lyapunov function of the impedance error dynamics ------------------------

def _lyapunov_parts(Xi, Xi_dot, profile, alpha, t):
    p = eval_profile(profile, t, alpha)
    B, Q, mu = certificate_matrices(p, alpha)
    if _lmin(mu) <= 0:
        raise CertificationError(f"mu is not positive definite at t={t}", time=t,
                                 eigenvalue=_lmin(mu))
    Xi = np.asarray(Xi, dtype=float)
    Xi_dot = np.asarray(Xi_dot, dtype=float)
    U = Xi_dot + alpha * Xi
    V = 0.5 * (U @ p.M @ U + Xi @ mu @ Xi)
    return p, B, Q, mu, Xi, Xi_dot, U, V


def lyapunov_certificate(Xi, Xi_dot, profile, alpha, t):
    """``V`` and the certificate rate ``Xi_dot^T B Xi_dot + 1/2 Xi^T Q Xi``
    of the unforced impedance error dynamics.

    The rate is the quadratic form whose negativity the certificate
    guarantees. It omits the inertia-rate terms collected by
    :func:`lyapunov_rate_exact`.
    """
    _, B, Q, _, Xi, Xi_dot, _, V = _lyapunov_parts(Xi, Xi_dot, profile, alpha, t)
    V_dot = Xi_dot @ B @ Xi_dot + 0.5 * Xi @ Q @ Xi
    return float(V), float(V_dot)


def lyapunov_rate_exact(Xi, Xi_dot, profile, alpha, t):
    """Exact ``dV/dt`` along ``M Xi_ddot + C Xi_dot + K Xi = 0``."""
    p, B, Q, mu, Xi, Xi_dot, U, V = _lyapunov_parts(Xi, Xi_dot, profile, alpha, t)
    Xi_ddot = solve_spd(p.M, -p.C @ Xi_dot - p.K @ Xi)
    mu_dot = (-alpha * alpha * p.M_dot - alpha * p.M_ddot + p.K_dot + alpha * p.C_dot)
    V_dot = (U @ p.M @ (Xi_ddot + alpha * Xi_dot) + 0.5 * U @ p.M_dot @ U
             + Xi @ mu @ Xi_dot + 0.5 * Xi @ mu_dot @ Xi)
    return float(V), float(V_dot)


# -- task space -> configuration space ---------------------------------------

@dataclass(frozen=True)
class ConfigurationImpedance:
    M_c: np.ndarray
    C_c: np.ndarray
    K_c: np.ndarray
    tau_ext: np.ndarray


def jacobian_rate(Omega, Omega_dot, params, step=JDOT_STEP):
    """``dJ1/dt`` by central differences of J1 along ``Omega_dot``."""
    Omega = np.asarray(Omega, dtype=float)
    v = np.asarray(Omega_dot, dtype=float)
    if not v.any():
        return np.zeros((6, 4))
    return (jacobian_config_to_task(Omega + step * v, params)
            - jacobian_config_to_task(Omega - step * v, params)) / (2 * step)


def map_to_configuration(profile, t, Omega, Omega_dot, J1=None, J1_dot=None,
                         F_ext=None, params=None, alpha=None):
    """Congruence of the task-space impedance into configuration space.

    ``M_c = J1^T M J1``, ``C_c = J1^T M J1_dot + J1^T C J1``,
    ``K_c = J1^T K J1``, ``tau_ext = J1^T F_ext``. ``J1`` and ``J1_dot``
    are computed from ``(Omega, Omega_dot)`` when not given (needs
    ``params``).
    """
    p = eval_profile(profile, t, alpha)
    if J1 is None and J1_dot is None:
        Omega = np.asarray(Omega, dtype=float)
        M_c, C_c, K_c = _k.config_impedance(Omega, np.asarray(Omega_dot, dtype=float),
                                            *params.lengths, p.M, p.C, p.K, 0.0, JDOT_STEP)
        if F_ext is not None:
            J1 = jacobian_config_to_task(Omega, params)
    else:
        if J1 is None:
            J1 = jacobian_config_to_task(Omega, params)
        if J1_dot is None:
            J1_dot = jacobian_rate(Omega, Omega_dot, params)
        M_c = J1.T @ p.M @ J1
        M_c = 0.5 * (M_c + M_c.T)
        C_c = J1.T @ (p.M @ J1_dot) + J1.T @ p.C @ J1
        K_c = J1.T @ p.K @ J1
        K_c = 0.5 * (K_c + K_c.T)
    tau = np.zeros(4) if F_ext is None else J1.T @ np.asarray(F_ext, dtype=float)
    return ConfigurationImpedance(M_c, C_c, K_c, tau)


def regularize(imp, ridge=DEFAULT_RIDGE):
    """Add ``ridge * trace(X) / 4 * I`` to each of ``M_c``, ``C_c``, ``K_c``.

    The congruence loses rank where a column of J1 vanishes (the bending
    plane angle of a straight segment), so the admittance needs a floor in
    every direction. Scaling with the trace keeps the ratio between the
    floors equal to the ratio of the impedances themselves.
    """
    eye = np.eye(4)
    return ConfigurationImpedance(
        imp.M_c + ridge * np.trace(imp.M_c) / 4 * eye,
        imp.C_c + ridge * np.trace(imp.C_c) / 4 * eye,
        imp.K_c + ridge * np.trace(imp.K_c) / 4 * eye,
        imp.tau_ext)


def reference_acceleration(imp, Omega_ref, Omega_ref_dot, Omega_d, tau_ext):
    """``Omega_ddot`` of ``M_c Omega_ddot + C_c Omega_dot + K_c (Omega - Omega_d) = tau``."""
    rhs = tau_ext - imp.C_c @ Omega_ref_dot - imp.K_c @ (Omega_ref - Omega_d)
    return solve_spd(imp.M_c, rhs)


def compliant_reference_step(imp, Omega_ref, Omega_ref_dot, Omega_d, tau_ext_est, dt,
                             ridge=DEFAULT_RIDGE):
    """One RK4 step of the admittance model with the matrices held fixed.

    Returns the new ``(Omega_ref, Omega_ref_dot, Omega_ref_ddot)``.
    """
    imp = regularize(imp, ridge) if ridge else imp
    x = np.asarray(Omega_ref, dtype=float)
    v = np.asarray(Omega_ref_dot, dtype=float)
    tau = np.asarray(tau_ext_est, dtype=float)

    def f(x, v):
        return v, reference_acceleration(imp, x, v, Omega_d, tau)

    k1x, k1v = f(x, v)
    k2x, k2v = f(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
    k3x, k3v = f(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
    k4x, k4v = f(x + dt * k3x, v + dt * k3v)
    x = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    v = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return x, v, reference_acceleration(imp, x, v, Omega_d, tau)
