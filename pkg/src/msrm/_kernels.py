"""Compiled inner loops shared by the kinematics and dynamics modules.

Everything here works on plain floats and arrays so it can be compiled
with numba; the public modules wrap these functions with validation and
friendlier return types.

Segment convention: ``R = I - sin(t) U + (1 - cos t) U^2`` with ``U`` the
cross-product matrix of the bending axis ``(-sin phi, cos phi, 0)`` and
``O = l (-f cos phi, -f sin phi, g)``, ``f = (1 - cos t)/t``,
``g = sin t / t``, ``t = kappa l``.
"""
import math

import numpy as np
from numba import njit

# below this bend angle the arc functions switch to their Taylor series
SERIES_THRESHOLD = 1e-2


@njit(cache=True)
def arc_functions(t, series):
    """``(f, f', f'', g, g', g'')`` of the arc functions at ``t``."""
    if series:
        t2 = t * t
        f = t * (0.5 - t2 * (1 / 24 - t2 * (1 / 720 - t2 / 40320)))
        df = 0.5 - t2 * (1 / 8 - t2 * (1 / 144 - t2 * 7 / 40320))
        ddf = -t * (0.25 - t2 * (1 / 36 - t2 / 960))
        g = 1.0 - t2 * (1 / 6 - t2 * (1 / 120 - t2 / 5040))
        dg = -t * (1 / 3 - t2 * (1 / 30 - t2 / 840))
        ddg = -1 / 3 + t2 * (1 / 10 - t2 / 168)
        return f, df, ddf, g, dg, ddg
    s, c = math.sin(t), math.cos(t)
    one_minus_c = 2.0 * math.sin(0.5 * t) ** 2
    t2, t3 = t * t, t * t * t
    f = one_minus_c / t
    df = (t * s - one_minus_c) / t2
    ddf = (t2 * c - 2.0 * t * s + 2.0 * one_minus_c) / t3
    g = s / t
    dg = (t * c - s) / t2
    ddg = (-t2 * s - 2.0 * t * c + 2.0 * s) / t3
    return f, df, ddf, g, dg, ddg


@njit(cache=True)
def families(kappa, phi, length):
    """Rotation and translation of one segment with partials in
    ``(kappa, phi)``, stacked as ``[X, X_k, X_p, X_kk, X_kp, X_pp]``.

    Returns ``Rf`` (6, 3, 3) and ``Of`` (6, 3).
    """
    theta = kappa * length
    s, c = math.sin(theta), math.cos(theta)
    v = 2.0 * math.sin(0.5 * theta) ** 2
    sp, cp = math.sin(phi), math.cos(phi)
    cc, ss, cs = cp * cp, sp * sp, cp * sp
    s2, c2 = 2.0 * cs, cc - ss
    Rf = np.array([
        1 - v * cc, -v * cs, -s * cp, -v * cs, 1 - v * ss, -s * sp, s * cp, s * sp, 1 - v,
        -s * cc, -s * cs, -c * cp, -s * cs, -s * ss, -c * sp, c * cp, c * sp, -s,
        v * s2, -v * c2, s * sp, -v * c2, -v * s2, -s * cp, -s * sp, s * cp, 0.0,
        -c * cc, -c * cs, s * cp, -c * cs, -c * ss, s * sp, -s * cp, -s * sp, -c,
        s * s2, -s * c2, c * sp, -s * c2, -s * s2, -c * cp, -c * sp, c * cp, 0.0,
        2 * v * c2, 2 * v * s2, s * cp, 2 * v * s2, -2 * v * c2, s * sp, -s * cp, -s * sp, 0.0,
    ]).reshape(6, 3, 3)
    f, df, ddf, g, dg, ddg = arc_functions(theta, abs(theta) < SERIES_THRESHOLD)
    Of = length * np.array([
        -f * cp, -f * sp, g,
        -df * cp, -df * sp, dg,
        f * sp, -f * cp, 0.0,
        -ddf * cp, -ddf * sp, ddg,
        df * sp, -df * cp, 0.0,
        f * cp, f * sp, 0.0,
    ]).reshape(6, 3)
    # theta-derivatives -> kappa-derivatives
    scale = (1.0, length, 1.0, length * length, length, 1.0)
    for i in range(6):
        Rf[i] *= scale[i]
        Of[i] *= scale[i]
    return Rf, Of


# stacked-family index of the second partial in (a, b), a, b in {0: kappa, 1: phi}
_SECOND = ((3, 4), (4, 5))


@njit(cache=True)
def mass_points(k1, p1, k2, p2, l1, l2, second):
    """Positions of both segment tips with first (and optionally second)
    partials in ``Omega``: ``pos`` (2, 3), ``jac`` (2, 3, 4), ``hess``
    (2, 3, 4, 4)."""
    R1, O1 = families(k1, p1, l1)
    R2, O2 = families(k2, p2, l2)
    # P[i, :, j] = R1-family[i] @ O2-family[j]
    P = np.zeros((6, 3, 6))
    for i in range(6):
        for x in range(3):
            for j in range(6):
                P[i, x, j] = R1[i, x, 0] * O2[j, 0] + R1[i, x, 1] * O2[j, 1] + R1[i, x, 2] * O2[j, 2]
    pos = np.empty((2, 3))
    jac = np.zeros((2, 3, 4))
    hess = np.zeros((2, 3, 4, 4))
    for x in range(3):
        pos[0, x] = O1[0, x]
        pos[1, x] = O1[0, x] + P[0, x, 0]
        for a in range(2):
            jac[0, x, a] = O1[1 + a, x]
            jac[1, x, a] = O1[1 + a, x] + P[1 + a, x, 0]
            jac[1, x, 2 + a] = P[0, x, 1 + a]
        if second:
            for a in range(2):
                for b in range(2):
                    sec = _SECOND[a][b]
                    hess[0, x, a, b] = O1[sec, x]
                    hess[1, x, a, b] = O1[sec, x] + P[sec, x, 0]
                    hess[1, x, 2 + a, 2 + b] = P[0, x, sec]
                    hess[1, x, a, 2 + b] = P[1 + a, x, 1 + b]
                    hess[1, x, 2 + b, a] = P[1 + a, x, 1 + b]
    return pos, jac, hess


@njit(cache=True)
def vee(W):
    return 0.5 * np.array([W[2, 1] - W[1, 2], W[0, 2] - W[2, 0], W[1, 0] - W[0, 1]])


@njit(cache=True)
def skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


@njit(cache=True)
def rotation_vector(R):
    """Axis-angle vector of a rotation matrix (angle in [0, pi])."""
    w = vee(R)
    s = math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    c = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    theta = math.atan2(s, c)
    if theta < 1e-6:
        return w * (1.0 + theta * theta / 6.0)
    if s > 1e-7:
        return w * (theta / s)
    # angle close to pi: axis from the symmetric part, sign from w
    B = 0.5 * (R + np.eye(3))
    k = 0
    for i in range(1, 3):
        if B[i, i] > B[k, k]:
            k = i
    axis = B[:, k] / math.sqrt(max(B[k, k], 1e-300))
    axis = axis / math.sqrt(axis @ axis)
    if axis @ w < 0:
        axis = -axis
    return theta * axis


@njit(cache=True)
def left_jacobian_inverse(omega):
    """Maps the spatial angular rate ``vee(dR R^T)`` to the rate of the
    rotation vector ``omega``."""
    theta = math.sqrt(omega @ omega)
    W = skew(omega)
    if theta < 1e-3:
        t2 = theta * theta
        beta = 1 / 12 + t2 / 720 + t2 * t2 / 30240
    else:
        beta = 1.0 / (theta * theta) - (1.0 + math.cos(theta)) / (2.0 * theta * math.sin(theta))
    return np.eye(3) - 0.5 * W + beta * (W @ W)


@njit(cache=True)
def tip_pose(k1, p1, k2, p2, l1, l2):
    """Tip position and rotation vector as a 6-vector."""
    R1, O1 = families(k1, p1, l1)
    R2, O2 = families(k2, p2, l2)
    chi = np.empty(6)
    chi[:3] = O1[0] + R1[0] @ O2[0]
    chi[3:] = rotation_vector(R1[0] @ R2[0])
    return chi


@njit(cache=True)
def config_jacobian(k1, p1, k2, p2, l1, l2):
    """6x4 Jacobian of the tip pose in ``Omega``."""
    R1, O1 = families(k1, p1, l1)
    R2, O2 = families(k2, p2, l2)
    J = np.empty((6, 4))
    rates = np.empty((3, 4))
    for a in range(2):
        J[:3, a] = O1[1 + a] + R1[1 + a] @ O2[0]
        rates[:, a] = vee(R1[1 + a] @ R1[0].T)
        J[:3, 2 + a] = R1[0] @ O2[1 + a]
        rates[:, 2 + a] = R1[0] @ vee(R2[1 + a] @ R2[0].T)
    omega = rotation_vector(R1[0] @ R2[0])
    J[3:] = left_jacobian_inverse(omega) @ rates
    return J


@njit(cache=True)
def dynamics(Omega, Omega_dot, l1, l2, m1, m2, k_bend, k_torsion, j_bend, j_torsion, g):
    """Inertia ``M``, Christoffel Coriolis ``C`` and conservative ``N``."""
    pos, jac, hess = mass_points(Omega[0], Omega[1], Omega[2], Omega[3], l1, l2, True)
    masses = (m1, m2)
    M = np.zeros((4, 4))
    M[0, 0] = j_bend * l1 * l1
    M[1, 1] = j_torsion
    M[2, 2] = j_bend * l2 * l2
    M[3, 3] = j_torsion
    N = np.empty(4)
    N[0] = k_bend * l1 * l1 * Omega[0]
    N[1] = k_torsion * Omega[1]
    N[2] = k_bend * l2 * l2 * Omega[2]
    N[3] = k_torsion * Omega[3]
    # dM[k, a, b] = dM_ab / dOmega_k
    dM = np.zeros((4, 4, 4))
    for i in range(2):
        m = masses[i]
        J = jac[i]
        M += m * (J.T @ J)
        N -= g * m * J[2]
        H = hess[i]
        for k in range(4):
            for a in range(4):
                for b in range(4):
                    # sum_x H[x, a, k] J[x, b], symmetrized
                    t = (H[0, a, k] * J[0, b] + H[1, a, k] * J[1, b] + H[2, a, k] * J[2, b]
                         + H[0, b, k] * J[0, a] + H[1, b, k] * J[1, a] + H[2, b, k] * J[2, a])
                    dM[k, a, b] += m * t
    # C[k, j] = 1/2 sum_m (dM[m, k, j] + dM[j, k, m] - dM[k, m, j]) v_m
    C = np.zeros((4, 4))
    for k in range(4):
        for j in range(4):
            acc = 0.0
            for mm in range(4):
                acc += (dM[mm, k, j] + dM[j, k, mm] - dM[k, mm, j]) * Omega_dot[mm]
            C[k, j] = 0.5 * acc
    return M, C, N, dM


@njit(cache=True)
def spd_solve(A, b):
    """Solve ``A x = b`` by Cholesky factorization (``A`` symmetric positive
    definite, small). Returns NaNs if ``A`` is not positive definite."""
    n = A.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        d = A[j, j]
        for k in range(j):
            d -= L[j, k] * L[j, k]
        if not d > 0.0:
            return np.full(n, np.nan)
        L[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            acc = A[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            L[i, j] = acc / L[j, j]
    y = np.empty(n)
    for i in range(n):
        acc = b[i]
        for k in range(i):
            acc -= L[i, k] * y[k]
        y[i] = acc / L[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc -= L[k, i] * x[k]
        x[i] = acc / L[i, i]
    return x


@njit(cache=True)
def config_impedance(Omega, Omega_dot, l1, l2, Mt, Ct, Kt, ridge, step):
    """Task impedance ``(Mt, Ct, Kt)`` pulled back to configuration space
    through J1, with ``dJ1/dt`` from central differences along
    ``Omega_dot`` and ``ridge * trace / 4`` added to each diagonal."""
    J = config_jacobian(Omega[0], Omega[1], Omega[2], Omega[3], l1, l2)
    moving = False
    for i in range(4):
        if Omega_dot[i] != 0.0:
            moving = True
    if moving:
        a = Omega + step * Omega_dot
        b = Omega - step * Omega_dot
        Jd = (config_jacobian(a[0], a[1], a[2], a[3], l1, l2)
              - config_jacobian(b[0], b[1], b[2], b[3], l1, l2)) / (2.0 * step)
    else:
        Jd = np.zeros((6, 4))
    JT = J.T.copy()
    Mc = JT @ (Mt @ J)
    Mc = 0.5 * (Mc + Mc.T)
    Cc = JT @ (Mt @ Jd) + JT @ (Ct @ J)
    Kc = JT @ (Kt @ J)
    Kc = 0.5 * (Kc + Kc.T)
    if ridge > 0.0:
        tm, tc, tk = np.trace(Mc), np.trace(Cc), np.trace(Kc)
        for i in range(4):
            Mc[i, i] += ridge * tm / 4.0
            Cc[i, i] += ridge * tc / 4.0
            Kc[i, i] += ridge * tk / 4.0
    return Mc, Cc, Kc


@njit(cache=True)
def admittance_acceleration(ref, ref_dot, target, tau, l1, l2, Mt, Ct, Kt, ridge, step):
    """``M_c^{-1} (tau - C_c ref_dot - K_c (ref - target))``."""
    Mc, Cc, Kc = config_impedance(ref, ref_dot, l1, l2, Mt, Ct, Kt, ridge, step)
    return spd_solve(Mc, tau - Cc @ ref_dot - Kc @ (ref - target))
