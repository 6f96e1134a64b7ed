"""Tracking-error integrals, all by trapezoidal quadrature.

Each function takes sample times ``t`` and an error series ``e``. A 2-D
series (samples x components) is reduced to its Euclidean norm per sample
first.
"""
import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError


def _prepare(t, e):
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    if t.size == 0 or e.size == 0:
        raise DomainError("metric needs a non-empty series")
    if e.ndim == 2:
        e = np.linalg.norm(e, axis=1)
    if e.shape != t.shape:
        raise DomainError(f"series length {e.shape} does not match times {t.shape}")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise DomainError("sample times must be strictly increasing")
    return t, e


def _window(t, e, t0, t1):
    t0 = t[0] if t0 is None else t0
    t1 = t[-1] if t1 is None else t1
    keep = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
    return t[keep], e[keep], t0, t1


def metric_rmse(t, e, t0=None, t1=None):
    """``sqrt(int e^2 dt / (t1 - t0))``; a 2-D ``e`` returns one value per column."""
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    if e.ndim == 2:
        return np.array([metric_rmse(t, e[:, j], t0, t1) for j in range(e.shape[1])])
    t, e = _prepare(t, e)
    t, e, t0, t1 = _window(t, e, t0, t1)
    if t1 <= t0:
        return float(abs(e[0]))
    return float(np.sqrt(trapezoid(e * e, t) / (t1 - t0)))


def metric_iae(t, e):
    t, e = _prepare(t, e)
    return float(trapezoid(np.abs(e), t))


def metric_itae(t, e):
    t, e = _prepare(t, e)
    return float(trapezoid(t * np.abs(e), t))


def metric_ise(t, e):
    t, e = _prepare(t, e)
    return float(trapezoid(e * e, t))
