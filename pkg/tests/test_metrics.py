import numpy as np
import pytest

from msrm import DomainError
from msrm.metrics import metric_iae, metric_ise, metric_itae, metric_rmse


def test_constant_error_closed_forms():
    t = np.linspace(0, 2, 2001)
    e = np.full_like(t, -0.5)
    assert metric_iae(t, e) == pytest.approx(1.0)
    assert metric_itae(t, e) == pytest.approx(1.0)
    assert metric_ise(t, e) == pytest.approx(0.5)
    assert metric_rmse(t, e) == pytest.approx(0.5)


def test_linear_error_closed_forms():
    t = np.linspace(0, 1, 10001)
    e = t.copy()
    assert metric_iae(t, e) == pytest.approx(0.5, rel=1e-12)
    assert metric_itae(t, e) == pytest.approx(1 / 3, rel=1e-6)
    assert metric_ise(t, e) == pytest.approx(1 / 3, rel=1e-6)


def test_sine_rmse_and_window():
    t = np.linspace(0, 2 * np.pi, 20001)
    assert metric_rmse(t, np.sin(t)) == pytest.approx(1 / np.sqrt(2), rel=1e-6)
    assert metric_rmse(t, np.sin(t), 0.0, np.pi) == pytest.approx(1 / np.sqrt(2), rel=1e-6)
    two = metric_rmse(t, np.column_stack([np.sin(t), 2 * np.ones_like(t)]))
    assert np.allclose(two, [1 / np.sqrt(2), 2.0], rtol=1e-6)


def test_vector_series_uses_the_norm():
    t = np.linspace(0, 1, 11)
    e = np.column_stack([np.full(11, 3.0), np.full(11, 4.0)])
    assert metric_iae(t, e) == pytest.approx(5.0)


def test_bad_series():
    with pytest.raises(DomainError):
        metric_iae([], [])
    with pytest.raises(DomainError):
        metric_iae([0, 1, 2], [0, 1])
    with pytest.raises(DomainError):
        metric_ise([0, 2, 1], [0, 1, 2])
