"""
自适应 Simpson 求积测试
"""
import math

import numpy as np
import pytest

from core.quadrature import adaptive_simpson, dense_sup, integrate_pieces


@pytest.mark.parametrize("vectorized", [True, False])
def test_sine_integral(vectorized):
    f = np.sin if vectorized else math.sin
    res = adaptive_simpson(f, 0.0, math.pi, tol=1e-12, vectorized=vectorized)
    assert res.converged
    assert res.value == pytest.approx(2.0, abs=1e-11)


def test_complex_integrand():
    res = adaptive_simpson(lambda t: np.exp(1j * t), 0.0, 1.0, tol=1e-12, vectorized=True)
    expected = (np.exp(1j) - 1.0) / 1j
    assert abs(res.value - expected) < 1e-11


def test_reversed_interval_flips_sign():
    forward = adaptive_simpson(np.exp, 0.0, 1.0, vectorized=True)
    backward = adaptive_simpson(np.exp, 1.0, 0.0, vectorized=True)
    assert backward.value == pytest.approx(-forward.value)
    assert adaptive_simpson(np.exp, 2.0, 2.0, vectorized=True).value == 0.0


def test_interval_cap_marks_unconverged():
    res = adaptive_simpson(lambda t: np.sqrt(np.abs(t)), -1.0, 1.0, tol=1e-15, max_intervals=40, vectorized=True)
    assert not res.converged
    assert res.value == pytest.approx(4.0 / 3.0, rel=1e-2)


def test_integrate_pieces_handles_jumps():
    step = lambda t: np.where(t < 0.5, 1.0, -2.0)
    res = integrate_pieces(step, [0.0, 0.5, 1.0], vectorized=True)
    assert res.value == pytest.approx(-0.5, abs=1e-12)


def test_dense_sup():
    assert dense_sup(np.cos, 0.0, 2.0 * math.pi, vectorized=True) == pytest.approx(1.0)
