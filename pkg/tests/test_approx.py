"""
逼近问题探索测试
"""
import math

import numpy as np
import pytest

from core.approx import (
    ApproxInstance,
    ClassConstraint,
    cos2_example,
    eval_f,
    expand,
    pairing_profile,
    kernel_density,
    membership,
    pairing,
    pairing_exact,
    repair_frequencies,
    search_sup,
    sup_norm,
)
from core.errors import InputError
from core.quadrature import adaptive_simpson
from core.refinement import ExponentialSum


def test_cos2_example_values():
    inst = cos2_example()
    ts = np.linspace(-10.0, 10.0, 41)
    np.testing.assert_allclose(eval_f(inst, ts), np.cos(0.2 * ts) ** 2, atol=1e-14)
    series = expand(inst)
    np.testing.assert_allclose(series.frequencies, [-0.4, 0.0, 0.4])
    np.testing.assert_allclose(series.coefficients, [0.25, 0.5, 0.25])


def test_instance_validation():
    with pytest.raises(InputError):
        ApproxInstance.create([0.0], [0.0, 1.0], [[1.0, 0.0]], 0.5)
    with pytest.raises(InputError):
        ApproxInstance.create([0.0], [0.0], [[1.0]], 1.0)
    with pytest.raises(InputError):
        ApproxInstance.create([np.nan], [0.0], [[1.0]], 0.5)


@pytest.mark.parametrize("r", [0.2, 0.5, 0.8])
def test_kernel_density_is_probability(r):
    quad = adaptive_simpson(lambda y: kernel_density(r, y), -60.0, 60.0, tol=1e-12, vectorized=True)
    assert quad.value == pytest.approx(1.0, abs=1e-9)
    assert np.all(kernel_density(r, np.linspace(-5, 5, 11)) > 0)


def test_pairing_of_constant_is_one():
    inst = ApproxInstance.create([0.0], [0.0], [[1.0]], 0.5)
    result = pairing(inst)
    assert result.value == pytest.approx(1.0, abs=1e-8)
    assert result.closed_form == pytest.approx(1.0)
    assert abs(result.imag) < 1e-12


def test_pairing_defaults_follow_approx_settings(isolated_config):
    inst = cos2_example()
    assert pairing(inst).truncation == 50.0
    isolated_config.update_approx_settings(pairing_cutoff=20.0, pairing_tol=1e-6)
    loose = pairing(inst)
    assert loose.truncation == 20.0
    assert loose.tail_bound > pairing(inst, truncation=50.0).tail_bound
    assert pairing(inst, truncation=30.0).truncation == 30.0


@pytest.mark.parametrize("r", [0.3, 0.5, 0.7])
def test_pairing_closed_form_matches_quadrature(r):
    inst = cos2_example(r=r)
    result = pairing(inst, truncation=60.0, tol=1e-10)
    assert abs(result.value - result.closed_form) <= result.tail_bound + result.quad_error + 1e-8


def test_pairing_exact_phi_at_half():
    # r = 1/2：φ(d) = 1/cosh(πd/2)
    series = ExponentialSum.from_terms([1.0], [1.3])
    assert pairing_exact(series, 0.5) == pytest.approx(1.0 / math.cosh(math.pi * 1.3 / 2.0), rel=1e-12)


def test_sup_norm_refines_peak():
    est = sup_norm(cos2_example(), window=40.0, samples=101)
    assert est.value == pytest.approx(1.0, abs=1e-12)
    series = ExponentialSum.from_terms([1.0, 1.0], [1.0, math.sqrt(2.0)])
    assert sup_norm(series, window=200.0, samples=2001).value > 1.9


def test_membership_and_witness():
    H = ClassConstraint("H", 1.0)
    result = membership((np.array([0.0]), np.array([1.0, 3.0])), H)
    assert result.member
    assert result.min_gap == pytest.approx(2.0)
    G = ClassConstraint("G", 1.0)
    failing = membership((np.array([0.5]), np.array([0.0, 3.0])), G)
    assert not failing.member
    assert failing.witness == (0, 0)


@pytest.mark.parametrize("kind", ["H", "G"])
def test_repair_frequencies_restores_membership(kind):
    constraint = ClassConstraint(kind, 0.75)
    b = np.array([0.2, -1.1, 2.0])
    a = np.array([0.1, 0.0, 2.05])
    fixed = repair_frequencies(a, b, constraint)
    assert membership((fixed, b), constraint).member


def test_class_constraint_validation():
    with pytest.raises(InputError):
        ClassConstraint("K", 1.0)
    with pytest.raises(InputError):
        ClassConstraint("H", 0.0)


def test_search_sup_is_deterministic_and_consistent():
    kwargs = dict(n=2, constraint=ClassConstraint("H", 1.0), r=0.5, budget=80, seed=3, window=50.0, samples=2001)
    first = search_sup(**kwargs)
    second = search_sup(**kwargs)
    assert first.status == "ok"
    assert first.evaluations == 80
    assert first.best_value == second.best_value
    assert first.history == second.history
    assert first.certificate_applies
    assert first.consistent
    assert membership(first.best_instance, ClassConstraint("H", 1.0)).member
    assert sup_norm(first.best_instance, 50.0, 2001).value <= 0.999 + 1e-9


def test_search_sup_history_is_monotone():
    report = search_sup(1, ClassConstraint("G", 0.5), 0.5, budget=40, seed=1, window=30.0, samples=1001)
    values = [row[2] for row in report.history]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert report.consistent is None
    assert not report.certificate_applies


def test_search_sup_rejects_bad_budget():
    with pytest.raises(InputError):
        search_sup(2, ClassConstraint("H", 1.0), 0.5, budget=0)


def test_pairing_profile_shape():
    rows = pairing_profile()
    assert len(rows) == 601
    y, f, g = rows[300]
    assert y == pytest.approx(0.0)
    assert f == pytest.approx(1.0)
    assert g == pytest.approx(kernel_density(0.5, 0.0))
