"""
谱距离、Poisson 核与改进常数测试
"""
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from core import refinement
from core.errors import InputError, NormalizationError, PreconditionError
from core.fuzz import random_spd, random_stream
from core.inequalities import CordesInstance, McIntoshInstance
from core.quadrature import adaptive_simpson
from core.refinement import (
    ExponentialSum,
    asymptotic_shape_check,
    certified_improvement,
    compute_d,
    kernel_antiderivative,
    kernel_tail,
    window_integral_check,
    rearrangement_check,
    log_kernel_window_mass,
    optimal_window,
    poisson_kernel,
    poisson_mass,
    refined_cordes,
    refined_mcintosh,
    select_side,
)


# ===== 谱距离 =====

def test_compute_d_single_eigenvalues():
    gap = compute_d([math.e], [1.0])
    assert gap.term1 == pytest.approx(2.0)
    assert gap.term2 == pytest.approx(2.0)
    assert gap.d == pytest.approx(4.0)
    assert gap.witness1 == (0, 0, 0)


def test_compute_d_shared_log_eigenvalue_gives_zero():
    gap = compute_d([1.0, math.exp(2.0)], [1.0])
    assert gap.d == 0.0


def test_compute_d_cordes_signs():
    gap = compute_d([math.e], [math.e], sign_mode="cordes")
    assert gap.d == pytest.approx(8.0)
    assert compute_d([math.e], [1.0 / math.e], sign_mode="cordes").d == pytest.approx(0.0, abs=1e-15)


def test_compute_d_preconditions():
    with pytest.raises(NormalizationError):
        compute_d([1.0], [1.0], normalized=False)
    with pytest.raises(InputError):
        compute_d([0.0, 1.0], [1.0])
    with pytest.raises(InputError):
        compute_d([1.0], [1.0], sign_mode="other")


def test_side_gap_and_selection():
    gap = compute_d([math.e], [1.0])
    assert gap.side_gap("left") == gap.term2
    assert gap.side_gap("right") == gap.term1
    assert select_side(gap) == "left"
    assert select_side(gap, "right") == "right"


# ===== 指数和 =====

def test_exponential_sum_merges_equal_frequencies():
    s = ExponentialSum.from_terms([1.0, 2.0, 3.0], [1.0, 1.0, -2.0])
    assert s.frequencies.tolist() == [-2.0, 1.0]
    assert s.coefficients.tolist() == [3.0, 3.0]
    assert s.extreme_coefficients() == (3.0, 3.0)
    assert ExponentialSum.from_terms([1.0, -1.0], [1.0, 1.0]).size == 0


def test_exponential_sum_integral_closed_form():
    s = ExponentialSum.from_terms([1.0, 0.5, -0.25], [0.0, 1.5, -3.0])
    quad = adaptive_simpson(s.evaluate, -2.0, 3.0, tol=1e-12, vectorized=True)
    assert abs(s.integral(-2.0, 3.0) - quad.value) < 1e-10
    assert s.constant_term == 1.0
    assert s.min_abs_freq == 1.5


def test_exponential_sum_sup_norm_is_lower_bound():
    s = ExponentialSum.from_terms([1.0, 1.0], [1.0, -1.0])
    assert s.sup_norm(10.0) == pytest.approx(2.0)
    assert s.l1_norm == 2.0


# ===== Poisson 核 =====

@pytest.mark.parametrize("x", [0.3, math.pi / 2, 2.5])
def test_poisson_mass_and_tail(x):
    assert kernel_tail(x, 0.0) == pytest.approx(math.pi - x, rel=1e-12)
    assert 2.0 * kernel_antiderivative(x, 60.0) == pytest.approx(poisson_mass(x), rel=1e-12)
    quad = adaptive_simpson(lambda y: poisson_kernel(x, y), 0.0, 5.0, tol=1e-12, vectorized=True)
    assert quad.value + kernel_tail(x, 5.0) == pytest.approx(math.pi - x, rel=1e-9)


@pytest.mark.parametrize("x, a, b", [(1.0, 0.0, 2.0), (2.0, 3.0, 4.0), (0.5, 10.0, 12.5)])
def test_log_window_mass_matches_antiderivative(x, a, b):
    expected = kernel_antiderivative(x, b) - kernel_antiderivative(x, a)
    assert math.exp(log_kernel_window_mass(x, a, b)) == pytest.approx(expected, rel=1e-10)


def test_log_window_mass_far_window_is_finite():
    value = log_kernel_window_mass(1.0, 3000.0, 4000.0)
    assert math.isfinite(value)
    assert value < -2000.0


def test_poisson_kernel_rejects_bad_abscissa():
    with pytest.raises(InputError):
        poisson_kernel(0.0, 1.0)
    with pytest.raises(InputError):
        poisson_mass(math.pi)


# ===== 可证改进常数 =====

def test_certified_improvement_basic():
    bound = certified_improvement(2, 0.5, 1.0)
    assert 0.0 < bound.c_cert < bound.side_weight
    assert bound.ell == pytest.approx(2.0 * math.sqrt(2) / 0.5)
    assert bound.ell_used == max(bound.ell, bound.ell_star)
    assert bound.log_c_cert == pytest.approx(math.log(bound.c_cert))
    assert bound.quad_converged


@pytest.mark.parametrize("r", [0.5, 0.3])
@pytest.mark.parametrize("side", ["left", "right"])
def test_certified_constant_matches_direct_annulus_integral(r, side):
    d = 8.0 * math.log(2.0)
    bound = certified_improvement(2, r, d, side)
    x, w = (math.pi * (1.0 - r), r) if side == "left" else (math.pi * r, 1.0 - r)
    assert bound.abscissa == pytest.approx(x)
    assert bound.side_weight == pytest.approx(w)
    ell = max(2.0 * math.sqrt(2.0) / (d / 2.0), optimal_window(x))
    assert bound.ell_used == pytest.approx(ell)

    L = math.pi * ell
    annulus, _ = integrate.quad(lambda y: poisson_kernel(x, y), 0.75 * L, L, epsabs=0.0, epsrel=1e-12)
    expected = w * 2.0 * annulus / (2.0 * (math.pi - x))
    assert bound.c_cert == pytest.approx(expected, rel=1e-8)
    closed_form = kernel_antiderivative(x, L) - kernel_antiderivative(x, 0.75 * L)
    assert bound.c_cert == pytest.approx(w * closed_form / (math.pi - x), rel=1e-8)


def test_cordes_geometry_ignores_side():
    left = certified_improvement(2, 0.3, 1.0, "left", mode="cordes")
    right = certified_improvement(2, 0.3, 1.0, "right", mode="cordes")
    assert left.abscissa == right.abscissa == pytest.approx(0.3 * math.pi)
    assert left.side_weight == right.side_weight == pytest.approx(0.7)
    assert left.c_cert == right.c_cert


def test_certified_improvement_monotone_in_d():
    values = [certified_improvement(3, 0.4, d).log_c_cert for d in (0.1, 0.5, 1.0, 3.0, 10.0, 50.0)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_large_d_saturates_at_optimal_window():
    bound = certified_improvement(2, 0.5, 1e6)
    assert bound.ell_used == pytest.approx(optimal_window(bound.abscissa))


def test_coefficient_window_rule_is_weaker():
    sqrt_rule = certified_improvement(9, 0.5, 0.5, window_rule="sqrt_n")
    coefficient = certified_improvement(9, 0.5, 0.5, window_rule="coefficient")
    assert coefficient.ell > sqrt_rule.ell
    assert coefficient.log_c_cert <= sqrt_rule.log_c_cert + 1e-12


def test_tiny_d_reports_log_constant():
    bound = certified_improvement(4, 0.5, 1e-3)
    assert math.isfinite(bound.log_c_cert)
    assert bound.log_c_cert < -1000.0
    assert bound.c_cert >= 0.0


def test_certified_improvement_rejects_bad_arguments():
    with pytest.raises(PreconditionError):
        certified_improvement(2, 0.5, 0.0)
    with pytest.raises(InputError):
        certified_improvement(2, 1.0, 1.0)
    with pytest.raises(InputError):
        certified_improvement(0, 0.5, 1.0)
    with pytest.raises(InputError):
        certified_improvement(2, 0.5, 1.0, window_rule="other")


def test_asymptotic_shape_is_monotone():
    report = asymptotic_shape_check([2, 4], [0.5, 1.0, 2.0, 4.0], 0.5)
    assert report.status == "fitted"
    assert report.monotone_in_d
    assert report.slope < 0
    assert report.lower_envelope_holds


# ===== 辅助界检查 =====

def test_window_integral_bound_holds():
    s = ExponentialSum.from_terms([1.0, 0.5], [1.0, -1.5])
    report = window_integral_check(s, eta=1.0)
    assert report.status == "holds"
    assert report.details['integral_exact'] == pytest.approx(report.details['integral_quadrature'], abs=1e-8)


def test_window_integral_requires_gap():
    with pytest.raises(PreconditionError):
        window_integral_check(ExponentialSum.from_terms([1.0], [0.5]), eta=1.0)


def test_rearrangement_holds_for_decreasing_weight():
    report = rearrangement_check(lambda t: np.exp(-t), np.cos, 2.0)
    assert report.status == "holds"
    assert report.margin >= 0


def test_rearrangement_increasing_weight_is_not_asserted():
    report = rearrangement_check(lambda t: t, np.cos, 2.0)
    assert report.status == "precondition-unmet"
    assert report.holds is None


# ===== 改进的不等式 =====

def _random_instance(seed, n=3):
    rng = random_stream(seed)
    A = random_spd(n, np.exp(rng.uniform(-2.0, 2.0, n)), seed)
    B = random_spd(n, np.exp(rng.uniform(-2.0, 2.0, n)), seed + 1)
    return A, rng.standard_normal((n, n)), B


def test_refined_mcintosh_certifies_random_instance():
    A, X, B = _random_instance(21)
    refined = refined_mcintosh(McIntoshInstance.from_matrices(A, X, B, 0.5))
    assert refined.status == "certified"
    assert refined.margin >= -1e-9
    assert refined.gap.d > 0


def test_refined_scalar_instance_has_no_certificate():
    refined = refined_mcintosh(McIntoshInstance.from_matrices(2.0 * np.eye(2), np.eye(2), 3.0 * np.eye(2), 0.5))
    assert refined.status == "no-certificate"
    assert refined.bound is None
    assert refined.report.ratio == pytest.approx(1.0)


def test_refined_psd_input_has_no_certificate():
    refined = refined_mcintosh(McIntoshInstance.from_matrices(np.diag([1.0, 0.0]), np.eye(2), np.eye(2), 0.5))
    assert refined.status == "no-certificate"
    assert refined.gap is None


def test_refined_requires_open_exponent():
    A, X, B = _random_instance(22)
    with pytest.raises(PreconditionError):
        refined_mcintosh(McIntoshInstance.from_matrices(A, X, B, 0.0))


def test_ratio_above_certified_bound_is_reported_as_violated(monkeypatch):
    original = refinement.certified_improvement

    def inflated(*args, **kwargs):
        bound = original(*args, **kwargs)
        return dataclasses.replace(bound, c_cert=0.999999, log_c_cert=math.log(0.999999))

    monkeypatch.setattr(refinement, "certified_improvement", inflated)
    A, X, B = _random_instance(21)
    refined = refined_mcintosh(McIntoshInstance.from_matrices(A, X, B, 0.5))
    assert refined.status == "violated"
    assert refined.margin < 0
    assert refined.bound.c_cert == 0.999999
    assert "超过可证上界" in refined.notes[-1]


def test_refined_cordes_random_instance():
    A, _, B = _random_instance(23)
    refined = refined_cordes(CordesInstance.from_matrices(A, B, 0.3))
    assert refined.gap.d > 0.0
    assert refined.status == "certified"
    assert refined.margin >= -1e-9


@pytest.mark.parametrize(
    "build",
    [
        lambda: refined_mcintosh(
            McIntoshInstance.from_matrices(np.diag([1.0, 1e-3]), np.eye(2), np.diag([1.0, 2.0]), 0.5)
        ),
        lambda: refined_cordes(CordesInstance.from_matrices(np.diag([4.0, 2.0]), np.diag([4.0, 2.0]), 0.5)),
    ],
    ids=["mcintosh-shared-top-eigenvalue", "cordes-reciprocal-spectra"],
)
def test_coinciding_log_spectra_give_no_certificate(build):
    # 归一化后 log 谱在某个三元组上精确抵消，d = 0
    refined = build()
    assert refined.gap is not None
    assert refined.gap.d == pytest.approx(0.0, abs=1e-12)
    assert refined.status == "no-certificate"
    assert refined.bound is None


@settings(max_examples=20, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**31 - 2),
    r=st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9]),
    side=st.sampled_from([None, "left", "right"]),
)
def test_refined_bound_is_never_exceeded(seed, r, side):
    A, X, B = _random_instance(seed, n=2)
    refined = refined_mcintosh(McIntoshInstance.from_matrices(A, X, B, r), side)
    assert refined.status != "violated"
    if refined.status == "certified":
        assert refined.report.ratio <= 1.0 - refined.bound.c_cert + 1e-9
