"""
不等式求值测试
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import DegenerateInstanceError, InputError
from core.fuzz import random_spd, random_stream
from core.inequalities import (
    CordesInstance,
    McIntoshInstance,
    evaluate_cordes,
    evaluate_fujii_furuta,
    evaluate_heinz_kato,
    evaluate_loewner_heinz,
    evaluate_mcintosh,
    normalize_cordes,
    normalize_mcintosh,
    worked_example,
)
from core.spectral import operator_norm


@pytest.mark.parametrize("a, b, r", [
    (2.0, 0.5, 0.5),
    (4.0, 1.0, 0.25),
    (3.0, 9.0, 0.5),
    (0.5, 4.0, 0.75),
])
def test_worked_example_closed_form(a, b, r):
    example = worked_example(a, b, r)
    report = evaluate_mcintosh(example.instance)
    assert report.lhs == pytest.approx(example.expected_lhs, rel=1e-12)
    assert report.rhs == pytest.approx(example.expected_rhs, rel=1e-12)
    assert report.holds


def test_worked_example_equality_when_b_at_most_one():
    report = evaluate_mcintosh(worked_example(2.0, 0.5, 0.5).instance)
    assert report.ratio == pytest.approx(1.0, abs=1e-12)


def test_mcintosh_endpoints_are_equalities():
    rng = random_stream(1)
    A = random_spd(3, [0.5, 1.0, 2.0], 1)
    B = random_spd(3, [0.3, 1.5, 6.0], 2)
    X = rng.standard_normal((3, 3))
    for r in (0.0, 1.0):
        report = evaluate_mcintosh(McIntoshInstance.from_matrices(A, X, B, r))
        assert report.ratio == pytest.approx(1.0, rel=1e-10)


def test_mcintosh_rejects_bad_input():
    with pytest.raises(InputError):
        McIntoshInstance.from_matrices(np.eye(2), np.eye(3), np.eye(2), 0.5)
    with pytest.raises(InputError):
        evaluate_mcintosh(McIntoshInstance.from_matrices(np.eye(2), np.eye(2), np.eye(2), 1.5))


def test_zero_rhs_is_trivial():
    report = evaluate_mcintosh(McIntoshInstance.from_matrices(np.eye(2), np.zeros((2, 2)), np.eye(2), 0.5))
    assert report.status == "trivial"
    assert report.ratio is None


def test_normalize_mcintosh_gives_unit_norms():
    A = random_spd(3, [0.2, 1.0, 5.0], 4)
    B = random_spd(3, [1.0, 2.0, 30.0], 5)
    X = random_stream(6).standard_normal((3, 3))
    inst = normalize_mcintosh(McIntoshInstance.from_matrices(A, X, B, 0.3))
    assert inst.normalized
    assert operator_norm(inst.A @ inst.X).value == pytest.approx(1.0, rel=1e-12)
    assert operator_norm(inst.X @ inst.B).value == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DegenerateInstanceError):
        normalize_mcintosh(McIntoshInstance.from_matrices(A, np.zeros((3, 3)), B, 0.3))


def test_adjoint_preserves_lhs():
    A = random_spd(3, [0.2, 1.0, 5.0], 7)
    B = random_spd(3, [1.0, 2.0, 3.0], 8)
    X = random_stream(9).standard_normal((3, 3))
    inst = McIntoshInstance.from_matrices(A, X, B, 0.3)
    lhs = evaluate_mcintosh(inst).lhs
    assert evaluate_mcintosh(inst.adjoint()).lhs == pytest.approx(lhs, rel=1e-10)


def test_cordes_holds_and_normalizes():
    A = random_spd(3, [0.5, 1.0, 4.0], 10)
    B = random_spd(3, [0.1, 2.0, 3.0], 11)
    for s in (0.0, 0.3, 0.7, 1.0):
        report = evaluate_cordes(CordesInstance.from_matrices(A, B, s))
        assert report.holds
    norm = normalize_cordes(CordesInstance.from_matrices(A, B, 0.5))
    assert operator_norm(norm.A @ norm.B).value == pytest.approx(1.0, rel=1e-12)


def test_cordes_equality_for_commuting_scalars():
    report = evaluate_cordes(CordesInstance.from_matrices(2.0 * np.eye(2), 3.0 * np.eye(2), 0.5))
    assert report.ratio == pytest.approx(1.0, rel=1e-12)


def test_fujii_furuta_is_relabeled_mcintosh():
    A = random_spd(3, [0.5, 1.0, 2.0], 12)
    B = random_spd(3, [0.7, 1.1, 1.9], 13)
    X = random_stream(14).standard_normal((3, 3))
    report = evaluate_fujii_furuta(A, X, B)
    assert report.name == "fujii-furuta"
    assert report.lhs == pytest.approx(operator_norm(A @ X @ B).value, rel=1e-10)
    expected_rhs = np.sqrt(operator_norm(A @ A @ X).value * operator_norm(X @ B @ B).value)
    assert report.rhs == pytest.approx(expected_rhs, rel=1e-10)
    assert report.holds


def test_heinz_kato_with_valid_hypotheses():
    A = random_spd(3, [1.0, 2.0, 3.0], 15)
    B = random_spd(3, [1.0, 1.5, 4.0], 16)
    T = 0.5 * np.eye(3)
    x = np.array([1.0, -2.0, 0.5])
    y = np.array([0.3, 0.2, 1.0])
    report = evaluate_heinz_kato(T, A, B, 0.4, x, y)
    assert report.parameters['hypotheses_verified']
    assert report.holds


def test_heinz_kato_unmet_hypotheses_make_no_claim():
    T = 10.0 * np.eye(2)
    report = evaluate_heinz_kato(T, np.eye(2), np.eye(2), 0.5, np.ones(2), np.ones(2))
    assert report.status == "hypotheses-unmet"
    assert not report.holds


def test_loewner_heinz():
    B = random_spd(3, [0.5, 1.0, 2.0], 17)
    A = B + random_spd(3, [0.1, 0.2, 0.3], 18)
    report = evaluate_loewner_heinz(A, B, 0.5)
    assert report.status == "holds"
    assert report.min_eigenvalue >= -1e-8
    unmet = evaluate_loewner_heinz(B, A, 0.5)
    assert unmet.status == "precondition-unmet"
    assert unmet.holds is None


def test_loewner_heinz_fails_above_one_is_not_asserted():
    # α 只允许 [0, 1]
    with pytest.raises(InputError):
        evaluate_loewner_heinz(np.eye(2), np.eye(2), 2.0)


def test_report_to_dict_is_plain():
    report = evaluate_mcintosh(worked_example(2.0, 0.5, 0.5).instance)
    data = report.to_dict()
    assert data['name'] == "mcintosh"
    assert isinstance(data['witness'], list)
    assert data['parameters']['r'] == 0.5


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=5),
    r=st.floats(min_value=0.0, max_value=1.0),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_mcintosh_never_violated(n, r, seed):
    rng = random_stream(seed)
    A = random_spd(n, np.exp(rng.uniform(np.log(1e-2), np.log(1e2), n)), seed)
    B = random_spd(n, np.exp(rng.uniform(np.log(1e-2), np.log(1e2), n)), seed + 1)
    X = rng.standard_normal((n, n))
    report = evaluate_mcintosh(McIntoshInstance.from_matrices(A, X, B, r))
    assert report.status in ("holds", "trivial")


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=5),
    s=st.floats(min_value=0.0, max_value=1.0),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_cordes_never_violated(n, s, seed):
    rng = random_stream(seed)
    A = random_spd(n, np.exp(rng.uniform(-2.0, 2.0, n)), seed)
    B = random_spd(n, np.exp(rng.uniform(-2.0, 2.0, n)), seed + 1)
    assert evaluate_cordes(CordesInstance.from_matrices(A, B, s)).holds
