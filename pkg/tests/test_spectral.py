"""
谱计算测试
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import ConvergenceError, InputError, PsdOnlyError, SPDViolationError
from core.fuzz import random_spd
from core.spectral import (
    as_symmetric,
    assert_spd,
    bilinear,
    complex_power_apply,
    complex_power_columns,
    complex_power_matrix,
    eigendecompose,
    jacobi_eigh,
    operator_norm,
    psd_order,
    real_power,
    scale_decomposition,
    spectral_projector,
)


@pytest.mark.parametrize("solver", ["jacobi", "lapack"])
def test_eigendecompose_reconstructs(solver):
    M = random_spd(5, [0.1, 0.5, 1.0, 3.0, 9.0], seed=3)
    D = eigendecompose(M, solver=solver)
    np.testing.assert_allclose(D.eigenvalues, [0.1, 0.5, 1.0, 3.0, 9.0], rtol=1e-10)
    np.testing.assert_allclose(D.reconstruct(), M, atol=1e-10)
    np.testing.assert_allclose(D.eigenvectors.T @ D.eigenvectors, np.eye(5), atol=1e-12)


def test_eigenvalues_sorted_and_clustered():
    D = eigendecompose(np.diag([2.0, 1.0, 2.0]))
    assert D.eigenvalues.tolist() == [1.0, 2.0, 2.0]
    assert [cl.multiplicity for cl in D.clusters] == [1, 2]
    assert D.clusters[1].value == pytest.approx(2.0)


def test_sign_normalization_makes_largest_entry_positive():
    D = eigendecompose(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    V = D.eigenvectors
    for k in range(2):
        col = V[:, k]
        assert col[np.argmax(np.abs(col))] > 0


def test_decomposition_is_immutable():
    D = eigendecompose(np.eye(2))
    with pytest.raises(ValueError):
        D.eigenvalues[0] = 5.0


def test_jacobi_reports_non_convergence():
    M = random_spd(6, np.linspace(1, 6, 6), seed=1)
    with pytest.raises(ConvergenceError):
        jacobi_eigh(M, max_sweeps=1, offdiag_rel_tol=1e-300)


@pytest.mark.parametrize("bad", [
    [[1.0, 2.0], [0.0, 1.0]],
    [[1.0, np.nan], [np.nan, 1.0]],
    [[1.0, 2.0, 3.0]],
])
def test_as_symmetric_rejects(bad):
    with pytest.raises(InputError):
        as_symmetric(bad)


def test_as_symmetric_symmetrizes_within_tolerance():
    S = as_symmetric([[1.0, 2.0], [2.0 + 1e-10, 1.0]])
    assert np.array_equal(S, S.T)


def test_assert_spd_statuses():
    assert assert_spd(eigendecompose(np.eye(3))) == "spd"
    assert assert_spd(eigendecompose(np.diag([1.0, 0.0]))) == "psd-only"
    with pytest.raises(SPDViolationError) as excinfo:
        assert_spd(eigendecompose(np.diag([1.0, -1.0])))
    assert excinfo.value.eigenvalues == [-1.0]


def test_psd_matrix_rejects_complex_power():
    D = eigendecompose(np.diag([1.0, 0.0]))
    with pytest.raises(PsdOnlyError):
        complex_power_matrix(D, 0.5j)
    # 实数幂仍然允许, 0^p = 0
    np.testing.assert_allclose(real_power(D, 0.5), np.diag([1.0, 0.0]))


@pytest.mark.parametrize("p", [0.0, -0.5])
def test_zero_eigenvalue_rejects_nonpositive_power(p):
    D = eigendecompose(np.diag([1.0, 0.0]))
    with pytest.raises(SPDViolationError) as excinfo:
        real_power(D, p)
    assert excinfo.value.eigenvalues == [0.0]


def test_spd_zeroth_power_is_identity():
    D = eigendecompose(np.diag([2.0, 0.5]))
    np.testing.assert_allclose(real_power(D, 0.0), np.eye(2))


def test_real_power_matches_square_root():
    M = random_spd(4, [0.5, 1.0, 2.0, 4.0], seed=11)
    D = eigendecompose(M)
    root = real_power(D, 0.5)
    np.testing.assert_allclose(root @ root, M, atol=1e-10)


def test_imaginary_power_is_unitary():
    D = eigendecompose(random_spd(4, [0.01, 0.3, 5.0, 80.0], seed=2))
    for t in (-7.5, 0.3, 12.0):
        U = complex_power_matrix(D, 1j * t)
        np.testing.assert_allclose(U.conj().T @ U, np.eye(4), atol=1e-12)


def test_complex_power_apply_agrees_with_matrix():
    D = eigendecompose(random_spd(3, [0.2, 1.0, 7.0], seed=5))
    v = np.array([0.3, -1.0, 2.0])
    z = 0.4 + 2.5j
    expected = complex_power_matrix(D, z) @ v
    np.testing.assert_allclose(complex_power_apply(D, z, v), expected, atol=1e-12)
    cols = complex_power_columns(D, [z, 0.0], v)
    np.testing.assert_allclose(cols[0], expected, atol=1e-12)
    np.testing.assert_allclose(cols[1], v, atol=1e-12)


def test_operator_norm_matches_svd():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((4, 4))
    result = operator_norm(M)
    assert result.value == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-12)
    assert np.linalg.norm(M @ result.witness) == pytest.approx(result.value, rel=1e-10)


def test_operator_norm_complex_embedding():
    M = np.array([[1.0 + 2.0j, 0.5], [0.0, -1.0j]])
    result = operator_norm(M)
    assert result.value == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-12)
    assert np.linalg.norm(M @ result.witness) == pytest.approx(result.value, rel=1e-10)


def test_operator_norm_identity_witness_is_first_basis_vector():
    result = operator_norm(np.eye(3))
    assert result.value == pytest.approx(1.0)
    np.testing.assert_allclose(np.abs(result.witness), [1.0, 0.0, 0.0])


def test_spectral_projector_is_idempotent():
    D = eigendecompose(np.diag([1.0, 3.0, 3.0]))
    P = spectral_projector(D, 1)
    np.testing.assert_allclose(P @ P, P, atol=1e-14)
    assert np.trace(P) == pytest.approx(2.0)
    with pytest.raises(InputError):
        spectral_projector(D, 5)


def test_scale_decomposition():
    D = eigendecompose(np.diag([1.0, 2.0]))
    S = scale_decomposition(D, 3.0)
    assert S.eigenvalues.tolist() == [3.0, 6.0]
    assert S.clusters[1].value == pytest.approx(6.0)
    with pytest.raises(InputError):
        scale_decomposition(D, 0.0)


def test_psd_order_and_bilinear():
    assert psd_order(np.diag([2.0, 2.0]), np.eye(2))
    assert not psd_order(np.eye(2), np.diag([2.0, 0.5]))
    assert bilinear([1j, 1.0], [1j, 2.0]) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=6),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_jacobi_agrees_with_lapack(n, seed):
    rng = np.random.default_rng(seed)
    spectrum = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), n))
    M = random_spd(n, spectrum, seed)
    jac = eigendecompose(M, solver="jacobi")
    lap = eigendecompose(M, solver="lapack")
    np.testing.assert_allclose(jac.eigenvalues, lap.eigenvalues, rtol=1e-9, atol=1e-12)
