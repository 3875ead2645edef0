"""
Unit tests for the dense linear algebra kernel
"""

import pytest
import numpy as np
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from errors import DimensionMismatch, NonHermitian
from linops import (
    choi_to_superop, herm_eig, hermitize, is_hermitian, kron, partial_trace,
    permute_subsystems, project_psd, random_density_matrix, random_hermitian,
    random_unitary, reshuffle, superop_to_choi, trace_norm, trace_norm_subgradient,
    unvec, vec
)


@pytest.fixture
def rng():
    return np.random.default_rng(11)


class TestHermitianKernel:
    """Eigendecomposition, trace norm and PSD projection."""

    def test_eigendecomposition_reconstructs(self, rng):
        m = random_hermitian(4, rng)
        eigenvalues, eigenvectors = herm_eig(m)

        assert np.all(np.diff(eigenvalues) >= 0)
        np.testing.assert_allclose(eigenvectors @ np.diag(eigenvalues) @ eigenvectors.conj().T, m, atol=1e-12)
        np.testing.assert_allclose(eigenvectors.conj().T @ eigenvectors, np.eye(4), atol=1e-12)

    def test_trace_norm_examples(self):
        assert trace_norm(np.diag([1.0, -2.0])) == pytest.approx(3.0)
        assert trace_norm(np.zeros((3, 3))) == 0.0
        assert trace_norm(np.eye(4) / 4) == pytest.approx(1.0)

    def test_trace_norm_unitary_invariant(self, rng):
        m = random_hermitian(3, rng)
        u = random_unitary(3, rng)
        assert trace_norm(u @ m @ u.conj().T) == pytest.approx(trace_norm(m), abs=1e-12)

    def test_non_hermitian_rejected(self):
        with pytest.raises(NonHermitian):
            hermitize(np.array([[0, 1], [0, 0]], dtype=complex))
        with pytest.raises(NonHermitian):
            trace_norm(np.array([[1, 1j], [1j, 1]]))

    def test_hermitize_tolerates_roundoff(self):
        m = np.array([[1.0, 2.0], [2.0 + 1e-15, 3.0]])
        assert is_hermitian(m)
        out = hermitize(m)
        np.testing.assert_array_equal(out, out.conj().T)

    def test_hermitize_absolute_floor(self):
        # Roundoff-level matrix: purely relative test cannot accept it
        m = np.array([[5e-24, 3.5e-18], [0.0, -5e-24]], dtype=complex)
        with pytest.raises(NonHermitian):
            hermitize(m, rtol=1e-8)
        out = hermitize(m, rtol=1e-8, atol=1e-15)
        np.testing.assert_array_equal(out, out.conj().T)
        with pytest.raises(NonHermitian):
            hermitize(np.array([[0, 1], [0, 0]], dtype=complex), atol=1e-15)

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatch):
            trace_norm(np.ones((2, 3)))

    def test_subgradient_attains_norm(self, rng):
        m = random_hermitian(5, rng)
        norm, g = trace_norm_subgradient(m)

        assert norm == pytest.approx(trace_norm(m))
        assert np.trace(g @ m).real == pytest.approx(norm, abs=1e-10)
        assert np.max(np.abs(np.linalg.eigvalsh(g))) <= 1.0 + 1e-12

    def test_subgradient_zero_direction(self):
        _, g = trace_norm_subgradient(np.diag([2.0, 0.0, -1.0]))
        np.testing.assert_allclose(np.diag(g).real, [1.0, 0.0, -1.0], atol=1e-14)

    def test_project_psd(self, rng):
        m = random_hermitian(4, rng)
        p = project_psd(m)

        assert np.linalg.eigvalsh(p)[0] >= -1e-12
        np.testing.assert_allclose(project_psd(p), p, atol=1e-12)
        rho = random_density_matrix(4, rng)
        np.testing.assert_allclose(project_psd(rho), rho, atol=1e-12)


class TestVectorization:
    """vec/unvec conventions and the Choi reshuffle."""

    def test_vec_is_column_stacking(self):
        m = np.array([[1, 2], [3, 4]])
        np.testing.assert_array_equal(vec(m), [1, 3, 2, 4])
        np.testing.assert_array_equal(unvec(vec(m), 2), m)

    def test_vec_sandwich_identity(self, rng):
        a, x, b = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(3))
        np.testing.assert_allclose(vec(a @ x @ b), kron(b.T, a) @ vec(x), atol=1e-12)

    def test_unvec_size_mismatch(self):
        with pytest.raises(DimensionMismatch):
            unvec(np.arange(5), 2)

    def test_reshuffle_is_involution(self, rng):
        s = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        np.testing.assert_array_equal(reshuffle(reshuffle(s, 3), 3), s)

    def test_identity_channel_gives_maximally_entangled(self):
        d = 3
        psi = np.eye(d).reshape(-1) / np.sqrt(d)
        np.testing.assert_allclose(superop_to_choi(np.eye(d * d), d), np.outer(psi, psi), atol=1e-15)

    def test_choi_of_sandwich(self, rng):
        d = 2
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        choi = superop_to_choi(kron(a.conj(), a), d)
        expected = np.outer(vec(a), vec(a).conj()) / d
        np.testing.assert_allclose(choi, expected, atol=1e-14)
        np.testing.assert_allclose(choi_to_superop(choi, d), kron(a.conj(), a), atol=1e-14)

    def test_reshuffle_shape_check(self):
        with pytest.raises(DimensionMismatch):
            reshuffle(np.eye(3), 2)


class TestSubsystems:
    """Partial trace and subsystem permutation."""

    def test_partial_trace_of_product(self, rng):
        a = random_density_matrix(2, rng)
        b = random_density_matrix(3, rng)
        joint = kron(a, b)

        np.testing.assert_allclose(partial_trace(joint, [2, 3], [0]), a, atol=1e-14)
        np.testing.assert_allclose(partial_trace(joint, [2, 3], [1]), b, atol=1e-14)
        assert partial_trace(joint, [2, 3], []).item() == pytest.approx(1.0)

    def test_permute_swaps_factors(self, rng):
        a = random_hermitian(2, rng)
        b = random_hermitian(3, rng)
        np.testing.assert_allclose(permute_subsystems(kron(a, b), [2, 3], [1, 0]), kron(b, a), atol=1e-14)

    def test_invalid_permutation(self):
        with pytest.raises(DimensionMismatch):
            permute_subsystems(np.eye(4), [2, 2], [0, 0])
