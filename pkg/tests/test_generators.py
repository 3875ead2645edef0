"""
Unit tests for GKSL generators and the Kossakowski representation
"""

import pytest
import numpy as np
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from errors import DimensionMismatch, ValidationError
from generators import (
    DiagonalGenerator, KossakowskiGenerator, LindbladTerm, RateSchedule,
    diagonal_to_kossakowski, gell_mann_basis, gksl_superop, is_instantaneously_markovian,
    kossakowski_from_superop, kossakowski_matrix, kossakowski_superop, pauli_matrices
)
from linops import kron, random_hermitian, vec


def dephasing(rate: RateSchedule) -> DiagonalGenerator:
    return DiagonalGenerator(2, (LindbladTerm(pauli_matrices()[2], rate),))


class TestRateSchedule:
    """Rate schedules and their serialization."""

    def test_kinds(self):
        assert RateSchedule.constant(0.3)(5.0) == pytest.approx(0.3)
        assert RateSchedule.sinusoid(1.0)(np.pi / 2) == pytest.approx(1.0)
        assert RateSchedule.sinusoid(2.0, omega=2.0, phase=0.1, offset=0.5)(0.3) == pytest.approx(
            0.5 + 2.0 * np.sin(0.7)
        )
        assert RateSchedule.tanh_negative(1.0)(1.0) == pytest.approx(-np.tanh(1.0))

    def test_table_interpolates_and_holds(self):
        table = RateSchedule.table([0.0, 1.0, 2.0], [1.0, -1.0, 0.0])
        assert table(0.5) == pytest.approx(0.0)
        assert table(5.0) == pytest.approx(0.0)

    def test_piecewise_alias(self):
        schedule = RateSchedule('piecewise_table', {'times': [0.0, 1.0], 'values': [0.0, 2.0]})
        assert schedule.kind == 'table'
        assert schedule(0.25) == pytest.approx(0.5)

    def test_composite_sums_parts(self):
        schedule = RateSchedule.composite([RateSchedule.constant(1.0), RateSchedule.tanh_negative(1.0)])
        assert schedule(2.0) == pytest.approx(1.0 - np.tanh(2.0))

    def test_invalid_kind(self):
        with pytest.raises(ValueError):
            RateSchedule('exponential', {'value': 1.0})

    def test_missing_parameter(self):
        with pytest.raises(ValueError):
            RateSchedule('sinusoid', {'omega': 1.0})

    def test_unsorted_table(self):
        with pytest.raises(ValueError):
            RateSchedule.table([1.0, 0.0], [0.0, 1.0])

    def test_dict_round_trip(self):
        schedule = RateSchedule.composite([
            RateSchedule.sinusoid(1.0, omega=0.5), RateSchedule.table([0.0, 1.0], [0.2, 0.3])
        ])
        restored = RateSchedule.from_dict(schedule.to_dict())
        for t in (0.0, 0.4, 3.0):
            assert restored(t) == schedule(t)


class TestBasis:
    """Generalized Gell-Mann basis."""

    @pytest.mark.parametrize('dim', [2, 3, 4])
    def test_orthonormal_traceless_hermitian(self, dim):
        basis = gell_mann_basis(dim)
        assert basis.shape == (dim * dim - 1, dim, dim)
        gram = np.einsum('jab,kba->jk', basis, basis)
        np.testing.assert_allclose(gram, np.eye(dim * dim - 1), atol=1e-14)
        for f in basis:
            assert abs(np.trace(f)) < 1e-14
            np.testing.assert_allclose(f, f.conj().T)

    def test_qubit_basis_is_scaled_pauli(self):
        for f, sigma in zip(gell_mann_basis(2), pauli_matrices()):
            np.testing.assert_allclose(f, sigma / np.sqrt(2))

    def test_basis_is_read_only(self):
        with pytest.raises(ValueError):
            gell_mann_basis(2)[0, 0, 0] = 1.0


class TestGenerators:
    """Validation and rendering of generators."""

    def test_too_many_terms(self):
        terms = tuple(LindbladTerm(np.eye(2), RateSchedule.constant(1.0)) for _ in range(5))
        with pytest.raises(ValidationError) as info:
            DiagonalGenerator(2, terms)
        assert info.value.invariant == 'n <= d^2'

    def test_operator_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            DiagonalGenerator(2, (LindbladTerm(np.eye(3), RateSchedule.constant(1.0)),))

    def test_kossakowski_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            KossakowskiGenerator.constant(2, np.eye(2))

    def test_negative_time(self):
        with pytest.raises(ValueError):
            gksl_superop(dephasing(RateSchedule.constant(1.0)), -0.1)

    def test_dephasing_superop(self):
        gamma = -0.5
        z = pauli_matrices()[2]
        superop = gksl_superop(dephasing(RateSchedule.constant(gamma)), 0.0)
        np.testing.assert_allclose(superop, gamma * (kron(z, z) - np.eye(4)), atol=1e-15)

    def test_trace_annihilating_and_hermiticity_preserving(self):
        rng = np.random.default_rng(3)
        g = KossakowskiGenerator.constant(3, random_hermitian(8, rng), random_hermitian(3, rng))
        superop = gksl_superop(g, 0.0)
        np.testing.assert_allclose(vec(np.eye(3)).conj() @ superop, 0.0, atol=1e-12)

        rho = random_hermitian(3, rng)
        out = (superop @ vec(rho)).reshape(3, 3, order='F')
        np.testing.assert_allclose(out, out.conj().T, atol=1e-12)

    def test_dephasing_kossakowski_matrix(self):
        a = kossakowski_matrix(dephasing(RateSchedule.constant(0.3)), 1.0)
        np.testing.assert_allclose(a, np.diag([0.0, 0.0, 0.6]), atol=1e-14)

    def test_diagonal_to_kossakowski_reproduces_superop(self):
        rng = np.random.default_rng(5)
        terms = tuple(
            LindbladTerm(
                rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)),
                RateSchedule.sinusoid(1.0, phase=float(k))
            )
            for k in range(3)
        )
        g = DiagonalGenerator(2, terms, random_hermitian(2, rng))
        for t in (0.0, 0.7, 2.5):
            converted = diagonal_to_kossakowski(g, t)
            np.testing.assert_allclose(gksl_superop(converted, 0.0), gksl_superop(g, t), atol=1e-12)

    def test_kossakowski_recovery(self):
        rng = np.random.default_rng(8)
        a = random_hermitian(3, rng)
        h = random_hermitian(2, rng)
        h -= np.trace(h) / 2 * np.eye(2)
        recovered_a, recovered_h = kossakowski_from_superop(kossakowski_superop(a, 2, h), 2)
        np.testing.assert_allclose(recovered_a, a, atol=1e-12)
        np.testing.assert_allclose(recovered_h, h, atol=1e-12)

    def test_markovian_instants(self):
        g = dephasing(RateSchedule.sinusoid(1.0))
        assert is_instantaneously_markovian(g, np.pi / 2)
        assert not is_instantaneously_markovian(g, 3 * np.pi / 2)
        assert is_instantaneously_markovian(g, 0.0)
