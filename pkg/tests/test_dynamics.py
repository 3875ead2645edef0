"""
Unit tests for propagators and incremental maps
"""

import pytest
import numpy as np
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from dynamics import (
    Propagator, default_step, incremental_from_snapshots, incremental_map, propagate
)
from errors import StepTooLarge
from generators import DiagonalGenerator, LindbladTerm, RateSchedule, pauli_matrices
from models import dephasing_sin, random_kossakowski

PLUS = np.full((2, 2), 0.5, dtype=complex)


def coherence(p: Propagator) -> complex:
    return p.apply(PLUS)[0, 1]


class TestPropagate:
    """Time-ordered propagation."""

    def test_zero_window_is_identity(self):
        p = propagate(dephasing_sin().generator, 1.0, 1.0)
        np.testing.assert_array_equal(p.superop, np.eye(4))

    def test_reversed_window(self):
        with pytest.raises(ValueError):
            propagate(dephasing_sin().generator, 2.0, 1.0)

    def test_default_step(self):
        assert default_step(0.0, 1.0) == pytest.approx(1e-3)
        assert default_step(0.0, 0.01) == pytest.approx(1e-4)

    def test_dephasing_sin_closed_form(self):
        p = propagate(dephasing_sin().generator, 0.0, 2.0)
        expected = 0.5 * np.exp(-2.0 * (1.0 - np.cos(2.0)))
        assert coherence(p) == pytest.approx(expected, abs=1e-8)
        assert np.trace(p.apply(PLUS)).real == pytest.approx(1.0, abs=1e-12)

    def test_second_order_convergence(self):
        g = dephasing_sin().generator
        reference = propagate(g, 0.0, 2.0, step=0.1 / 16).superop
        coarse = np.max(np.abs(propagate(g, 0.0, 2.0, step=0.1).superop - reference))
        fine = np.max(np.abs(propagate(g, 0.0, 2.0, step=0.05).superop - reference))
        assert coarse / fine >= 3.5

    def test_step_too_large(self):
        g = DiagonalGenerator(2, (LindbladTerm(pauli_matrices()[2], RateSchedule.constant(1e4)),))
        with pytest.raises(StepTooLarge):
            propagate(g, 0.0, 1.0, step=1.0)

    def test_composition_matches_direct(self):
        g = random_kossakowski().generator
        first = propagate(g, 0.0, 1.0, step=0.01)
        second = propagate(g, 1.0, 2.0, step=0.01)
        direct = propagate(g, 0.0, 2.0, step=0.01)
        np.testing.assert_allclose(second.compose(first).superop, direct.superop, atol=1e-12)

    def test_compose_requires_adjacent_windows(self):
        g = dephasing_sin().generator
        with pytest.raises(ValueError):
            propagate(g, 1.5, 2.0).compose(propagate(g, 0.0, 1.0))

    def test_snapshots_recover_increment(self):
        g = random_kossakowski().generator
        earlier = propagate(g, 0.0, 1.0, step=0.01)
        later = propagate(g, 0.0, 1.5, step=0.01)
        increment = incremental_from_snapshots(later, earlier)
        expected = propagate(g, 1.0, 1.5, step=0.01)
        np.testing.assert_allclose(increment.superop, expected.superop, atol=1e-10)

    def test_invalid_superoperator_rejected(self):
        with pytest.raises(ValueError):
            Propagator(2.0 * np.eye(4), 0.0, 1.0, 0.1)


class TestIncrementalMap:
    """Single-step increments Lambda(t + eps, t)."""

    def test_requires_positive_eps(self):
        with pytest.raises(ValueError):
            incremental_map(dephasing_sin().generator, 1.0, 0.0)

    def test_single_step(self):
        p = incremental_map(dephasing_sin().generator, 1.0, 1e-3)
        assert p.step == pytest.approx(1e-3)
        assert p.t_end == pytest.approx(1.0 + 1e-3)

    def test_explicit_step_subdivides(self):
        g = dephasing_sin().generator
        fine = incremental_map(g, 1.0, 1e-2, step=2.5e-3)
        assert fine.step == pytest.approx(2.5e-3)
        single = incremental_map(g, 1.0, 1e-2)
        np.testing.assert_allclose(fine.superop, single.superop, atol=1e-6)
        # A step longer than eps still gives one exponential
        assert incremental_map(g, 1.0, 1e-2, step=1.0).step == pytest.approx(1e-2)
        with pytest.raises(ValueError):
            incremental_map(g, 1.0, 1e-2, step=0.0)

    def test_first_order_in_eps(self):
        eps = 1e-4
        p = incremental_map(dephasing_sin().generator, 3 * np.pi / 2, eps)
        # gamma = -1 near 3 pi / 2: coherence grows like exp(2 eps)
        assert coherence(p).real == pytest.approx(0.5 * np.exp(2 * eps), rel=1e-7)
