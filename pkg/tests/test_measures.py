"""
Unit tests for the non-Markovianity measures
"""

import math
from dataclasses import replace

import pytest
import numpy as np
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from choi import (
    ChoiMatrix, choi_derivative, choi_of_propagator, derivative_from_kossakowski,
    local_map_action, maximally_entangled
)
from dynamics import incremental_map, propagate
from errors import NonTraceless, NotMarkovian, UnsortedGrid
from generators import KossakowskiGenerator, pauli_matrices
from linops import project_psd, random_hermitian, trace_norm
from measures import (
    NonMarkovianityEngine, TRAJECTORY_COLUMNS, dt_measure, monotonicity_check,
    monotonicity_gap, normalized_measure, rhp_g, rhp_integral, robustness_cumulative,
    robustness_decomposition, robustness_incremental, time_grid
)
from models import amplitude_damping_const, dephasing_const, dephasing_sin, eternal_nm
from optimizer import BruteForceOracle, FreeConeProblem, OptimizerConfig


def dephasing_derivative(gamma: float):
    g = KossakowskiGenerator.constant(2, np.diag([0.0, 0.0, 2.0 * gamma]))
    return choi_derivative(g, 0.0)


def full_rank_psd(rng: np.random.Generator, n: int = 3) -> np.ndarray:
    b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return b @ b.conj().T


def depolarizing(rate: float) -> KossakowskiGenerator:
    return KossakowskiGenerator.constant(2, rate * np.eye(3))


class TestRHPRate:
    """Exact-limit RHP rate g."""

    def test_markovian_is_zero(self):
        assert rhp_g(dephasing_derivative(0.7)) == 0.0
        assert rhp_g(choi_derivative(amplitude_damping_const().generator, 1.0)) == 0.0

    def test_dephasing_value(self):
        assert rhp_g(dephasing_derivative(-0.5)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize('t', [0.1, 0.5, 1.0, 2.0, 3.0])
    def test_eternal_nm_closed_form(self, t):
        assert rhp_g(choi_derivative(eternal_nm().generator, t)) == pytest.approx(math.tanh(t), abs=1e-6)

    def test_dephasing_sin_closed_form(self):
        model = dephasing_sin()
        for t in np.linspace(0.0, 2 * np.pi, 1000):
            g = rhp_g(choi_derivative(model.generator, float(t)))
            assert g == pytest.approx(2.0 * max(0.0, -math.sin(t)), abs=1e-6)

    def test_rejects_trace(self):
        with pytest.raises(NonTraceless):
            rhp_g(np.eye(4) / 4)

    def test_finite_eps_converges_linearly(self):
        g = eternal_nm().generator
        exact = rhp_g(choi_derivative(g, 1.0))
        errors = []
        for eps in (1e-3, 5e-4, 2.5e-4):
            c = choi_of_propagator(incremental_map(g, 1.0, eps))
            errors.append(abs(2.0 * robustness_incremental(c) / eps - exact))
        assert errors[0] / errors[1] == pytest.approx(2.0, rel=0.1)
        assert errors[1] / errors[2] == pytest.approx(2.0, rel=0.1)

    @pytest.mark.parametrize('eps', [1e-3, 1e-4, 1e-5])
    def test_finite_eps_matches_exact(self, eps):
        g = dephasing_sin().generator
        t = 3 * np.pi / 2
        c = choi_of_propagator(incremental_map(g, t, eps))
        assert (c.trace_norm - 1.0) / eps == pytest.approx(2.0, rel=5 * eps)


class TestCumulativeMeasures:
    """N_T, robustness and the normalized measure."""

    def test_zero_rate(self):
        np.testing.assert_array_equal(rhp_integral([0.0, 1.0, 2.0], [0.0, 0.0, 0.0]), 0.0)

    def test_dephasing_period(self):
        t = time_grid(2 * np.pi, 1e-3)
        n_t = rhp_integral(t, 2.0 * np.maximum(0.0, -np.sin(t)))
        assert n_t[-1] == pytest.approx(4.0, abs=2e-3)
        assert np.all(np.diff(n_t) >= 0)

    def test_pairs_input(self):
        pairs = [(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]
        np.testing.assert_allclose(rhp_integral(pairs), [0.0, 1.0, 2.0])

    def test_unsorted_grid(self):
        with pytest.raises(UnsortedGrid):
            rhp_integral([0.0, 2.0, 1.0], [0.0, 0.0, 0.0])

    def test_robustness_and_normalized(self):
        assert robustness_cumulative(0.0) == 0.0
        assert robustness_cumulative(4.0) == pytest.approx(2.0)
        assert normalized_measure(0.0) == 0.0
        assert normalized_measure(4.0) == pytest.approx(0.8)
        r = robustness_cumulative(1.7)
        assert normalized_measure(1.7) == pytest.approx(2 * r / (1 + 2 * r))
        with pytest.raises(ValueError):
            normalized_measure(-1.0)

    def test_robustness_incremental(self):
        assert robustness_incremental(maximally_entangled(2)) == 0.0
        c = ChoiMatrix(1, np.array([[1.0]]))
        assert robustness_incremental(c) == 0.0
        assert robustness_incremental(np.diag([0.75, 0.5, -0.25, 0.0])) == pytest.approx(0.25)

    def test_dephasing_increment_robustness(self):
        eps = 1e-3
        model = KossakowskiGenerator.constant(2, np.diag([0.0, 0.0, -2.0]))
        c = choi_of_propagator(incremental_map(model, 0.0, eps))
        assert robustness_incremental(c) == pytest.approx(eps * 2.0 / 2.0, rel=2e-3)

    def test_decomposition(self):
        c = choi_of_propagator(incremental_map(dephasing_sin().generator, 4.0, 0.05))
        r, delta, tau = robustness_decomposition(c)
        assert r == pytest.approx(robustness_incremental(c), abs=1e-12)
        np.testing.assert_allclose((1 + r) * delta - r * tau, c.matrix, atol=1e-12)
        assert np.trace(delta).real == pytest.approx(1.0)
        assert np.trace(tau).real == pytest.approx(1.0)
        assert np.linalg.eigvalsh(delta)[0] >= -1e-12
        assert np.linalg.eigvalsh(tau)[0] >= -1e-12

    def test_decomposition_of_free_state(self):
        r, delta, tau = robustness_decomposition(maximally_entangled(2))
        assert r == 0.0 and tau is None
        np.testing.assert_allclose(delta, maximally_entangled(2))


class TestDTMeasure:
    """Free-cone distance rate D_T."""

    @pytest.fixture
    def config(self):
        return OptimizerConfig(max_iter=3000)

    def test_markovian_is_zero_with_own_argmin(self, config):
        rng = np.random.default_rng(4)
        a = project_psd(random_hermitian(3, rng))
        d_t, report = dt_measure(derivative_from_kossakowski(a, 2), config)
        assert d_t <= 1e-9
        np.testing.assert_allclose(report.argmin, a, atol=1e-9)
        assert report.converged

    @pytest.mark.parametrize('seed', range(25))
    def test_full_rank_markovian_is_zero(self, config, seed):
        a = full_rank_psd(np.random.default_rng(seed))
        d_t, report = dt_measure(derivative_from_kossakowski(a, 2), config)
        assert d_t <= 1e-9 * max(1.0, np.trace(a).real)
        assert report.stop_reason == 'exact-fit'
        np.testing.assert_allclose(report.argmin, a, atol=1e-9 * np.abs(a).max())

    def test_full_rank_markovian_qutrit(self, config):
        a = full_rank_psd(np.random.default_rng(8), 8)
        d_t, _ = dt_measure(derivative_from_kossakowski(a, 3), config)
        assert d_t <= 1e-9 * np.trace(a).real

    def test_dephasing_is_tight(self, config):
        d_t, report = dt_measure(dephasing_derivative(-0.5), config)
        assert d_t == pytest.approx(1.0, abs=1e-3)
        assert report.stop_reason in ('lower-bound', 'exact-fit')

    def test_lower_bound(self, config):
        rng = np.random.default_rng(9)
        for _ in range(10):
            k = derivative_from_kossakowski(random_hermitian(3, rng), 2)
            d_t, report = dt_measure(k, config)
            assert d_t >= rhp_g(k) - 1e-6
            assert all(b <= a for a, b in zip(report.history, report.history[1:]))

    def test_scaling(self, config):
        rng = np.random.default_rng(12)
        k = derivative_from_kossakowski(random_hermitian(3, rng), 2)
        d_1, _ = dt_measure(k, config)
        d_3, _ = dt_measure(k.scaled(3.0), config)
        assert d_3 == pytest.approx(3.0 * d_1, rel=1e-5)

    @pytest.mark.parametrize('seed', [13, 14, 15])
    def test_convexity(self, config, seed):
        rng = np.random.default_rng(seed)
        k1 = derivative_from_kossakowski(random_hermitian(3, rng), 2)
        k2 = derivative_from_kossakowski(random_hermitian(3, rng), 2)
        d1, _ = dt_measure(k1, config)
        d2, _ = dt_measure(k2, config)
        for p in (0.25, 0.5, 0.75):
            d_mix, _ = dt_measure(k1.scaled(p) + k2.scaled(1 - p), config)
            assert d_mix <= p * d1 + (1 - p) * d2 + 1e-6

    def test_convexity_of_markovian_mixture(self, config):
        rng = np.random.default_rng(16)
        k1 = derivative_from_kossakowski(full_rank_psd(rng), 2)
        k2 = derivative_from_kossakowski(full_rank_psd(rng), 2)
        mixture = k1.scaled(0.3) + k2.scaled(0.7)
        d_mix, _ = dt_measure(mixture, config)
        assert d_mix <= 1e-9 * trace_norm(mixture.matrix)

    def test_oracle_runs_unseeded(self, config, monkeypatch):
        starts_seen = []
        original = BruteForceOracle.minimize

        def spy(self, problem, starts=()):
            starts_seen.append(list(starts))
            return original(self, problem, starts)

        monkeypatch.setattr(BruteForceOracle, 'minimize', spy)
        cfg = replace(config, oracle=True, oracle_restarts=50, oracle_polish=1)
        d_t, report = dt_measure(dephasing_derivative(-0.5), cfg)
        assert starts_seen == [[]]
        assert report.oracle_gap == pytest.approx(0.0, abs=1e-3)

    def test_eternal_nm_hits_bound(self, config):
        k = choi_derivative(eternal_nm().generator, 1.0)
        d_t, _ = dt_measure(k, config)
        assert d_t == pytest.approx(math.tanh(1.0), abs=1e-6)


class TestMonotonicity:
    """D_T under Markovian post-composition."""

    def test_identity_map_gives_equality(self):
        k = dephasing_derivative(-1.0)
        zero = KossakowskiGenerator.constant(2, np.zeros((3, 3)))
        before, after = monotonicity_gap(k, zero, 0.5)
        assert after == pytest.approx(before, abs=1e-9)

    def test_depolarizing_strictly_decreases(self):
        k = dephasing_derivative(-1.0)
        before, after = monotonicity_gap(k, depolarizing(5.0), 2.0)
        assert before == pytest.approx(2.0, abs=1e-6)
        assert after < 0.5 * before
        assert monotonicity_check(k, depolarizing(5.0), 2.0)

    def test_after_matches_independent_oracle(self):
        k = dephasing_derivative(-1.0)
        markov = depolarizing(1.0)
        before, after = monotonicity_gap(k, markov, 0.5)
        superop = propagate(markov, 0.0, 0.5).superop
        problem = FreeConeProblem(local_map_action(k.matrix, superop, 2), 2, post_map=superop)
        oracle_value, _ = BruteForceOracle(OptimizerConfig(oracle_restarts=100, oracle_polish=2)).minimize(problem)
        assert after == pytest.approx(oracle_value, abs=1e-3)
        assert after < before

    def test_requires_markovian_map(self):
        with pytest.raises(NotMarkovian):
            monotonicity_check(dephasing_derivative(-1.0), depolarizing(-1.0), 0.1)

    def test_random_pairs(self):
        rng = np.random.default_rng(30)
        for _ in range(5):
            k = derivative_from_kossakowski(random_hermitian(3, rng), 2)
            b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            markov = KossakowskiGenerator.constant(2, b @ b.conj().T / 3, random_hermitian(2, rng))
            assert monotonicity_check(k, markov, 0.3)


class TestNonMarkovianityEngine:
    """Trajectories on time grids."""

    def test_invalid_mode(self):
        with pytest.raises(ValueError):
            NonMarkovianityEngine(dephasing_sin().generator, mode='midpoint')

    def test_hamiltonian_directions_stay_excluded(self, caplog):
        h = 0.5 * pauli_matrices()[2]
        generator = KossakowskiGenerator.constant(2, np.zeros((3, 3)), h)
        with caplog.at_level('WARNING'):
            engine = NonMarkovianityEngine(generator)
        assert not engine.config.allow_hamiltonian
        assert 'Hamiltonian' in caplog.text
        allowed = NonMarkovianityEngine(generator, optimizer_config=OptimizerConfig(allow_hamiltonian=True))
        assert allowed.config.allow_hamiltonian
        point = allowed.measure_point(0.5)
        assert point.d_T <= 1e-9

    def test_invalid_step(self):
        with pytest.raises(ValueError):
            NonMarkovianityEngine(dephasing_sin().generator, step=0.0)

    def test_time_grid(self):
        grid = time_grid(1.0, 0.3)
        assert grid[0] == 0.0 and grid[-1] == 1.0
        assert np.all(np.diff(grid) <= 0.3 + 1e-12)

    @pytest.mark.parametrize('model', [dephasing_const(), amplitude_damping_const()])
    def test_markovian_controls(self, model):
        frame = NonMarkovianityEngine(model.generator).simulate(5.0, 0.01)
        assert list(frame.columns) == TRAJECTORY_COLUMNS
        for column in ('g', 'd_T', 'r_inc_rate', 'N_T', 'R_cum'):
            assert frame[column].abs().max() <= 1e-9

    @pytest.mark.slow
    def test_dephasing_sin_period(self):
        frame = NonMarkovianityEngine(dephasing_sin().generator).simulate(6.2832, 0.001)
        last = frame.iloc[-1]
        assert last['N_T'] == pytest.approx(4.0, abs=2e-3)
        assert last['R_cum'] == pytest.approx(2.0, abs=1e-3)
        assert last['T_norm'] == pytest.approx(0.8, abs=4e-4)
        assert (frame['d_T'] - frame['g']).abs().max() <= 1e-3
        assert frame['g_finite_eps'].isna().all()

    def test_eternal_nm_trajectory(self):
        frame = NonMarkovianityEngine(eternal_nm().generator).simulate(3.0, 0.01)
        np.testing.assert_allclose(frame['g'], np.tanh(frame['t']), atol=1e-6)
        np.testing.assert_allclose(frame['N_T'], np.log(np.cosh(frame['t'])), atol=1e-3)
        assert (frame['d_T'] >= frame['g'] - 1e-6).all()

    @pytest.mark.parametrize('model', [dephasing_sin(), eternal_nm()])
    def test_finite_eps_robustness_relation(self, model):
        engine = NonMarkovianityEngine(model.generator, mode='finite-eps', eps=1e-4)
        frame = engine.simulate(3.0 if model.name == 'eternal-nm' else 2 * np.pi, 0.01)
        integrated = rhp_integral(frame['t'].to_numpy(), frame['r_inc_rate'].to_numpy())[-1]
        assert integrated == pytest.approx(0.5 * frame['N_T'].iloc[-1], rel=0.02)

    def test_both_mode_fills_columns(self):
        frame = NonMarkovianityEngine(eternal_nm().generator, mode='both').simulate(1.0, 0.1)
        assert frame['g_finite_eps'].notna().all()
        np.testing.assert_allclose(frame['g_finite_eps'], frame['g'], atol=1e-3)

    def test_measure_point(self):
        engine = NonMarkovianityEngine(eternal_nm().generator)
        point = engine.measure_point(1.0, dt=0.01)
        assert point.g == pytest.approx(math.tanh(1.0), abs=1e-6)
        assert point.N_T == pytest.approx(math.log(math.cosh(1.0)), abs=1e-3)
        assert point.T_norm == pytest.approx(point.N_T / (1 + point.N_T))
        assert point.to_dict()['optimizer']['converged']

    def test_parallel_matches_serial(self):
        serial = NonMarkovianityEngine(eternal_nm().generator).simulate(1.0, 0.25)
        parallel = NonMarkovianityEngine(eternal_nm().generator, n_jobs=2).simulate(1.0, 0.25)
        np.testing.assert_allclose(serial.to_numpy(), parallel.to_numpy(), atol=1e-12)
