"""
Unit tests for the verification suites
"""

import json

import pytest
import numpy as np
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from choi import is_free
from linops import herm_eigvals
from optimizer import OptimizerConfig
from verification import (
    PropertyResult, SUITES, VerificationRunner, random_free_choi, random_markovian_generator,
    random_nonmarkovian_choi, write_report
)


@pytest.fixture
def runner():
    config = OptimizerConfig(oracle_restarts=40, oracle_polish=1, oracle_maxfev=4000)
    return VerificationRunner(
        seed=7, samples=5, random_instances=5, oracle_instances=2,
        grid_dt=0.25, t_max=2.0, optimizer_config=config
    )


class TestSamplers:
    """Random instance generators."""

    def test_free_choi_is_free(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            assert is_free(random_free_choi(rng))

    def test_nonmarkovian_choi_usually_not_free(self):
        rng = np.random.default_rng(1)
        flags = [is_free(random_nonmarkovian_choi(rng)) for _ in range(20)]
        assert not all(flags)

    def test_markovian_generator_is_psd(self):
        g = random_markovian_generator(np.random.default_rng(2), scale=2.0)
        a = g.kossakowski_at(0.0)
        assert herm_eigvals(a)[0] >= -1e-12
        assert np.trace(a).real == pytest.approx(2.0)


class TestPropertyResult:
    """Trial bookkeeping."""

    def test_records_first_counterexample(self):
        result = PropertyResult('demo', 'propositions')
        result.record(True, 0.0)
        result.record(False, 0.5, {'x': 1})
        result.record(False, 0.25, {'x': 2})
        assert not result.passed
        assert result.trials == 3 and result.failures == 2
        assert result.max_violation == 0.5
        assert result.counterexample == {'trial': 1, 'x': 1}


class TestVerificationRunner:
    """Small-sample runs of each suite."""

    def test_invalid_counts(self):
        with pytest.raises(ValueError):
            VerificationRunner(samples=0)

    def test_unknown_suite(self, runner):
        with pytest.raises(ValueError):
            runner.run('theorem2')

    def test_propositions(self, runner):
        report = runner.run('propositions')
        assert report['passed'], [p for p in report['properties'] if not p['passed']]
        assert len(report['properties']) == 13
        assert all(p['trials'] > 0 for p in report['properties'])

    def test_lower_bound_suite(self, runner):
        report = runner.run('theorem1')
        assert report['passed'], [p for p in report['properties'] if not p['passed']]
        assert report['suite'] == 'theorem1'

    @pytest.mark.slow
    def test_optimizer_oracle(self, runner):
        report = runner.run('optimizer-oracle')
        assert report['passed']
        assert report['properties'][0]['trials'] == 2

    def test_deterministic(self):
        first = VerificationRunner(seed=3, samples=3).check_tensor_closure().to_dict()
        second = VerificationRunner(seed=3, samples=3).check_tensor_closure().to_dict()
        assert first == second

    def test_write_report(self, runner, tmp_path):
        report = {'suite': 'propositions', 'seed': 7, 'passed': True,
                  'properties': [runner.check_mixing_closure().to_dict()]}
        path = write_report(report, tmp_path / 'nested' / 'report.json')
        loaded = json.loads(path.read_text())
        assert loaded['passed'] is True
        assert loaded['properties'][0]['suite'] == 'propositions'

    def test_suite_names(self):
        assert SUITES == ('propositions', 'theorem1', 'optimizer-oracle')

    @pytest.mark.slow
    def test_full_lower_bound_sweep(self):
        report = VerificationRunner(seed=7).run('theorem1')
        assert report['passed']
        random_sweep = next(p for p in report['properties'] if 'random' in p['name'])
        assert random_sweep['trials'] == 200
