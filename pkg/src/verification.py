"""
Verification Suites
Randomized property checks of the resource-theoretic structure of the free
set (closure, convexity, compactness, free operations), the D_T lower bound
by the RHP rate, and the subgradient optimizer against a brute-force oracle.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from choi import (
    ChoiMatrix, apply_local_map, choi_of_propagator, derivative_from_kossakowski,
    free_set_point, mix, reduce_choi, swap_choi, tensor_choi
)
from dynamics import Propagator, incremental_map, propagate
from generators import KossakowskiGenerator
from linops import max_abs, project_psd, random_hermitian, superop_to_choi, trace_norm
from measures import (
    NonMarkovianityEngine, THEOREM_TOL, dt_measure, monotonicity_gap, rhp_g,
    robustness_decomposition, robustness_incremental
)
from models import catalog
from optimizer import OptimizerConfig

logger = logging.getLogger(__name__)

SUITES = ('propositions', 'theorem1', 'optimizer-oracle')
FREE_TOL = 1e-9
RELATION_TOL = 1e-10
ORACLE_GAP_TOL = 1e-3
MIXING_WEIGHTS = (0.25, 0.5, 0.75)


def random_markovian_generator(
    rng: np.random.Generator,
    dim: int = 2,
    scale: float = 1.0,
    with_hamiltonian: bool = True
) -> KossakowskiGenerator:
    """Constant generator with a random PSD Kossakowski matrix (trace ~ scale)."""
    n = dim * dim - 1
    b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = b @ b.conj().T
    a *= scale / np.trace(a).real
    h = random_hermitian(dim, rng, 0.5 * scale) if with_hamiltonian else None
    return KossakowskiGenerator.constant(dim, a, h)


def random_markovian_propagator(rng: np.random.Generator, dim: int = 2, tau: float = 0.25) -> Propagator:
    return propagate(random_markovian_generator(rng, dim), 0.0, tau, step=tau / 10.0)


def random_free_choi(rng: np.random.Generator, dim: int = 2, tau: float = 0.25) -> ChoiMatrix:
    """Choi matrix of a random divisible increment."""
    return choi_of_propagator(random_markovian_propagator(rng, dim, tau))


def random_nonmarkovian_choi(rng: np.random.Generator, dim: int = 2, eps: float = 0.05) -> ChoiMatrix:
    """Incremental Choi matrix of a constant generator with an indefinite Kossakowski matrix."""
    n = dim * dim - 1
    g = KossakowskiGenerator.constant(dim, random_hermitian(n, rng))
    return choi_of_propagator(incremental_map(g, 0.0, eps))


def random_kossakowski_matrix(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Gaussian Hermitian (generally indefinite) Kossakowski matrix."""
    return random_hermitian(dim * dim - 1, rng)


@dataclass
class PropertyResult:
    """Outcome of one randomized property: trial count, failures and the first counterexample."""

    name: str
    suite: str
    trials: int = 0
    failures: int = 0
    max_violation: float = 0.0
    counterexample: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, ok: bool, violation: float = 0.0, payload: Optional[Dict[str, Any]] = None):
        self.trials += 1
        self.max_violation = max(self.max_violation, float(violation))
        if not ok:
            self.failures += 1
            if self.counterexample is None:
                self.counterexample = {'trial': self.trials - 1, **(payload or {})}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'suite': self.suite,
            'passed': self.passed,
            'trials': self.trials,
            'failures': self.failures,
            'max_violation': self.max_violation,
            'counterexample': self.counterexample,
            'details': self.details,
        }


class VerificationRunner:
    """
    Run the verification suites with a fixed seed.

    Attributes:
        seed: Seed of every random draw (each property gets its own stream)
        samples: Trials per proposition property
        random_instances: Random qubit instances in the lower-bound sweep
        oracle_instances: Random qubit instances compared with the oracle
        grid_dt, t_max: Time grid for the catalog sweep
    """

    def __init__(
        self,
        seed: int = 0,
        samples: int = 100,
        random_instances: int = 200,
        oracle_instances: int = 50,
        grid_dt: float = 0.05,
        t_max: float = 5.0,
        optimizer_config: Optional[OptimizerConfig] = None
    ):
        if samples < 1 or random_instances < 1 or oracle_instances < 1:
            raise ValueError("sample counts must be positive")
        self.seed = seed
        self.samples = samples
        self.random_instances = random_instances
        self.oracle_instances = oracle_instances
        self.grid_dt = grid_dt
        self.t_max = t_max
        self.optimizer_config = replace(optimizer_config or OptimizerConfig(), oracle=False)
        self._stream = 0

        logger.info(
            f"Initializing VerificationRunner (seed={seed}, samples={samples}, "
            f"random_instances={random_instances}, oracle_instances={oracle_instances})"
        )

    def _rng(self) -> np.random.Generator:
        self._stream += 1
        return np.random.default_rng([self.seed, self._stream])

    # Propositions: structure of the free set

    def check_tensor_closure(self) -> PropertyResult:
        result = PropertyResult('tensor-product closure', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            joint = tensor_choi(random_free_choi(rng), random_free_choi(rng))
            excess = joint.trace_norm - 1.0
            result.record(excess <= FREE_TOL, excess, {'trace_norm_excess': excess})
        return result

    def check_partial_trace_closure(self) -> PropertyResult:
        result = PropertyResult('partial-trace closure', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            joint = random_free_choi(rng, dim=4)
            worst = 0.0
            for keep in (0, 1):
                worst = max(worst, reduce_choi(joint, 2, 2, keep).trace_norm - 1.0)
            result.record(worst <= FREE_TOL, worst, {'trace_norm_excess': worst})
        return result

    def check_permutation_closure(self) -> PropertyResult:
        result = PropertyResult('subsystem-permutation closure', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            swapped = swap_choi(random_free_choi(rng, dim=4), 2, 2)
            excess = swapped.trace_norm - 1.0
            result.record(excess <= FREE_TOL, excess, {'trace_norm_excess': excess})
        return result

    def check_compactness(self) -> PropertyResult:
        """Boundedness of sampled free states and closure along convergent sequences."""
        result = PropertyResult('boundedness and closure', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            g = random_markovian_generator(rng)
            limit = choi_of_propagator(propagate(g, 0.0, 0.25, step=0.025))
            distances = []
            worst = limit.trace_norm - 1.0
            for k in (2, 4, 8, 16):
                tau = 0.25 * (1.0 - 1.0 / k)
                member = choi_of_propagator(propagate(g, 0.0, tau, step=tau / 10.0))
                worst = max(worst, member.trace_norm - 1.0)
                distances.append(trace_norm(member.matrix - limit.matrix))
            converging = distances[-1] <= 0.25 * distances[0]
            result.record(
                worst <= FREE_TOL and converging, worst,
                {'trace_norm_excess': worst, 'distances_to_limit': distances}
            )
        return result

    def check_free_operation_closure(self) -> PropertyResult:
        result = PropertyResult('free-operation closure', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            first = random_markovian_propagator(rng)
            second = random_markovian_propagator(rng)
            mapped = apply_local_map(choi_of_propagator(first), second)
            direct = superop_to_choi(second.superop @ first.superop, first.dim)
            excess = mapped.trace_norm - 1.0
            mismatch = max_abs(mapped.matrix - direct)
            result.record(
                excess <= FREE_TOL and mismatch <= RELATION_TOL, max(excess, mismatch),
                {'trace_norm_excess': excess, 'composition_mismatch': mismatch}
            )
        return result

    def check_mixing_closure(self) -> PropertyResult:
        result = PropertyResult('mixture closure', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            p = float(rng.uniform())
            mixed = mix(random_free_choi(rng), random_free_choi(rng), p)
            excess = mixed.trace_norm - 1.0
            result.record(excess <= FREE_TOL, excess, {'p': p, 'trace_norm_excess': excess})
        return result

    def check_exact_limit_mixing(self) -> PropertyResult:
        """Mixtures of free Choi derivatives have zero RHP rate."""
        result = PropertyResult('exact-limit mixture closure', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            p = float(rng.uniform())
            first = free_set_point(project_psd(random_kossakowski_matrix(rng)), 2)
            second = free_set_point(project_psd(random_kossakowski_matrix(rng)), 2)
            g = rhp_g(first.derivative.scaled(p) + second.derivative.scaled(1.0 - p))
            result.record(g <= FREE_TOL, g, {'p': p, 'g': g})
        return result

    def check_dt_convexity(self) -> PropertyResult:
        result = PropertyResult('D_T convexity', 'propositions')
        rng = self._rng()
        cfg = self.optimizer_config
        for _ in range(self.samples):
            k1 = derivative_from_kossakowski(random_kossakowski_matrix(rng), 2)
            k2 = derivative_from_kossakowski(random_kossakowski_matrix(rng), 2)
            d1, _ = dt_measure(k1, cfg)
            d2, _ = dt_measure(k2, cfg)
            worst = -np.inf
            for p in MIXING_WEIGHTS:
                d_mix, _ = dt_measure(k1.scaled(p) + k2.scaled(1.0 - p), cfg)
                worst = max(worst, d_mix - (p * d1 + (1.0 - p) * d2))
            result.record(worst <= THEOREM_TOL, max(worst, 0.0), {'d1': d1, 'd2': d2, 'excess': worst})
        return result

    def check_dt_monotonicity(self) -> PropertyResult:
        result = PropertyResult('D_T monotonicity', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            k = derivative_from_kossakowski(random_kossakowski_matrix(rng), 2)
            markov = random_markovian_generator(rng)
            delta = float(rng.uniform(0.05, 0.5))
            before, after = monotonicity_gap(k, markov, delta, config=self.optimizer_config)
            increase = after - before
            result.record(
                increase <= THEOREM_TOL, max(increase, 0.0),
                {'before': before, 'after': after, 'delta': delta}
            )
        return result

    def check_robustness_relation(self) -> PropertyResult:
        """R = (||C||_1 - 1)/2 against an independent sum of negative eigenvalues."""
        result = PropertyResult('robustness trace-norm relation', 'propositions')
        rng = self._rng()
        for k in range(self.samples):
            c = random_nonmarkovian_choi(rng) if k % 2 == 0 else random_free_choi(rng)
            eigenvalues = np.linalg.eigvalsh(c.matrix)
            independent = float(np.sum(np.abs(eigenvalues[eigenvalues < 0])))
            gap = abs(robustness_incremental(c) - independent)
            result.record(gap <= RELATION_TOL, gap, {'robustness': robustness_incremental(c), 'sum_negative': independent})
        return result

    def check_robustness_decomposition(self) -> PropertyResult:
        result = PropertyResult('robustness pseudo-mixture', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            c = random_nonmarkovian_choi(rng)
            r, delta, tau = robustness_decomposition(c)
            rebuilt = (1.0 + r) * delta - (r * tau if tau is not None else 0.0)
            errors = [max_abs(rebuilt - c.matrix), abs(np.trace(delta).real - 1.0)]
            errors.append(max(0.0, -np.linalg.eigvalsh(delta)[0]))
            if tau is not None:
                errors.append(abs(np.trace(tau).real - 1.0))
                errors.append(max(0.0, -np.linalg.eigvalsh(tau)[0]))
            worst = max(errors)
            result.record(worst <= RELATION_TOL, worst, {'robustness': r, 'error': worst})
        return result

    def check_robustness_convexity(self) -> PropertyResult:
        result = PropertyResult('robustness convexity', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            c1, c2 = random_nonmarkovian_choi(rng), random_nonmarkovian_choi(rng)
            p = float(rng.uniform())
            excess = robustness_incremental(mix(c1, c2, p)) - (
                p * robustness_incremental(c1) + (1.0 - p) * robustness_incremental(c2)
            )
            result.record(excess <= RELATION_TOL, max(excess, 0.0), {'p': p, 'excess': excess})
        return result

    def check_robustness_contractivity(self) -> PropertyResult:
        result = PropertyResult('robustness contractivity', 'propositions')
        rng = self._rng()
        for _ in range(self.samples):
            c = random_nonmarkovian_choi(rng)
            mapped = apply_local_map(c, random_markovian_propagator(rng))
            increase = robustness_incremental(mapped) - robustness_incremental(c)
            result.record(increase <= RELATION_TOL, max(increase, 0.0), {'increase': increase})
        return result

    # Lower bound of D_T by the RHP rate

    def check_lower_bound_catalog(self) -> PropertyResult:
        result = PropertyResult('D_T >= g on catalog models', 'theorem1')
        for model in catalog():
            engine = NonMarkovianityEngine(model.generator, optimizer_config=self.optimizer_config)
            frame = engine.simulate(self.t_max, self.grid_dt)
            slack = (frame['g'] - frame['d_T']).to_numpy()
            for t, s in zip(frame['t'], slack):
                result.record(s <= THEOREM_TOL, max(s, 0.0), {'model': model.name, 't': float(t), 'g_minus_d_T': float(s)})
            result.details[model.name] = {'max_g': float(frame['g'].max()), 'max_d_T': float(frame['d_T'].max())}
        return result

    def check_lower_bound_random(self) -> PropertyResult:
        result = PropertyResult('D_T >= g on random instances', 'theorem1')
        rng = self._rng()
        for _ in range(self.random_instances):
            k = derivative_from_kossakowski(random_kossakowski_matrix(rng), 2)
            d_t, _ = dt_measure(k, self.optimizer_config)
            slack = rhp_g(k) - d_t
            result.record(slack <= THEOREM_TOL, max(slack, 0.0), {'g': rhp_g(k), 'd_T': d_t})
        return result

    def check_dephasing_tightness(self) -> PropertyResult:
        result = PropertyResult('D_T = g for single-channel dephasing', 'theorem1')
        model = next(m for m in catalog() if m.name == 'dephasing-sin')
        engine = NonMarkovianityEngine(model.generator, optimizer_config=self.optimizer_config)
        frame = engine.simulate(2.0 * np.pi, self.grid_dt)
        for t, g, d_t in zip(frame['t'], frame['g'], frame['d_T']):
            gap = abs(d_t - g)
            result.record(gap <= ORACLE_GAP_TOL, gap, {'t': float(t), 'g': float(g), 'd_T': float(d_t)})
        return result

    def check_faithfulness(self) -> PropertyResult:
        result = PropertyResult('faithfulness on Markovian models', 'theorem1')
        for model in catalog():
            if not model.markovian:
                continue
            engine = NonMarkovianityEngine(model.generator, optimizer_config=self.optimizer_config)
            frame = engine.simulate(self.t_max, self.grid_dt)
            worst = float(frame[['g', 'd_T', 'r_inc_rate', 'N_T']].to_numpy().max())
            result.record(worst <= FREE_TOL, worst, {'model': model.name, 'max_measure': worst})
        return result

    # Optimizer against the brute-force oracle

    def check_optimizer_oracle(self) -> PropertyResult:
        result = PropertyResult('subgradient vs brute-force oracle', 'optimizer-oracle')
        rng = self._rng()
        cfg = replace(self.optimizer_config, oracle=True)
        gaps = []
        for k in range(self.oracle_instances):
            derivative = derivative_from_kossakowski(random_kossakowski_matrix(rng), 2)
            d_t, report = dt_measure(derivative, replace(cfg, seed=self.seed * 1000 + k))
            gap = report.oracle_gap
            gaps.append(gap)
            result.record(
                abs(gap) <= ORACLE_GAP_TOL, abs(gap),
                {'d_T': d_t, 'oracle': report.oracle_objective, 'iterations': report.iterations}
            )
        result.details['max_gap'] = float(max(gaps))
        result.details['min_gap'] = float(min(gaps))
        return result

    def _checks(self, suite: str) -> List[Callable[[], PropertyResult]]:
        if suite == 'propositions':
            return [
                self.check_tensor_closure, self.check_partial_trace_closure,
                self.check_permutation_closure, self.check_compactness,
                self.check_free_operation_closure, self.check_mixing_closure,
                self.check_exact_limit_mixing, self.check_dt_convexity,
                self.check_dt_monotonicity, self.check_robustness_relation,
                self.check_robustness_decomposition, self.check_robustness_convexity,
                self.check_robustness_contractivity,
            ]
        if suite == 'theorem1':
            return [
                self.check_lower_bound_catalog, self.check_lower_bound_random,
                self.check_dephasing_tightness, self.check_faithfulness,
            ]
        if suite == 'optimizer-oracle':
            return [self.check_optimizer_oracle]
        raise ValueError(f"Unknown suite '{suite}'. Must be one of {SUITES + ('all',)}")

    def run(self, suite: str = 'all') -> Dict[str, Any]:
        """
        Run a suite ('all' runs every suite in order).

        Returns:
            JSON-ready report with per-property results and the overall verdict
        """
        suites = list(SUITES) if suite == 'all' else [suite]
        self._stream = 0
        results = []
        for name in suites:
            for check in self._checks(name):
                outcome = check()
                level = logging.INFO if outcome.passed else logging.ERROR
                logger.log(
                    level,
                    f"[{name}] {outcome.name}: {'PASS' if outcome.passed else 'FAIL'} "
                    f"({outcome.failures}/{outcome.trials} failures, max violation {outcome.max_violation:.3e})"
                )
                results.append(outcome)
        passed = all(r.passed for r in results)
        logger.info(f"Suite '{suite}' {'passed' if passed else 'FAILED'} ({len(results)} properties)")
        return {
            'suite': suite,
            'seed': self.seed,
            'passed': passed,
            'properties': [r.to_dict() for r in results],
        }


def write_report(report: Dict[str, Any], path: Path) -> Path:
    """Write a verification report as indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(report, f, indent=2, default=float)
    logger.info(f"Verification report written to {path}")
    return path
