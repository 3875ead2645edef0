"""
Non-Markovianity Measures
RHP witness g(t), its cumulative integral N_T(t), the normalized measure T(t),
incremental and cumulative robustness, and the free-cone distance rate
D_T(t), plus the trajectory engine that evaluates all of them on a time grid.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import integrate

from choi import (
    ChoiDerivative, ChoiMatrix, choi_derivative, choi_of_propagator,
    compressed_spectrum, local_map_action
)
from dynamics import incremental_map, propagate
from errors import DimensionMismatch, NotMarkovian, UnsortedGrid
from generators import (
    DiagonalGenerator, Generator, gell_mann_basis, is_instantaneously_markovian,
    kossakowski_from_superop
)
from linops import choi_to_superop, herm_eig, max_abs
from optimizer import (
    BruteForceOracle, Candidate, FreeConeProblem, OptimizerConfig, OptimizerReport,
    ProjectedSubgradientSolver
)

logger = logging.getLogger(__name__)

G_CLAMP = 1e-12
THEOREM_TOL = 1e-6
MONOTONICITY_SAMPLES = 11

TRAJECTORY_COLUMNS = ['t', 'g', 'g_finite_eps', 'd_T', 'r_inc_rate', 'N_T', 'T_norm', 'R_cum']

ChoiLike = Union[ChoiMatrix, np.ndarray]


def _as_derivative(k: Union[ChoiDerivative, np.ndarray]) -> ChoiDerivative:
    return k if isinstance(k, ChoiDerivative) else ChoiDerivative.from_matrix(k)


def _as_choi(c: ChoiLike) -> ChoiMatrix:
    return c if isinstance(c, ChoiMatrix) else ChoiMatrix.from_matrix(c)


def rhp_g(k: Union[ChoiDerivative, np.ndarray]) -> float:
    """
    Exact eps -> 0 RHP rate g = 2 sum_{mu_i < 0} |mu_i|, mu_i the spectrum of
    Q K Q on the range of Q = I - |psi><psi|.

    Eigenvalues in (-G_CLAMP * scale, 0) are roundoff and count as zero.

    Args:
        k: Choi derivative (traceless)

    Returns:
        g >= 0, in units of 1/time

    Raises:
        NonTraceless: If Tr K is beyond tolerance
    """
    k = _as_derivative(k)
    mu = compressed_spectrum(k)
    threshold = G_CLAMP * max(1.0, max_abs(k.matrix))
    negative = mu[mu < -threshold]
    clamped = np.count_nonzero((mu < 0) & (mu >= -threshold))
    if clamped:
        logger.debug(f"Clamped {clamped} roundoff-level negative eigenvalue(s) to 0")
    return float(2.0 * np.sum(np.abs(negative)))


def robustness_incremental(c: ChoiLike) -> float:
    """
    Robustness (||c||_1 - 1)/2 of a unit-trace Choi matrix, equal to the sum of
    the magnitudes of its negative eigenvalues.
    """
    c = _as_choi(c)
    return max(0.0, 0.5 * (c.trace_norm - 1.0))


def robustness_decomposition(
    c: ChoiLike
) -> Tuple[float, np.ndarray, Optional[np.ndarray]]:
    """
    Pseudo-mixture c = (1 + R) delta - R tau with delta, tau states.

    delta = P+ c P+ / (1 + R) is free (PSD, unit trace) and tau = -P- c P- / R
    is the state whose admixture with weight R renders c free.

    Args:
        c: Unit-trace Choi matrix

    Returns:
        Tuple of (R, delta, tau); tau is None when c is already free
    """
    c = _as_choi(c)
    eigenvalues, eigenvectors = herm_eig(c.matrix)
    positive = np.clip(eigenvalues, 0.0, None)
    negative = np.clip(eigenvalues, None, 0.0)
    robustness = float(-np.sum(negative))
    delta = (eigenvectors * positive) @ eigenvectors.conj().T / (1.0 + robustness)
    if robustness <= G_CLAMP:
        return 0.0, c.matrix.copy(), None
    tau = -(eigenvectors * negative) @ eigenvectors.conj().T / robustness
    return robustness, delta, tau


def rhp_integral(times: Sequence[float], g: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Cumulative trapezoidal integral N_T(t) = int_0^t g dt' on a sorted grid.

    Args:
        times: Grid times, or a sequence of (t, g) pairs when g is omitted
        g: RHP rates at the grid times

    Returns:
        N_T at each grid time (starting at 0)

    Raises:
        UnsortedGrid: If the grid is not strictly increasing
        ValueError: If lengths differ or any g is negative
    """
    if g is None:
        pairs = np.asarray(times, dtype=float).reshape(-1, 2)
        times, g = pairs[:, 0], pairs[:, 1]
    t = np.asarray(times, dtype=float)
    values = np.asarray(g, dtype=float)
    if t.shape != values.shape or t.ndim != 1:
        raise ValueError(f"times and g must be 1-D of equal length, got {t.shape} and {values.shape}")
    if t.size == 0:
        return np.zeros(0)
    if np.any(np.diff(t) <= 0):
        raise UnsortedGrid("time grid must be strictly increasing")
    if np.any(values < 0):
        raise ValueError(f"g must be nonnegative, got minimum {values.min():.3e}")
    return integrate.cumulative_trapezoid(values, t, initial=0.0)


def _check_nonnegative(n_t, name: str = 'N_T') -> np.ndarray:
    arr = np.asarray(n_t, dtype=float)
    if np.any(arr < -G_CLAMP):
        raise ValueError(f"{name} must be nonnegative, got {arr.min():.3e}")
    return np.clip(arr, 0.0, None)


def robustness_cumulative(n_t):
    """R = N_T / 2 (scalar or array)."""
    result = 0.5 * _check_nonnegative(n_t)
    return float(result) if result.ndim == 0 else result


def normalized_measure(n_t):
    """T = N_T / (1 + N_T) in [0, 1), equal to 2R / (1 + 2R)."""
    arr = _check_nonnegative(n_t)
    result = arr / (1.0 + arr)
    return float(result) if result.ndim == 0 else result


def native_candidate(k: ChoiDerivative, with_hamiltonian: bool = False) -> Candidate:
    """
    The input's own (A, h): Kossakowski matrix and Hamiltonian coefficients
    h_j = Tr[F_j H] recovered from K. Exact argmin when K is Markovian.
    """
    superop = choi_to_superop(k.matrix, k.dim)
    kossakowski, hamiltonian = kossakowski_from_superop(superop, k.dim)
    h = None
    if with_hamiltonian:
        h = np.real(np.einsum('jab,ba->j', gell_mann_basis(k.dim), hamiltonian))
    return kossakowski, h


def dt_measure(
    k: Union[ChoiDerivative, np.ndarray],
    config: Optional[OptimizerConfig] = None,
    candidates: Iterable[Candidate] = ()
) -> Tuple[float, OptimizerReport]:
    """
    D_T rate: min over PSD Kossakowski A of ||K_N - K_M(A)||_1.

    The RHP rate g(K_N) is a lower bound on the minimum; the search stops
    once it is reached.

    Args:
        k: Choi derivative K_N
        config: Optimizer settings
        candidates: Extra (A, h) points competing with the iterates

    Returns:
        Tuple of (d_T, OptimizerReport)

    Raises:
        NonTraceless: If Tr K_N is beyond tolerance
        NotConverged: If the cap is hit and config.strict is set
    """
    config = config or OptimizerConfig()
    k = _as_derivative(k)
    problem = FreeConeProblem(k.matrix, k.dim, config.allow_hamiltonian)
    lower_bound = rhp_g(k)
    starts = [native_candidate(k, config.allow_hamiltonian)] + list(candidates)
    report = ProjectedSubgradientSolver(config).solve(problem, lower_bound, starts)

    if config.oracle:
        # Unseeded: random screen plus the zero start only
        oracle_value, _ = BruteForceOracle(config).minimize(problem)
        report.oracle_objective = oracle_value
        logger.info(
            f"D_T {report.objective:.9g} vs oracle {oracle_value:.9g} (gap {report.oracle_gap:.3e})"
        )

    logger.debug(
        f"D_T = {report.objective:.12g} (g = {lower_bound:.12g}) after {report.iterations} "
        f"iterations, stop: {report.stop_reason}"
    )
    return report.objective, report


def _require_markovian_window(markov_g: Generator, t: float, delta: float):
    for s in np.linspace(t, t + delta, MONOTONICITY_SAMPLES):
        if not is_instantaneously_markovian(markov_g, float(s)):
            raise NotMarkovian(f"post-composition generator is not Markovian at t = {s:.6g}")


def monotonicity_gap(
    k: Union[ChoiDerivative, np.ndarray],
    markov_g: Generator,
    delta: float,
    t: float = 0.0,
    config: Optional[OptimizerConfig] = None,
    step: Optional[float] = None
) -> Tuple[float, float]:
    """
    D_T before and after composing (I kron Lambda^M(t + delta, t)) with K_N.

    After composition the free set is the image of the free cone under the
    same map. The distance after is a fresh minimization over that image,
    started from A = 0 with no knowledge of the first argmin.

    Returns:
        Tuple of (d_T before, d_T after)

    Raises:
        NotMarkovian: If markov_g leaves the Markovian cone on [t, t + delta]
        DimensionMismatch: If the dimensions differ
    """
    config = config or OptimizerConfig()
    k = _as_derivative(k)
    if markov_g.dim != k.dim:
        raise DimensionMismatch(f"generator dim {markov_g.dim} does not match K_N dim {k.dim}")
    _require_markovian_window(markov_g, t, delta)

    before, _ = dt_measure(k, replace(config, oracle=False))
    superop = propagate(markov_g, t, t + delta, step).superop
    contracted = local_map_action(k.matrix, superop, k.dim)
    problem = FreeConeProblem(contracted, k.dim, config.allow_hamiltonian, post_map=superop)
    after = ProjectedSubgradientSolver(config).solve(problem).objective
    logger.debug(f"Monotonicity over [{t:.6g}, {t + delta:.6g}]: {before:.9g} -> {after:.9g}")
    return before, after


def monotonicity_check(
    k: Union[ChoiDerivative, np.ndarray],
    markov_g: Generator,
    delta: float,
    t: float = 0.0,
    config: Optional[OptimizerConfig] = None,
    tol: float = THEOREM_TOL
) -> bool:
    """True iff D_T does not increase (within tol) under the Markovian post-composition."""
    before, after = monotonicity_gap(k, markov_g, delta, t, config)
    return after <= before + tol


@dataclass
class MeasurePoint:
    """All measures at one time; rates in 1/time, cumulative values dimensionless."""

    t: float
    g: float
    d_T: float
    r_inc_rate: float
    N_T: float
    T_norm: float
    R_cum: float
    g_finite_eps: Optional[float] = None
    report: Optional[OptimizerReport] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {name: getattr(self, name) for name in TRAJECTORY_COLUMNS}
        data['optimizer'] = self.report.to_dict() if self.report is not None else None
        return data


def has_hamiltonian_part(generator: Generator) -> bool:
    """True if the generator has a Hamiltonian or Lindblad operators with a trace part."""
    if generator.hamiltonian is not None and np.any(generator.hamiltonian):
        return True
    if isinstance(generator, DiagonalGenerator):
        return any(abs(np.trace(term.operator)) > 0 for term in generator.terms)
    return False


def time_grid(t_max: float, dt: float) -> np.ndarray:
    """Uniform grid on [0, t_max] with spacing at most dt, endpoints included."""
    if t_max <= 0 or dt <= 0:
        raise ValueError(f"t_max and dt must be positive, got t_max={t_max}, dt={dt}")
    n = max(1, math.ceil(t_max / dt - 1e-9))
    return np.linspace(0.0, t_max, n + 1)


def _instant(
    generator: Generator,
    t: float,
    mode: str,
    eps: float,
    config: OptimizerConfig,
    step: Optional[float] = None
) -> Tuple[float, float, float, float, OptimizerReport]:
    k = choi_derivative(generator, t)
    g_exact = rhp_g(k)
    d_t, report = dt_measure(k, config)
    g_finite = math.nan
    r_inc_rate = 0.5 * g_exact
    if mode != 'exact-limit':
        r_inc = robustness_incremental(choi_of_propagator(incremental_map(generator, t, eps, step)))
        r_inc_rate = r_inc / eps
        g_finite = 2.0 * r_inc_rate
    g_column = g_finite if mode == 'finite-eps' else g_exact
    return g_column, g_finite, d_t, r_inc_rate, report


class NonMarkovianityEngine:
    """
    Evaluate the non-Markovianity measures of a generator on a time grid.

    Modes:
        exact-limit: g from the Choi derivative; r_inc_rate = g/2
        finite-eps:  g and r_inc_rate from the incremental Choi at finite eps
        both:        exact g, with the finite-eps columns alongside

    D_T is always computed in the exact limit.
    """

    MODES = ('exact-limit', 'finite-eps', 'both')

    def __init__(
        self,
        generator: Generator,
        mode: str = 'exact-limit',
        eps: float = 1e-4,
        optimizer_config: Optional[OptimizerConfig] = None,
        n_jobs: int = 1,
        step: Optional[float] = None
    ):
        """
        Args:
            generator: Generator in either form
            mode: One of MODES
            eps: Finite increment for the finite-eps columns
            optimizer_config: D_T optimizer settings
            n_jobs: Worker processes for grid points (1 = serial)
            step: Propagation step for the finite-eps increments (default: one step of eps)

        Raises:
            ValueError: If mode, eps, n_jobs or step is invalid
        """
        if mode not in self.MODES:
            raise ValueError(f"Invalid mode '{mode}'. Must be one of {self.MODES}")
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        if n_jobs < 1:
            raise ValueError(f"n_jobs must be positive, got {n_jobs}")
        if step is not None and step <= 0:
            raise ValueError(f"step must be positive, got {step}")

        config = optimizer_config or OptimizerConfig()
        if has_hamiltonian_part(generator) and not config.allow_hamiltonian:
            logger.warning(
                "Generator carries a Hamiltonian part but Hamiltonian directions are excluded "
                "from the free set; its unitary part counts toward D_T (see --allow-hamiltonian)"
            )

        self.generator = generator
        self.mode = mode
        self.eps = eps
        self.config = config
        self.n_jobs = n_jobs
        self.step = step
        self.reports: List[OptimizerReport] = []

        logger.info(
            f"Initializing NonMarkovianityEngine (d={generator.dim}, mode={mode}, "
            f"eps={eps:g}, n_jobs={n_jobs})"
        )

    def _evaluate(self, times: np.ndarray) -> List[Tuple]:
        if self.n_jobs == 1 or len(times) < 2:
            return [
                _instant(self.generator, float(t), self.mode, self.eps, self.config, self.step)
                for t in times
            ]
        return Parallel(n_jobs=self.n_jobs)(
            delayed(_instant)(self.generator, float(t), self.mode, self.eps, self.config, self.step)
            for t in times
        )

    def trajectory(self, times: Sequence[float]) -> pd.DataFrame:
        """
        Measures on a grid starting at 0.

        Args:
            times: Strictly increasing grid; N_T integrates from its first point

        Returns:
            DataFrame with TRAJECTORY_COLUMNS, one row per grid time

        Raises:
            UnsortedGrid: If the grid is not strictly increasing
        """
        times = np.asarray(times, dtype=float)
        if np.any(np.diff(times) <= 0):
            raise UnsortedGrid("time grid must be strictly increasing")
        rows = self._evaluate(times)
        self.reports = [row[4] for row in rows]

        frame = pd.DataFrame({
            't': times,
            'g': [row[0] for row in rows],
            'g_finite_eps': [row[1] for row in rows],
            'd_T': [row[2] for row in rows],
            'r_inc_rate': [row[3] for row in rows],
        })
        frame['N_T'] = rhp_integral(frame['t'].to_numpy(), frame['g'].to_numpy())
        frame['T_norm'] = normalized_measure(frame['N_T'].to_numpy())
        frame['R_cum'] = robustness_cumulative(frame['N_T'].to_numpy())

        unconverged = sum(not report.converged for report in self.reports)
        if unconverged:
            logger.warning(f"{unconverged} grid point(s) did not meet the optimizer stopping rule")
        logger.info(
            f"Trajectory of {len(frame)} points finished: N_T({times[-1]:.6g}) = "
            f"{frame['N_T'].iloc[-1]:.6g}"
        )
        return frame[TRAJECTORY_COLUMNS]

    def simulate(self, t_max: float, dt: float) -> pd.DataFrame:
        return self.trajectory(time_grid(t_max, dt))

    def measure_point(self, t: float, dt: float = 1e-3) -> MeasurePoint:
        """
        All measures at a single time t; N_T integrates g over [0, t] on a grid of spacing dt.
        """
        if t < 0:
            raise ValueError(f"t must be nonnegative, got {t}")
        g_column, g_finite, d_t, r_inc_rate, report = _instant(
            self.generator, t, self.mode, self.eps, self.config, self.step
        )
        n_t = 0.0
        if t > 0:
            grid = time_grid(t, dt)
            if self.mode == 'finite-eps':
                rates = [
                    2.0 * robustness_incremental(
                        choi_of_propagator(incremental_map(self.generator, float(s), self.eps, self.step))
                    ) / self.eps
                    for s in grid
                ]
            else:
                rates = [rhp_g(choi_derivative(self.generator, float(s))) for s in grid]
            n_t = float(rhp_integral(grid, rates)[-1])
        return MeasurePoint(
            t=t,
            g=g_column,
            d_T=d_t,
            r_inc_rate=r_inc_rate,
            N_T=n_t,
            T_norm=normalized_measure(n_t),
            R_cum=robustness_cumulative(n_t),
            g_finite_eps=None if math.isnan(g_finite) else g_finite,
            report=report,
        )

    def theorem_violations(self, frame: pd.DataFrame, tol: float = THEOREM_TOL) -> pd.DataFrame:
        """Rows where d_T < g - tol."""
        return frame[frame['d_T'] < frame['g'] - tol]

    @property
    def all_converged(self) -> bool:
        return all(report.converged for report in self.reports)

    def summary(self, frame: pd.DataFrame) -> Dict[str, float]:
        last = frame.iloc[-1]
        return {
            't_end': float(last['t']),
            'max_g': float(frame['g'].max()),
            'max_d_T': float(frame['d_T'].max()),
            'N_T': float(last['N_T']),
            'R_cum': float(last['R_cum']),
            'T_norm': float(last['T_norm']),
            'cp_breaking_fraction': float((frame['g'] > 0).mean()),
        }
