"""
Free-Cone Distance Optimizer
Projected subgradient minimization of f(A, h) = ||T - K_M(A) - K_H(h)||_1 over
PSD Kossakowski matrices A (and, optionally, real Hamiltonian coefficients h),
together with a derivative-free brute-force oracle used to certify it.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from choi import hamiltonian_choi_map, kossakowski_choi_map, local_map_action
from errors import DimensionMismatch, NotConverged
from linops import hermitize, max_abs, project_psd, trace_norm, trace_norm_subgradient

logger = logging.getLogger(__name__)

CERTIFICATE_RTOL = 1e-12
RESIDUAL_RTOL = 1e-8
# Asymmetry floor of the residual, relative to the size of the terms subtracted
RESIDUAL_ATOL = 1e-12

Candidate = Tuple[np.ndarray, Optional[np.ndarray]]


@dataclass
class OptimizerConfig:
    """
    Optimizer settings.

    Attributes:
        max_iter: Total iteration cap across all step-size phases
        tol: Stall tolerance, relative to ||T||_1
        stall_window: Iterations without a tol improvement that end a phase
        step0: Absolute initial step; None means step0_fraction * ||T||_1
        step0_fraction: Initial step as a fraction of ||T||_1
        restarts: Extra phases restarted from the best iterate with a smaller step
        restart_decay: Step multiplier applied at each restart
        allow_hamiltonian: Include -i[H, .] directions in the free set
        oracle: Run the brute-force oracle after the subgradient solve
        oracle_restarts: Random points screened by the oracle
        oracle_polish: Best random points polished by Nelder-Mead
        oracle_maxfev: Function evaluation cap per Nelder-Mead polish
        seed: Seed of the oracle's random restarts
        strict: Raise NotConverged instead of flagging the report
    """

    max_iter: int = 5000
    tol: float = 1e-9
    stall_window: int = 50
    step0: Optional[float] = None
    step0_fraction: float = 0.1
    restarts: int = 6
    restart_decay: float = 0.25
    allow_hamiltonian: bool = False
    oracle: bool = False
    oracle_restarts: int = 1000
    oracle_polish: int = 5
    oracle_maxfev: int = 20000
    seed: int = 0
    strict: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")
        if self.tol < 0:
            raise ValueError(f"tol must be nonnegative, got {self.tol}")
        if self.stall_window < 1:
            raise ValueError(f"stall_window must be positive, got {self.stall_window}")
        if self.step0 is not None and self.step0 <= 0:
            raise ValueError(f"step0 must be positive, got {self.step0}")
        if self.step0_fraction <= 0:
            raise ValueError(f"step0_fraction must be positive, got {self.step0_fraction}")
        if not 0 < self.restart_decay < 1:
            raise ValueError(f"restart_decay must lie in (0, 1), got {self.restart_decay}")
        if self.oracle_restarts < 1 or self.oracle_polish < 0:
            raise ValueError("oracle_restarts must be positive and oracle_polish nonnegative")


def _complex_to_pairs(m: np.ndarray) -> List:
    return np.stack([m.real, m.imag], axis=-1).tolist()


@dataclass
class OptimizerReport:
    """
    Outcome of one free-cone distance minimization.

    history holds the best objective after each iteration and is therefore
    nonincreasing.
    """

    objective: float
    argmin: np.ndarray
    hamiltonian_coefficients: Optional[np.ndarray]
    iterations: int
    converged: bool
    stop_reason: str
    lower_bound: float = 0.0
    history: List[float] = field(default_factory=list)
    oracle_objective: Optional[float] = None

    @property
    def oracle_gap(self) -> Optional[float]:
        """Subgradient objective minus oracle objective (positive when the oracle did better)."""
        if self.oracle_objective is None:
            return None
        return self.objective - self.oracle_objective

    def to_dict(self) -> Dict[str, Any]:
        return {
            'objective': self.objective,
            'iterations': self.iterations,
            'converged': self.converged,
            'stop_reason': self.stop_reason,
            'lower_bound': self.lower_bound,
            'argmin': _complex_to_pairs(self.argmin),
            'hamiltonian_coefficients': (
                None if self.hamiltonian_coefficients is None
                else self.hamiltonian_coefficients.tolist()
            ),
            'oracle_objective': self.oracle_objective,
            'oracle_gap': self.oracle_gap,
        }


class FreeConeProblem:
    """
    Objective f(A, h) = ||T - Phi(K_M(A) + K_H(h))||_1 for a Hermitian target T.

    Phi is the identity unless a post_map superoperator is given, in which
    case (I kron Phi) is applied to every parameterized direction.
    """

    def __init__(
        self,
        target: np.ndarray,
        dim: int,
        allow_hamiltonian: bool = False,
        post_map: Optional[np.ndarray] = None
    ):
        """
        Args:
            target: d^2 x d^2 Hermitian matrix T
            dim: System dimension d
            allow_hamiltonian: Include Hamiltonian directions
            post_map: Optional superoperator Phi applied on the output leg

        Raises:
            DimensionMismatch: If the target is not d^2 x d^2
        """
        self.dim = int(dim)
        self.n = self.dim ** 2 - 1
        target = hermitize(target)
        if target.shape != (self.dim ** 2, self.dim ** 2):
            raise DimensionMismatch(
                f"target must be {self.dim ** 2}x{self.dim ** 2} for d={self.dim}, got {target.shape}"
            )
        self.target = target
        self._target_vec = target.reshape(-1)
        self._target_max = max_abs(target)

        map_a = kossakowski_choi_map(self.dim)
        map_h = hamiltonian_choi_map(self.dim) if allow_hamiltonian else None
        if post_map is not None:
            map_a = self._mapped_columns(map_a, post_map)
            if map_h is not None:
                map_h = self._mapped_columns(map_h, post_map)
        self.map_a = map_a
        self.map_h = map_h

    @property
    def allow_hamiltonian(self) -> bool:
        return self.map_h is not None

    @property
    def scale(self) -> float:
        """||T||_1, the natural unit of the objective."""
        return trace_norm(self.target)

    def _mapped_columns(self, columns: np.ndarray, superop: np.ndarray) -> np.ndarray:
        size = self.dim ** 2
        mapped = np.empty_like(columns)
        for j in range(columns.shape[1]):
            block = columns[:, j].reshape(size, size)
            mapped[:, j] = local_map_action(block, superop, self.dim).reshape(-1)
        return mapped

    def zero_hamiltonian(self) -> Optional[np.ndarray]:
        return np.zeros(self.n) if self.allow_hamiltonian else None

    def residual(self, a: np.ndarray, h: Optional[np.ndarray] = None) -> np.ndarray:
        """
        T - Phi(K_M(A) + K_H(h)) as a symmetrized d^2 x d^2 matrix.

        On an exact fit the residual is pure cancellation error, so its
        Hermiticity is checked against a floor set by ||T||_max and the fitted
        term rather than by the residual itself.

        Raises:
            NonHermitian: If (A, h) gives a residual that is not Hermitian
        """
        fitted = self.map_a @ np.asarray(a, dtype=complex).reshape(-1)
        if self.map_h is not None and h is not None:
            fitted = fitted + self.map_h @ np.asarray(h, dtype=float)
        size = self.dim ** 2
        floor = RESIDUAL_ATOL * max(self._target_max, max_abs(fitted))
        return hermitize((self._target_vec - fitted).reshape(size, size), RESIDUAL_RTOL, floor)

    def objective(self, a: np.ndarray, h: Optional[np.ndarray] = None) -> float:
        return trace_norm(self.residual(a, h))

    def value_and_subgradient(
        self,
        a: np.ndarray,
        h: Optional[np.ndarray] = None
    ) -> Tuple[float, np.ndarray, Optional[np.ndarray]]:
        """
        Objective with a subgradient in (A, h).

        With G = V sign(L) V^dag of the residual, the directional derivative
        along dA is -Re Tr[B^dag dA], B = unvec_row(M^dag vec_row(G)).

        Returns:
            Tuple of (f, subgradient w.r.t. A (Hermitian), subgradient w.r.t. h or None)
        """
        value, sign_matrix = trace_norm_subgradient(self.residual(a, h))
        g = sign_matrix.reshape(-1)
        b = (self.map_a.conj().T @ g).reshape(self.n, self.n)
        grad_a = -0.5 * (b + b.conj().T)
        grad_h = None
        if self.map_h is not None:
            grad_h = -np.real(self.map_h.conj().T @ g)
        return value, grad_a, grad_h


@dataclass
class _Iterate:
    value: float
    a: np.ndarray
    h: Optional[np.ndarray]


class ProjectedSubgradientSolver:
    """
    Deterministic projected subgradient method for FreeConeProblem.

    The first phase starts from A = 0 with steps eta0/sqrt(k); a phase ends
    when the best objective has not improved by tol * ||T||_1 within
    stall_window iterations, after which the next phase restarts from the
    best iterate with eta0 scaled by restart_decay. The search ends early
    once the objective reaches the supplied lower bound.
    """

    def __init__(self, config: Optional[OptimizerConfig] = None):
        self.config = config or OptimizerConfig()

    def _evaluate(self, problem: FreeConeProblem, a: np.ndarray, h: Optional[np.ndarray]) -> _Iterate:
        return _Iterate(problem.objective(a, h), a, h)

    def solve(
        self,
        problem: FreeConeProblem,
        lower_bound: float = 0.0,
        candidates: Iterable[Candidate] = ()
    ) -> OptimizerReport:
        """
        Minimize the problem's objective.

        Args:
            problem: Objective to minimize
            lower_bound: Known lower bound on the minimum; reaching it ends the search
            candidates: Extra (A, h) points; their PSD projections compete with
                the iterates for the reported minimum

        Returns:
            OptimizerReport with the best point found

        Raises:
            NotConverged: If the iteration cap is hit while still improving and
                config.strict is set
        """
        cfg = self.config
        scale = problem.scale
        certificate_tol = CERTIFICATE_RTOL * max(scale, np.finfo(float).tiny)
        zero_a = np.zeros((problem.n, problem.n), dtype=complex)
        best = self._evaluate(problem, zero_a, problem.zero_hamiltonian())

        if scale == 0.0:
            return self._report(best, 0, True, 'zero-target', lower_bound, [best.value])

        for a_cand, h_cand in candidates:
            a_proj = project_psd(a_cand, rtol=1e-8)
            h_proj = None
            if problem.allow_hamiltonian:
                h_proj = np.zeros(problem.n) if h_cand is None else np.asarray(h_cand, dtype=float)
            candidate = self._evaluate(problem, a_proj, h_proj)
            if candidate.value < best.value:
                best = candidate
        history = [best.value]

        if best.value <= certificate_tol:
            return self._report(best, 0, True, 'exact-fit', lower_bound, history)
        if best.value <= lower_bound + certificate_tol:
            return self._report(best, 0, True, 'lower-bound', lower_bound, history)

        eta = cfg.step0 if cfg.step0 is not None else cfg.step0_fraction * scale
        abs_tol = cfg.tol * scale
        a, h = zero_a, problem.zero_hamiltonian()
        iterations = 0
        stop_reason = 'iteration-cap'

        for phase in range(cfg.restarts + 1):
            reference = best.value
            last_improvement = 0
            k = 0
            phase_stalled = False
            while iterations < cfg.max_iter:
                iterations += 1
                k += 1
                value, grad_a, grad_h = problem.value_and_subgradient(a, h)
                if value < best.value:
                    best = _Iterate(value, a, h)
                history.append(best.value)

                if best.value <= lower_bound + certificate_tol:
                    stop_reason = 'lower-bound'
                    break
                if not np.any(grad_a) and (grad_h is None or not np.any(grad_h)):
                    stop_reason = 'stationary'
                    break

                if best.value < reference - abs_tol:
                    reference = best.value
                    last_improvement = k
                elif k - last_improvement >= cfg.stall_window:
                    phase_stalled = True
                    break

                step = eta / math.sqrt(k)
                a = project_psd(a - step * grad_a, rtol=1e-8)
                if h is not None:
                    h = h - step * grad_h

            logger.debug(
                f"Phase {phase}: {k} iterations, best objective {best.value:.12g}, step0 {eta:.3g}"
            )
            if not phase_stalled:
                break
            stop_reason = 'stall'
            a = best.a.copy()
            h = None if best.h is None else best.h.copy()
            eta *= cfg.restart_decay

        converged = stop_reason != 'iteration-cap'
        if not converged and len(history) > cfg.stall_window:
            # Cap hit, but the last window barely moved
            converged = history[-cfg.stall_window - 1] - history[-1] <= abs_tol
            if converged:
                stop_reason = 'stall'

        if not converged:
            message = (
                f"Optimizer hit the iteration cap ({cfg.max_iter}) with objective "
                f"{best.value:.12g} still decreasing"
            )
            if cfg.strict:
                raise NotConverged(message)
            logger.warning(message)

        return self._report(best, iterations, converged, stop_reason, lower_bound, history)

    @staticmethod
    def _report(
        best: _Iterate,
        iterations: int,
        converged: bool,
        stop_reason: str,
        lower_bound: float,
        history: List[float]
    ) -> OptimizerReport:
        return OptimizerReport(
            objective=float(best.value),
            argmin=best.a,
            hamiltonian_coefficients=best.h,
            iterations=iterations,
            converged=converged,
            stop_reason=stop_reason,
            lower_bound=float(lower_bound),
            history=history,
        )


class BruteForceOracle:
    """
    Derivative-free reference minimizer over the PSD parameterization A = B B^dag.

    Screens random complex B, then polishes the best points (and any given
    starting points) with Nelder-Mead.
    """

    def __init__(self, config: Optional[OptimizerConfig] = None):
        self.config = config or OptimizerConfig()

    def _unpack(self, x: np.ndarray, n: int, with_h: bool) -> Candidate:
        m = n * n
        b = (x[:m] + 1j * x[m:2 * m]).reshape(n, n)
        h = x[2 * m:] if with_h else None
        return b @ b.conj().T, h

    @staticmethod
    def _pack(a: np.ndarray, h: Optional[np.ndarray], with_h: bool) -> np.ndarray:
        eigenvalues, eigenvectors = np.linalg.eigh(hermitize(a, rtol=1e-8))
        b = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
        parts = [b.real.reshape(-1), b.imag.reshape(-1)]
        if with_h:
            parts.append(np.zeros(len(a)) if h is None else np.asarray(h, dtype=float))
        return np.concatenate(parts)

    def minimize(self, problem: FreeConeProblem, starts: Sequence[Candidate] = ()) -> Tuple[float, np.ndarray]:
        """
        Args:
            problem: Objective to minimize
            starts: Additional (A, h) starting points for the polish stage

        Returns:
            Tuple of (best objective, best Kossakowski matrix)
        """
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        n = problem.n
        with_h = problem.allow_hamiltonian
        size = 2 * n * n + (n if with_h else 0)
        scale = max(problem.scale, np.finfo(float).tiny)
        spread = math.sqrt(scale / n)

        def objective(x: np.ndarray) -> float:
            a, h = self._unpack(x, n, with_h)
            return problem.objective(a, h)

        screened = []
        for _ in range(cfg.oracle_restarts):
            x = spread * rng.standard_normal(size)
            if with_h:
                x[2 * n * n:] = spread * spread * rng.standard_normal(n)
            screened.append((objective(x), x))
        screened.sort(key=lambda item: item[0])

        seeds = [x for _, x in screened[:cfg.oracle_polish]]
        seeds.append(np.zeros(size))
        seeds.extend(self._pack(a, h, with_h) for a, h in starts)

        best_value, best_x = screened[0]
        options = {
            'maxfev': cfg.oracle_maxfev,
            'maxiter': cfg.oracle_maxfev,
            'xatol': 1e-10,
            'fatol': 1e-12 * scale,
            'adaptive': True,
        }
        for x0 in seeds:
            result = optimize.minimize(objective, x0, method='Nelder-Mead', options=options)
            if result.fun < best_value:
                best_value, best_x = float(result.fun), result.x

        a, _ = self._unpack(best_x, n, with_h)
        logger.debug(f"Oracle best objective {best_value:.12g} from {len(seeds)} polished starts")
        return float(best_value), a
