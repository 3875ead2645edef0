"""
Dynamics Module
Time-ordered propagators Lambda(t2, t1) of GKSL generators and the
incremental maps Lambda(t + eps, t) whose Choi matrices witness CP-divisibility.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from errors import DimensionMismatch, StepTooLarge
from generators import Generator, gksl_superop
from linops import max_abs, unvec, vec

logger = logging.getLogger(__name__)

INVARIANT_TOL = 1e-8
MAX_NORM_STEP = 1.0
DEFAULT_MAX_STEP = 1e-3


@dataclass(frozen=True)
class Propagator:
    """
    Dynamical map between two times.

    Attributes:
        superop: d^2 x d^2 column-stacking superoperator
        t_start: Initial time t1
        t_end: Final time t2
        step: Integration step actually used (0 for the identity)
    """

    superop: np.ndarray
    t_start: float
    t_end: float
    step: float

    def __post_init__(self):
        s = np.asarray(self.superop, dtype=complex)
        d = int(round(math.sqrt(s.shape[0])))
        if s.ndim != 2 or s.shape != (d * d, d * d):
            raise DimensionMismatch(f"propagator superoperator must be d^2 x d^2, got {s.shape}")
        object.__setattr__(self, 'superop', s)
        self._validate()

    @property
    def dim(self) -> int:
        return int(round(math.sqrt(self.superop.shape[0])))

    def _validate(self, tol: float = INVARIANT_TOL):
        d = self.dim
        vec_identity = vec(np.eye(d))
        trace_defect = max_abs(vec_identity.conj() @ self.superop - vec_identity.conj())
        if trace_defect > tol:
            raise ValueError(f"propagator is not trace-preserving: defect {trace_defect:.3e}")
        # Hermitian inputs |j><k| + |k><j| and i(|j><k| - |k><j|)
        for j in range(d):
            for k in range(j, d):
                for phase in ((1.0, 1.0), (1j, -1j)) if j != k else ((1.0, 1.0),):
                    trial = np.zeros((d, d), dtype=complex)
                    trial[j, k] += phase[0]
                    trial[k, j] += phase[1]
                    out = self.apply(trial)
                    defect = max_abs(out - out.conj().T)
                    if defect > tol:
                        raise ValueError(
                            f"propagator is not Hermiticity-preserving: defect {defect:.3e}"
                        )

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Evolve a d x d operator."""
        return unvec(self.superop @ vec(np.asarray(rho, dtype=complex)), self.dim)

    def compose(self, earlier: 'Propagator') -> 'Propagator':
        """
        Return self after earlier, i.e. Lambda(t3, t2) Lambda(t2, t1).

        Raises:
            ValueError: If the time windows do not join
        """
        if not math.isclose(earlier.t_end, self.t_start, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(
                f"cannot compose windows [{earlier.t_start}, {earlier.t_end}] "
                f"and [{self.t_start}, {self.t_end}]"
            )
        return Propagator(
            self.superop @ earlier.superop, earlier.t_start, self.t_end,
            max(self.step, earlier.step)
        )

    @classmethod
    def identity(cls, dim: int, t: float = 0.0) -> 'Propagator':
        return cls(np.eye(dim * dim, dtype=complex), t, t, 0.0)


def default_step(t1: float, t2: float) -> float:
    """min(1e-3, (t2 - t1)/100)."""
    span = t2 - t1
    return min(DEFAULT_MAX_STEP, span / 100.0) if span > 0 else DEFAULT_MAX_STEP


def propagate(g: Generator, t1: float, t2: float, step: Optional[float] = None) -> Propagator:
    """
    Time-ordered propagator by first-order Magnus (midpoint) stepping.

    Lambda(t2, t1) = prod_k exp(L(t_k + dt/2) dt), later steps to the left,
    each exponential by scaling-and-squaring Pade (scipy.linalg.expm).

    Args:
        g: Generator
        t1: Start time (>= 0)
        t2: End time (>= t1)
        step: Maximum step; the window is split into equal steps no larger
            than this. Defaults to min(1e-3, (t2 - t1)/100).

    Returns:
        Propagator for [t1, t2]

    Raises:
        ValueError: If t2 < t1 or step <= 0
        StepTooLarge: If ||L(t)||_1 * dt exceeds 1 on any step
    """
    if t2 < t1:
        raise ValueError(f"t2 must be >= t1, got t1={t1}, t2={t2}")
    if step is None:
        step = default_step(t1, t2)
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")

    d = g.dim
    span = t2 - t1
    if span == 0:
        return Propagator.identity(d, t1)

    n_steps = max(1, math.ceil(span / step - 1e-9))
    dt = span / n_steps
    total = np.eye(d * d, dtype=complex)
    for k in range(n_steps):
        t_mid = t1 + (k + 0.5) * dt
        generator = gksl_superop(g, t_mid)
        scaled_norm = np.linalg.norm(generator, 1) * dt
        if scaled_norm > MAX_NORM_STEP:
            raise StepTooLarge(
                f"||L(t={t_mid:.6g})||_1 * dt = {scaled_norm:.3g} exceeds {MAX_NORM_STEP}; "
                f"reduce the step below {dt / scaled_norm:.3g}"
            )
        total = linalg.expm(generator * dt) @ total

    logger.debug(f"Propagated [{t1:.6g}, {t2:.6g}] in {n_steps} steps of {dt:.3g}")
    return Propagator(total, t1, t2, dt)


def incremental_map(g: Generator, t: float, eps: float, step: Optional[float] = None) -> Propagator:
    """
    Incremental map Lambda(t + eps, t).

    A single midpoint exponential unless a smaller step is given.

    Raises:
        ValueError: If eps <= 0 or step <= 0
        StepTooLarge: If ||L||_1 * dt exceeds 1 on any step
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return propagate(g, t, t + eps, eps if step is None else min(step, eps))


def incremental_from_snapshots(later: Propagator, earlier: Propagator) -> Propagator:
    """
    Recover Lambda(t2, t1) = Lambda(t2, t0) Lambda(t1, t0)^-1 from two snapshots
    sharing the same initial time.

    Raises:
        ValueError: If the snapshots do not share t0 or are out of order
        numpy.linalg.LinAlgError: If the earlier snapshot is singular
    """
    if not math.isclose(later.t_start, earlier.t_start, abs_tol=1e-12):
        raise ValueError("snapshots must share their initial time")
    if later.t_end < earlier.t_end:
        raise ValueError("later snapshot must end after the earlier one")
    increment = later.superop @ np.linalg.inv(earlier.superop)
    return Propagator(increment, earlier.t_end, later.t_end, later.step)
