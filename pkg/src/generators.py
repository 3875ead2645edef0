"""
GKSL Generator Module
Time-dependent Lindblad generators in diagonal form (Lindblad operators with
rate schedules) and in Kossakowski form over a fixed generalized Gell-Mann
basis, rendered as column-stacking superoperators.

Basis ordering (frozen): for d-dimensional systems the d^2 - 1 traceless
Hermitian operators F_1..F_{d^2-1} are listed as
    1. symmetric   (E_jk + E_kj)/sqrt2          for j < k, lexicographic
    2. antisymmetric -i(E_jk - E_kj)/sqrt2      for j < k, lexicographic
    3. diagonal    (sum_{m<l} E_mm - l E_ll)/sqrt(l(l+1))   for l = 1..d-1
normalized so that Tr[F_j F_k] = delta_jk. For a qubit this gives
F = (sigma_x, sigma_y, sigma_z)/sqrt2.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, ClassVar, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import DimensionMismatch, ValidationError
from linops import herm_eig, herm_eigvals, hermitize, kron, reshuffle

logger = logging.getLogger(__name__)

MARKOV_TOL = 1e-12


@dataclass(frozen=True)
class RateSchedule:
    """
    Time-dependent Lindblad rate Gamma(t), in units of 1/time.

    Kinds:
        constant:      value
        sinusoid:      offset + amplitude * sin(omega * t + phase)
        tanh_negative: -amplitude * tanh(t / scale)
        table:         linear interpolation through (times, values), held
                       constant outside the table
        composite:     sum of the schedules listed in parts
    """

    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    VALID_KINDS: ClassVar[Tuple[str, ...]] = (
        'constant', 'sinusoid', 'tanh_negative', 'table', 'composite'
    )
    _ALIASES: ClassVar[Dict[str, str]] = {'piecewise_table': 'table'}

    def __post_init__(self):
        kind = self._ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, 'kind', kind)
        if kind not in self.VALID_KINDS:
            raise ValueError(
                f"Invalid rate kind '{self.kind}'. Must be one of {self.VALID_KINDS}"
            )
        getattr(self, f'_validate_{kind}')()

    def _require(self, *names: str):
        missing = [n for n in names if n not in self.params]
        if missing:
            raise ValueError(f"Rate kind '{self.kind}' missing parameters: {missing}")
        for name in names:
            value = self.params[name]
            if not isinstance(value, (list, tuple, RateSchedule)) and not np.isfinite(value):
                raise ValueError(f"Rate parameter '{name}' must be finite, got {value}")

    def _validate_constant(self):
        self._require('value')

    def _validate_sinusoid(self):
        self._require('amplitude')
        for name in ('omega', 'phase', 'offset'):
            if name in self.params and not np.isfinite(self.params[name]):
                raise ValueError(f"Rate parameter '{name}' must be finite")

    def _validate_tanh_negative(self):
        self._require('amplitude')
        if self.params.get('scale', 1.0) <= 0:
            raise ValueError(f"tanh_negative scale must be positive, got {self.params['scale']}")

    def _validate_table(self):
        self._require('times', 'values')
        times = np.asarray(self.params['times'], dtype=float)
        values = np.asarray(self.params['values'], dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size == 0:
            raise ValueError("Rate table needs equal-length, non-empty 'times' and 'values'")
        if np.any(np.diff(times) <= 0):
            raise ValueError("Rate table times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("Rate table entries must be finite")

    def _validate_composite(self):
        parts = self.params.get('parts')
        if not parts or not all(isinstance(p, RateSchedule) for p in parts):
            raise ValueError("Composite rate needs a non-empty list of RateSchedule 'parts'")

    def __call__(self, t: float) -> float:
        """Evaluate the rate at time t."""
        p = self.params
        if self.kind == 'constant':
            return float(p['value'])
        if self.kind == 'sinusoid':
            return float(
                p.get('offset', 0.0)
                + p['amplitude'] * np.sin(p.get('omega', 1.0) * t + p.get('phase', 0.0))
            )
        if self.kind == 'tanh_negative':
            return float(-p['amplitude'] * np.tanh(t / p.get('scale', 1.0)))
        if self.kind == 'table':
            return float(np.interp(t, p['times'], p['values']))
        return float(sum(part(t) for part in p['parts']))

    @classmethod
    def constant(cls, value: float) -> 'RateSchedule':
        return cls('constant', {'value': float(value)})

    @classmethod
    def sinusoid(
        cls,
        amplitude: float,
        omega: float = 1.0,
        phase: float = 0.0,
        offset: float = 0.0
    ) -> 'RateSchedule':
        return cls('sinusoid', {
            'amplitude': float(amplitude), 'omega': float(omega),
            'phase': float(phase), 'offset': float(offset)
        })

    @classmethod
    def tanh_negative(cls, amplitude: float = 1.0, scale: float = 1.0) -> 'RateSchedule':
        return cls('tanh_negative', {'amplitude': float(amplitude), 'scale': float(scale)})

    @classmethod
    def table(cls, times: Sequence[float], values: Sequence[float]) -> 'RateSchedule':
        return cls('table', {
            'times': [float(x) for x in times], 'values': [float(x) for x in values]
        })

    @classmethod
    def composite(cls, parts: Sequence['RateSchedule']) -> 'RateSchedule':
        return cls('composite', {'parts': list(parts)})

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready representation ({"kind": ..., **params})."""
        if self.kind == 'composite':
            return {'kind': 'composite', 'parts': [part.to_dict() for part in self.params['parts']]}
        return {'kind': self.kind, **self.params}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RateSchedule':
        data = dict(data)
        kind = data.pop('kind', None)
        if kind is None:
            raise ValueError("Rate specification needs a 'kind'")
        if kind == 'composite':
            parts = [cls.from_dict(part) for part in data.get('parts', [])]
            return cls.composite(parts)
        return cls(kind, data)


@dataclass(frozen=True)
class LindbladTerm:
    """One dissipative channel Gamma(t) D[L]."""

    operator: np.ndarray
    rate: RateSchedule


@dataclass(frozen=True)
class DiagonalGenerator:
    """
    Generator in diagonal form:
        L_t(rho) = -i[H, rho] + sum_a Gamma_a(t) (L_a rho L_a^dag - 1/2 {L_a^dag L_a, rho})

    Attributes:
        dim: System dimension d_S
        terms: Lindblad operators with their rate schedules (at most d_S^2)
        hamiltonian: Optional Hermitian Hamiltonian
    """

    dim: int
    terms: Tuple[LindbladTerm, ...]
    hamiltonian: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatch(f"dimension must be positive, got {self.dim}")
        object.__setattr__(self, 'terms', tuple(self.terms))
        if len(self.terms) > self.dim ** 2:
            raise ValidationError(
                f"{len(self.terms)} Lindblad terms exceed d^2 = {self.dim ** 2}",
                invariant='n <= d^2'
            )
        for k, term in enumerate(self.terms):
            op = np.asarray(term.operator, dtype=complex)
            if op.shape != (self.dim, self.dim):
                raise DimensionMismatch(
                    f"Lindblad operator {k} has shape {op.shape}, expected {(self.dim, self.dim)}"
                )
            if not np.all(np.isfinite(op)):
                raise ValueError(f"Lindblad operator {k} has non-finite entries")
        if self.hamiltonian is not None:
            h = np.asarray(self.hamiltonian, dtype=complex)
            if h.shape != (self.dim, self.dim):
                raise DimensionMismatch(
                    f"Hamiltonian has shape {h.shape}, expected {(self.dim, self.dim)}"
                )
            object.__setattr__(self, 'hamiltonian', hermitize(h))

    def rates_at(self, t: float) -> np.ndarray:
        return np.array([term.rate(t) for term in self.terms], dtype=float)


@dataclass(frozen=True)
class KossakowskiGenerator:
    """
    Generator in Kossakowski form over the Gell-Mann basis:
        L_t(rho) = -i[H, rho] + sum_jk A_jk(t) (F_j rho F_k - 1/2 {F_k F_j, rho})

    The Kossakowski trajectory is A(t) = sum_m f_m(t) A_m over the listed
    components; constant() builds the single-component, f = 1 case.
    """

    dim: int
    components: Tuple[Tuple[np.ndarray, RateSchedule], ...]
    hamiltonian: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatch(f"dimension must be positive, got {self.dim}")
        n = self.dim ** 2 - 1
        checked = []
        for matrix, schedule in self.components:
            a = np.asarray(matrix, dtype=complex)
            if a.shape != (n, n):
                raise DimensionMismatch(
                    f"Kossakowski matrix must be {n}x{n} for d={self.dim}, got {a.shape}"
                )
            checked.append((hermitize(a), schedule))
        object.__setattr__(self, 'components', tuple(checked))
        if self.hamiltonian is not None:
            h = np.asarray(self.hamiltonian, dtype=complex)
            if h.shape != (self.dim, self.dim):
                raise DimensionMismatch(
                    f"Hamiltonian has shape {h.shape}, expected {(self.dim, self.dim)}"
                )
            object.__setattr__(self, 'hamiltonian', hermitize(h))

    @classmethod
    def constant(
        cls,
        dim: int,
        kossakowski: np.ndarray,
        hamiltonian: Optional[np.ndarray] = None
    ) -> 'KossakowskiGenerator':
        return cls(dim, ((kossakowski, RateSchedule.constant(1.0)),), hamiltonian)

    def kossakowski_at(self, t: float) -> np.ndarray:
        n = self.dim ** 2 - 1
        total = np.zeros((n, n), dtype=complex)
        for matrix, schedule in self.components:
            total += schedule(t) * matrix
        return total


Generator = Union[DiagonalGenerator, KossakowskiGenerator]


@lru_cache(maxsize=None)
def _gell_mann(dim: int) -> np.ndarray:
    basis = []
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for j in range(dim):
        for k in range(j + 1, dim):
            f = np.zeros((dim, dim), dtype=complex)
            f[j, k] = f[k, j] = inv_sqrt2
            basis.append(f)
    for j in range(dim):
        for k in range(j + 1, dim):
            f = np.zeros((dim, dim), dtype=complex)
            f[j, k] = -1j * inv_sqrt2
            f[k, j] = 1j * inv_sqrt2
            basis.append(f)
    for l in range(1, dim):
        f = np.zeros((dim, dim), dtype=complex)
        f[np.arange(l), np.arange(l)] = 1.0
        f[l, l] = -float(l)
        basis.append(f / np.sqrt(l * (l + 1)))
    result = np.array(basis, dtype=complex).reshape(dim * dim - 1, dim, dim)
    result.setflags(write=False)
    return result


def gell_mann_basis(dim: int) -> np.ndarray:
    """
    Orthonormal traceless Hermitian basis, shape (d^2 - 1, d, d).

    The returned array is read-only and shared between callers.
    """
    if dim < 1:
        raise DimensionMismatch(f"dimension must be positive, got {dim}")
    return _gell_mann(int(dim))


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> -i[H, rho]."""
    h = np.asarray(h, dtype=complex)
    identity = np.eye(h.shape[0])
    return -1j * (kron(identity, h) - kron(h.T, identity))


def dissipator_superop(left: np.ndarray, right: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Superoperator of rho -> X rho Y^dag - 1/2 {Y^dag X, rho} with X = left, Y = right.

    With right omitted this is the ordinary dissipator D[L].
    """
    x = np.asarray(left, dtype=complex)
    y = x if right is None else np.asarray(right, dtype=complex)
    identity = np.eye(x.shape[0])
    ydx = y.conj().T @ x
    return kron(y.conj(), x) - 0.5 * kron(identity, ydx) - 0.5 * kron(ydx.T, identity)


def _check_time(t: float):
    if t < 0 or not np.isfinite(t):
        raise ValueError(f"time must be finite and nonnegative, got {t}")


def gksl_superop(g: Generator, t: float) -> np.ndarray:
    """
    Render a generator at time t as a d^2 x d^2 column-stacking superoperator.

    Args:
        g: DiagonalGenerator or KossakowskiGenerator
        t: Time (>= 0)

    Returns:
        Superoperator matrix S with vec(L_t(rho)) = S vec(rho)

    Raises:
        DimensionMismatch: If the generator's operators disagree with its dim
    """
    _check_time(t)
    d = g.dim
    superop = np.zeros((d * d, d * d), dtype=complex)
    if g.hamiltonian is not None:
        superop += hamiltonian_superop(g.hamiltonian)

    if isinstance(g, DiagonalGenerator):
        for term in g.terms:
            rate = term.rate(t)
            if rate != 0.0:
                superop += rate * dissipator_superop(term.operator)
        return superop

    if isinstance(g, KossakowskiGenerator):
        if d == 1:
            return superop
        # Diagonalize A(t) = sum_m a_m v_m v_m^dag, then L_m = sum_j v_m[j] F_j
        eigenvalues, eigenvectors = herm_eig(g.kossakowski_at(t))
        basis = gell_mann_basis(d)
        for a_m, v_m in zip(eigenvalues, eigenvectors.T):
            if a_m == 0.0:
                continue
            lindblad_op = np.tensordot(v_m, basis, axes=1)
            superop += a_m * dissipator_superop(lindblad_op)
        return superop

    raise TypeError(f"Unsupported generator type {type(g).__name__}")


def kossakowski_superop(a: np.ndarray, dim: int, hamiltonian: Optional[np.ndarray] = None) -> np.ndarray:
    """Superoperator of the constant Kossakowski generator with matrix a."""
    return gksl_superop(KossakowskiGenerator.constant(dim, a, hamiltonian), 0.0)


def lindblad_coefficients(operator: np.ndarray) -> Tuple[np.ndarray, complex]:
    """
    Expand L = sum_j c_j F_j + ell * I.

    Returns:
        Tuple of (coefficient vector c, trace part ell = Tr L / d)
    """
    op = np.asarray(operator, dtype=complex)
    d = op.shape[0]
    basis = gell_mann_basis(d)
    coefficients = np.einsum('jab,ba->j', basis, op)
    return coefficients, np.trace(op) / d


def diagonal_to_kossakowski(g: DiagonalGenerator, t: float) -> KossakowskiGenerator:
    """
    Convert a diagonal generator at time t into Kossakowski form.

    A_jk = sum_a Gamma_a(t) c_aj conj(c_ak); the identity component of each
    L_a is folded into an effective Hamiltonian
    H_a = (i/2) Gamma_a (conj(ell_a) L0_a - ell_a L0_a^dag).

    Returns:
        Constant KossakowskiGenerator reproducing gksl_superop(g, t)
    """
    _check_time(t)
    d = g.dim
    n = d * d - 1
    kossakowski = np.zeros((n, n), dtype=complex)
    hamiltonian = (
        np.array(g.hamiltonian, dtype=complex) if g.hamiltonian is not None
        else np.zeros((d, d), dtype=complex)
    )
    for term in g.terms:
        rate = term.rate(t)
        coefficients, ell = lindblad_coefficients(term.operator)
        kossakowski += rate * np.outer(coefficients, coefficients.conj())
        if ell != 0:
            traceless = np.asarray(term.operator, dtype=complex) - ell * np.eye(d)
            hamiltonian += 0.5j * rate * (np.conj(ell) * traceless - ell * traceless.conj().T)

    has_hamiltonian = g.hamiltonian is not None or np.any(np.abs(hamiltonian) > 0)
    return KossakowskiGenerator.constant(d, kossakowski, hamiltonian if has_hamiltonian else None)


def kossakowski_from_superop(superop: np.ndarray, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Recover (A, H) from the superoperator of a GKSL generator.

    Writes S(rho) = sum_{mu nu} c_{mu nu} F_mu rho F_nu over the basis
    {I/sqrt d, F_1, ...}; then A = c[1:, 1:] and, with
    X = sum_j c_{j0} F_j / sqrt d, H = i (X - X^dag) / 2.

    Args:
        superop: Trace-annihilating, Hermiticity-preserving superoperator
        dim: System dimension

    Returns:
        Tuple of (Kossakowski matrix, traceless Hamiltonian)
    """
    d = int(dim)
    full_basis = np.concatenate([np.eye(d, dtype=complex)[None] / np.sqrt(d), gell_mann_basis(d)])
    columns = np.array([np.reshape(f, -1, order='F') for f in full_basis]).T
    coefficients = columns.conj().T @ reshuffle(superop, d) @ columns
    kossakowski = 0.5 * (coefficients[1:, 1:] + coefficients[1:, 1:].conj().T)
    x = np.tensordot(coefficients[1:, 0], gell_mann_basis(d), axes=1) / np.sqrt(d)
    hamiltonian = 0.5j * (x - x.conj().T)
    return kossakowski, hamiltonian


def kossakowski_matrix(g: Generator, t: float) -> np.ndarray:
    """Kossakowski matrix of either generator form at time t."""
    if isinstance(g, KossakowskiGenerator):
        _check_time(t)
        return g.kossakowski_at(t)
    return diagonal_to_kossakowski(g, t).kossakowski_at(0.0)


def is_instantaneously_markovian(g: Generator, t: float, tol: float = MARKOV_TOL) -> bool:
    """
    True iff the Kossakowski matrix at time t is PSD within -tol.

    Args:
        g: Generator in either form
        t: Time
        tol: Allowed negative eigenvalue magnitude

    Returns:
        Whether the instantaneous generator belongs to the free cone
    """
    if g.dim == 1:
        return True
    min_eigenvalue = float(herm_eigvals(kossakowski_matrix(g, t))[0])
    logger.debug(f"t={t:.6g}: min Kossakowski eigenvalue {min_eigenvalue:.3e}")
    return min_eigenvalue >= -tol


def pauli_matrices() -> List[np.ndarray]:
    """[sigma_x, sigma_y, sigma_z]."""
    return [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
