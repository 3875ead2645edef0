"""
Choi Matrix Module
Choi matrices of dynamical maps and their increments, the exact eps -> 0
Choi derivative K = (I kron L_t)(|psi><psi|), freeness predicates, and the
linear parameterization K_M(A) of the free cone by PSD Kossakowski matrices.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from dynamics import Propagator
from errors import DimensionMismatch, NonTraceless, NotMarkovian
from generators import (
    Generator, dissipator_superop, gell_mann_basis, gksl_superop, hamiltonian_superop
)
from linops import (
    herm_eig, herm_eigvals, hermitize, kron, max_abs, partial_trace,
    permute_subsystems, superop_to_choi, trace_norm
)

logger = logging.getLogger(__name__)

TRACE_TOL = 1e-10
FREE_TOL = 1e-9
CONE_TOL = 1e-12
CHOI_HERMITIAN_RTOL = 1e-8


def _infer_dim(matrix: np.ndarray) -> int:
    size = matrix.shape[0]
    d = int(round(np.sqrt(size)))
    if d * d != size or matrix.shape != (size, size):
        raise DimensionMismatch(f"Choi matrix must be d^2 x d^2, got {matrix.shape}")
    return d


@dataclass(frozen=True)
class ChoiMatrix:
    """
    Hermitian unit-trace Choi matrix (I kron Lambda)(|psi><psi|).

    Not necessarily PSD: increments of non-Markovian evolutions have
    negative eigenvalues.
    """

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = hermitize(self.matrix, CHOI_HERMITIAN_RTOL)
        if m.shape != (self.dim ** 2, self.dim ** 2):
            raise DimensionMismatch(
                f"Choi matrix for d={self.dim} must be {self.dim ** 2}x{self.dim ** 2}, got {m.shape}"
            )
        trace = np.trace(m).real
        if abs(trace - 1.0) > TRACE_TOL * max(1.0, max_abs(m)):
            raise ValueError(f"Choi matrix must have unit trace, got {trace:.12g}")
        object.__setattr__(self, 'matrix', m)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> 'ChoiMatrix':
        matrix = np.asarray(matrix, dtype=complex)
        return cls(_infer_dim(matrix), matrix)

    @property
    def trace_norm(self) -> float:
        return trace_norm(self.matrix)

    @property
    def eigenvalues(self) -> np.ndarray:
        return herm_eigvals(self.matrix)


@dataclass(frozen=True)
class ChoiDerivative:
    """
    First-order Choi object K = (I kron L_t)(|psi><psi|): Hermitian, traceless,
    units of 1/time.
    """

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = hermitize(self.matrix, CHOI_HERMITIAN_RTOL)
        if m.shape != (self.dim ** 2, self.dim ** 2):
            raise DimensionMismatch(
                f"Choi derivative for d={self.dim} must be {self.dim ** 2}x{self.dim ** 2}, "
                f"got {m.shape}"
            )
        trace = np.trace(m)
        if abs(trace) > TRACE_TOL * max(1.0, max_abs(m)):
            raise NonTraceless(f"Choi derivative must be traceless, got trace {trace:.3e}")
        object.__setattr__(self, 'matrix', m)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> 'ChoiDerivative':
        matrix = np.asarray(matrix, dtype=complex)
        return cls(_infer_dim(matrix), matrix)

    def __add__(self, other: 'ChoiDerivative') -> 'ChoiDerivative':
        if other.dim != self.dim:
            raise DimensionMismatch(f"cannot add derivatives of dims {self.dim} and {other.dim}")
        return ChoiDerivative(self.dim, self.matrix + other.matrix)

    def scaled(self, factor: float) -> 'ChoiDerivative':
        return ChoiDerivative(self.dim, factor * self.matrix)

    def first_order_choi(self, eps: float) -> ChoiMatrix:
        """psi + eps K, the first-order incremental Choi matrix."""
        return ChoiMatrix(self.dim, maximally_entangled(self.dim) + eps * self.matrix)


@dataclass(frozen=True)
class FreeSetPoint:
    """
    Element of the free set in the eps -> 0 limit: a PSD Kossakowski matrix A
    with its realized Choi derivative K_M(A).
    """

    kossakowski: np.ndarray
    derivative: ChoiDerivative
    hamiltonian: Optional[np.ndarray] = None

    def __post_init__(self):
        a = hermitize(self.kossakowski)
        if a.size and herm_eigvals(a)[0] < -CONE_TOL:
            raise NotMarkovian(
                f"free-set Kossakowski matrix has eigenvalue {herm_eigvals(a)[0]:.3e} < 0"
            )
        object.__setattr__(self, 'kossakowski', a)


@lru_cache(maxsize=None)
def _psi_vector(dim: int) -> np.ndarray:
    psi = np.eye(dim, dtype=complex).reshape(-1) / np.sqrt(dim)
    psi.setflags(write=False)
    return psi


def maximally_entangled(dim: int) -> np.ndarray:
    """|psi><psi| with |psi> = (1/sqrt d) sum_i |ii>."""
    psi = _psi_vector(int(dim))
    return np.outer(psi, psi.conj())


@lru_cache(maxsize=None)
def _complement_basis(dim: int) -> np.ndarray:
    # Eigenvectors of Q = I - |psi><psi| with eigenvalue 1 span its range
    projector = np.eye(dim * dim) - maximally_entangled(dim)
    eigenvalues, eigenvectors = herm_eig(projector)
    basis = eigenvectors[:, eigenvalues > 0.5]
    basis.setflags(write=False)
    return basis


def compressed_spectrum(k: Union[ChoiDerivative, np.ndarray]) -> np.ndarray:
    """
    Eigenvalues mu_i of Q K Q on the range of Q = I - |psi><psi|.

    For traceless K, <psi|K|psi> = -sum_i mu_i.
    """
    if isinstance(k, ChoiDerivative):
        dim, matrix = k.dim, k.matrix
    else:
        matrix = np.asarray(k, dtype=complex)
        dim = _infer_dim(matrix)
    basis = _complement_basis(dim)
    compressed = hermitize(
        basis.conj().T @ matrix @ basis, CHOI_HERMITIAN_RTOL, CONE_TOL * max_abs(matrix)
    )
    return herm_eigvals(compressed)


def choi_of_propagator(p: Propagator) -> ChoiMatrix:
    """
    Normalized Choi matrix of a propagator, Choi(identity) = |psi><psi|.

    Returns:
        Unit-trace ChoiMatrix
    """
    return ChoiMatrix(p.dim, superop_to_choi(p.superop, p.dim))


def choi_derivative(g: Generator, t: float) -> ChoiDerivative:
    """
    Exact first-order object K = reshuffle(L_t)/d of the incremental map
    Lambda(t + eps, t) = I + eps L_t + O(eps^2).
    """
    return ChoiDerivative(g.dim, superop_to_choi(gksl_superop(g, t), g.dim))


def is_free(c: Union[ChoiMatrix, np.ndarray], tol: float = FREE_TOL) -> bool:
    """
    Freeness test ||c||_1 <= 1 + tol.

    Accepts a ChoiMatrix or any Hermitian unit-trace matrix (e.g. tensor
    products and partial traces of Choi states).
    """
    matrix = c.matrix if isinstance(c, ChoiMatrix) else np.asarray(c, dtype=complex)
    return trace_norm(matrix, CHOI_HERMITIAN_RTOL) <= 1.0 + tol


def mix(c1: ChoiMatrix, c2: ChoiMatrix, p: float) -> ChoiMatrix:
    """
    Convex mixture p c1 + (1 - p) c2.

    Raises:
        ValueError: If p is outside [0, 1]
        DimensionMismatch: If the dimensions differ
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {p}")
    if c1.dim != c2.dim:
        raise DimensionMismatch(f"cannot mix Choi matrices of dims {c1.dim} and {c2.dim}")
    return ChoiMatrix(c1.dim, p * c1.matrix + (1.0 - p) * c2.matrix)


def tensor_choi(c1: ChoiMatrix, c2: ChoiMatrix) -> ChoiMatrix:
    """
    Choi matrix of Lambda_1 kron Lambda_2, i.e. c1 kron c2 with the factors
    reordered to (ref_1 ref_2)(out_1 out_2).
    """
    d1, d2 = c1.dim, c2.dim
    joint = permute_subsystems(kron(c1.matrix, c2.matrix), [d1, d1, d2, d2], [0, 2, 1, 3])
    return ChoiMatrix(d1 * d2, joint)


def swap_choi(c: ChoiMatrix, d1: int, d2: int) -> ChoiMatrix:
    """Exchange the two parties of a Choi matrix of a map on C^d1 kron C^d2."""
    if d1 * d2 != c.dim:
        raise DimensionMismatch(f"d1*d2 = {d1 * d2} does not match Choi dim {c.dim}")
    swapped = permute_subsystems(c.matrix, [d1, d2, d1, d2], [1, 0, 3, 2])
    return ChoiMatrix(c.dim, swapped)


def reduce_choi(c: ChoiMatrix, d1: int, d2: int, keep: int = 0) -> ChoiMatrix:
    """
    Choi matrix of the marginal map on party `keep` (0 or 1) of a map on
    C^d1 kron C^d2, obtained by tracing out the other party's reference and
    output legs.
    """
    if d1 * d2 != c.dim:
        raise DimensionMismatch(f"d1*d2 = {d1 * d2} does not match Choi dim {c.dim}")
    if keep not in (0, 1):
        raise ValueError(f"keep must be 0 or 1, got {keep}")
    kept = [0, 2] if keep == 0 else [1, 3]
    reduced = partial_trace(c.matrix, [d1, d2, d1, d2], kept)
    return ChoiMatrix(d1 if keep == 0 else d2, reduced)


def local_map_action(matrix: np.ndarray, superop: np.ndarray, dim: int) -> np.ndarray:
    """
    Apply (I kron Lambda) to an operator on C^d kron C^d, Lambda given as a
    column-stacking superoperator.
    """
    m = np.asarray(matrix, dtype=complex)
    s = np.asarray(superop, dtype=complex)
    d = int(dim)
    if m.shape != (d * d, d * d) or s.shape != (d * d, d * d):
        raise DimensionMismatch(
            f"operator {m.shape} and superoperator {s.shape} must both be {d * d}x{d * d}"
        )
    # Blocks X_ij = m[(i,:),(j,:)] stored as vec(X_ij) along the last axis
    blocks = m.reshape(d, d, d, d).transpose(0, 2, 3, 1).reshape(d, d, d * d)
    mapped = blocks @ s.T
    return mapped.reshape(d, d, d, d).transpose(0, 3, 1, 2).reshape(d * d, d * d)


def apply_local_map(c: ChoiMatrix, p: Propagator) -> ChoiMatrix:
    """Choi state (I kron Lambda)(c) for a propagator Lambda on the output leg."""
    if p.dim != c.dim:
        raise DimensionMismatch(f"propagator dim {p.dim} does not match Choi dim {c.dim}")
    return ChoiMatrix(c.dim, local_map_action(c.matrix, p.superop, c.dim))


@lru_cache(maxsize=None)
def _kossakowski_map(dim: int) -> np.ndarray:
    basis = gell_mann_basis(dim)
    n = len(basis)
    columns = np.empty((dim ** 4, n * n), dtype=complex)
    for j in range(n):
        for k in range(n):
            superop = dissipator_superop(basis[j], basis[k])
            columns[:, j * n + k] = superop_to_choi(superop, dim).reshape(-1)
    columns.setflags(write=False)
    return columns


@lru_cache(maxsize=None)
def _hamiltonian_map(dim: int) -> np.ndarray:
    basis = gell_mann_basis(dim)
    columns = np.empty((dim ** 4, len(basis)), dtype=complex)
    for j, f in enumerate(basis):
        columns[:, j] = superop_to_choi(hamiltonian_superop(f), dim).reshape(-1)
    columns.setflags(write=False)
    return columns


def kossakowski_choi_map(dim: int) -> np.ndarray:
    """
    Matrix M with vec_row(K_M(A)) = M vec_row(A): column j*n + k holds the
    Choi derivative of rho -> F_j rho F_k - 1/2 {F_k F_j, rho}.

    Shape (d^4, (d^2 - 1)^2); read-only and cached per dimension.
    """
    return _kossakowski_map(int(dim))


def hamiltonian_choi_map(dim: int) -> np.ndarray:
    """Matrix with column j the Choi derivative of rho -> -i[F_j, rho]; shape (d^4, d^2 - 1)."""
    return _hamiltonian_map(int(dim))


def derivative_from_kossakowski(
    a: np.ndarray,
    dim: int,
    hamiltonian_coefficients: Optional[Sequence[float]] = None
) -> ChoiDerivative:
    """K_M(A) (+ Hamiltonian contribution sum_j h_j (-i[F_j, .])) as a ChoiDerivative."""
    a = np.asarray(a, dtype=complex)
    n = dim * dim - 1
    if a.shape != (n, n):
        raise DimensionMismatch(f"Kossakowski matrix must be {n}x{n} for d={dim}, got {a.shape}")
    vector = kossakowski_choi_map(dim) @ a.reshape(-1)
    if hamiltonian_coefficients is not None:
        vector = vector + hamiltonian_choi_map(dim) @ np.asarray(hamiltonian_coefficients, dtype=float)
    return ChoiDerivative(dim, vector.reshape(dim * dim, dim * dim))


def free_set_point(a: np.ndarray, dim: int) -> FreeSetPoint:
    """
    Realize a PSD Kossakowski matrix as a point of the free set.

    Raises:
        NotMarkovian: If a has an eigenvalue below -1e-12
    """
    return FreeSetPoint(a, derivative_from_kossakowski(a, dim))
