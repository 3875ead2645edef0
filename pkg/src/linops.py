"""
Dense Linear Algebra Kernel
Hermitian eigendecomposition, trace norm, vectorization and the
superoperator <-> Choi reshuffle used by every other module.

Conventions (frozen):
    - vec() stacks columns: vec(M)[i + d*j] = M[i, j], so that
      vec(A X B) = (B^T kron A) vec(X).
    - kron(A, B) uses the row-major block layout of numpy.kron, the first
      factor being the outer (reference) subsystem.
    - superop_to_choi(S) = reshuffle(S) / d, giving Choi(identity) = |psi><psi|
      with |psi> = (1/sqrt d) sum_i |ii>.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from errors import DimensionMismatch, NonHermitian

logger = logging.getLogger(__name__)

HERMITIAN_RTOL = 1e-12
SIGN_ZERO_TOL = 1e-12


def _as_square(m: np.ndarray, name: str = 'matrix') -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return m


def max_abs(m: np.ndarray) -> float:
    """Largest absolute entry, 0.0 for empty input."""
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def is_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    """
    Check ||M - M^dag||_max <= rtol * ||M||_max.

    Args:
        m: Square matrix
        rtol: Relative tolerance

    Returns:
        True if the matrix is Hermitian within tolerance
    """
    m = np.asarray(m)
    return max_abs(m - m.conj().T) <= rtol * max_abs(m)


def hermitize(m: np.ndarray, rtol: float = HERMITIAN_RTOL, atol: float = 0.0) -> np.ndarray:
    """
    Validate Hermiticity and return the symmetrized matrix (M + M^dag)/2.

    The check is ||M - M^dag||_max <= rtol * ||M||_max + atol; atol is the
    floor for matrices that are themselves at roundoff level.

    Raises:
        NonHermitian: If the asymmetry exceeds the tolerance
    """
    m = _as_square(m)
    asymmetry = max_abs(m - m.conj().T)
    scale = max_abs(m)
    if asymmetry > rtol * scale + atol:
        raise NonHermitian(
            f"matrix is not Hermitian: ||M - M^dag||_max = {asymmetry:.3e} "
            f"exceeds {rtol:.1e} * ||M||_max + {atol:.1e} = {rtol * scale + atol:.3e}"
        )
    return 0.5 * (m + m.conj().T)


def herm_eig(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Spectral decomposition of a Hermitian matrix.

    Args:
        m: Hermitian matrix
        rtol: Relative Hermiticity tolerance

    Returns:
        Tuple of (eigenvalues ascending, unitary matrix of eigenvectors as columns)

    Raises:
        NonHermitian: If m is not Hermitian within tolerance
    """
    h = hermitize(m, rtol)
    eigenvalues, eigenvectors = linalg.eigh(h)
    return eigenvalues, eigenvectors


def herm_eigvals(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix."""
    return linalg.eigvalsh(hermitize(m, rtol))


def trace_norm(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> float:
    """
    Trace norm of a Hermitian matrix: the sum of absolute eigenvalues.

    Args:
        m: Hermitian matrix
        rtol: Relative Hermiticity tolerance

    Returns:
        ||m||_1
    """
    return float(np.sum(np.abs(herm_eigvals(m, rtol))))


def trace_norm_subgradient(
    m: np.ndarray,
    zero_tol: float = SIGN_ZERO_TOL,
    rtol: float = HERMITIAN_RTOL
) -> Tuple[float, np.ndarray]:
    """
    Trace norm together with the subgradient V sign(L) V^dag.

    Eigen-directions with |lambda| < zero_tol get sign 0, which is a valid
    selection from the subdifferential.

    Returns:
        Tuple of (trace norm, Hermitian subgradient matrix)
    """
    eigenvalues, eigenvectors = herm_eig(m, rtol)
    signs = np.sign(eigenvalues)
    signs[np.abs(eigenvalues) < zero_tol] = 0.0
    subgradient = (eigenvectors * signs) @ eigenvectors.conj().T
    return float(np.sum(np.abs(eigenvalues))), subgradient


def project_psd(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Project a Hermitian matrix onto the PSD cone by clipping eigenvalues at 0."""
    eigenvalues, eigenvectors = herm_eig(m, rtol)
    clipped = np.clip(eigenvalues, 0.0, None)
    projected = (eigenvectors * clipped) @ eigenvectors.conj().T
    return 0.5 * (projected + projected.conj().T)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product a (outer) kron b (inner)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise DimensionMismatch(f"vec expects a matrix, got ndim={m.ndim}")
    return np.reshape(m, -1, order='F')


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    """
    Inverse of vec for a dim x dim matrix.

    Raises:
        DimensionMismatch: If v does not hold dim**2 entries
    """
    v = np.asarray(v)
    if v.size != dim * dim:
        raise DimensionMismatch(f"cannot unvec {v.size} entries into a {dim}x{dim} matrix")
    return np.reshape(v, (dim, dim), order='F')


def _check_super(m: np.ndarray, d: int, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (d * d, d * d):
        raise DimensionMismatch(f"{name} must be {d * d}x{d * d} for d={d}, got {m.shape}")
    return m


def reshuffle(m: np.ndarray, d: int) -> np.ndarray:
    """
    Index reshuffle between a column-stacking superoperator and its
    (unnormalized) Choi matrix.

    Writing S[(b, a), (j, i)] in row-major pair indices, the Choi matrix is
    C[(i, a), (j, b)] = S[(b, a), (j, i)]: the first and last tensor legs
    swap. The map is linear and its own inverse.

    Args:
        m: d^2 x d^2 matrix
        d: System dimension

    Returns:
        Reshuffled d^2 x d^2 matrix

    Raises:
        DimensionMismatch: If m is not d^2 x d^2
    """
    m = _check_super(m, d, 'reshuffle input')
    return m.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d * d, d * d)


def superop_to_choi(s: np.ndarray, d: int) -> np.ndarray:
    """Normalized Choi matrix (I kron S)(|psi><psi|) of a superoperator."""
    return reshuffle(s, d) / d


def choi_to_superop(c: np.ndarray, d: int) -> np.ndarray:
    """Inverse of superop_to_choi."""
    return reshuffle(c, d) * d


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """
    Partial trace over all subsystems not listed in keep.

    Args:
        m: Operator on the tensor product of subsystems with dimensions dims
        dims: Subsystem dimensions, outermost first
        keep: Indices of the subsystems to keep (in increasing order)

    Returns:
        Reduced operator on the kept subsystems

    Raises:
        DimensionMismatch: If prod(dims) does not match the operator size
    """
    dims = [int(x) for x in dims]
    total = int(np.prod(dims))
    m = np.asarray(m, dtype=complex)
    if m.shape != (total, total):
        raise DimensionMismatch(f"operator shape {m.shape} does not match subsystem dims {dims}")

    keep = sorted(int(k) for k in keep)
    n = len(dims)
    tensor = m.reshape(dims + dims)
    # Trace out from the last subsystem so remaining axis indices stay valid
    for k in reversed(range(n)):
        if k in keep:
            continue
        current = tensor.ndim // 2
        tensor = np.trace(tensor, axis1=k, axis2=k + current)
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(kept_dim, kept_dim)


def permute_subsystems(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """
    Reorder tensor factors: output subsystem k is input subsystem perm[k].

    Raises:
        DimensionMismatch: If perm is not a permutation of range(len(dims))
    """
    dims = [int(x) for x in dims]
    perm = [int(p) for p in perm]
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise DimensionMismatch(f"{perm} is not a permutation of {n} subsystems")
    total = int(np.prod(dims))
    m = np.asarray(m, dtype=complex)
    if m.shape != (total, total):
        raise DimensionMismatch(f"operator shape {m.shape} does not match subsystem dims {dims}")
    axes = perm + [p + n for p in perm]
    return m.reshape(dims + dims).transpose(axes).reshape(total, total)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Gaussian Hermitian matrix."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (z + z.conj().T)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """Random density matrix of the given rank (full rank by default)."""
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
