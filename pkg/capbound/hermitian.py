"""
Dense Hermitian linear algebra.

Matrices are plain complex numpy arrays. Bipartite operators live on B (x) A
with the B factor first, matching the Choi convention used by the channel
module. All transposes are taken in the computational basis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .const import DENSITY_TOL, HERMITIAN_TOL
from .exceptions import DimensionMismatch, ValidationError

_LOGGER = logging.getLogger(__name__)

ComplexMatrix = NDArray[np.complex128]
RealVector = NDArray[np.float64]

Subsystem = Literal["A", "B"]


@dataclass(frozen=True)
class BipartiteLabel:
    """Dimensions of a bipartite space B (x) A, B factor first."""

    dim_b: int
    dim_a: int

    def __post_init__(self) -> None:
        if self.dim_b < 1 or self.dim_a < 1:
            raise ValidationError(f"Subsystem dimensions must be positive: {self}")

    @property
    def dim(self) -> int:
        """Return the total dimension dim_b * dim_a."""
        return self.dim_b * self.dim_a

    def check(self, m: NDArray[np.generic]) -> None:
        """Raise DimensionMismatch unless m is a square matrix of size dim."""
        if m.shape != (self.dim, self.dim):
            raise DimensionMismatch(
                f"Matrix of shape {m.shape} does not match label {self.dim_b}x{self.dim_a}"
            )


def _as_square(m: ArrayLike) -> ComplexMatrix:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionMismatch(f"Expected a non-empty square matrix, got shape {arr.shape}")
    return arr


def validate_hermitian(m: ArrayLike, tol: float = HERMITIAN_TOL) -> ComplexMatrix:
    """
    Validate that m is Hermitian and return its symmetrised copy.

    The deviation ||M - M^dagger|| is compared against tol after normalising by
    the largest absolute eigenvalue scale of M.

    Raises:
        DimensionMismatch: m is not square
        ValidationError: m is not Hermitian within tolerance
    """
    arr = _as_square(m)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("Matrix contains non-finite entries")
    scale = float(np.linalg.norm(arr, 2)) or 1.0
    deviation = float(np.max(np.abs(arr - arr.conj().T))) / scale
    if deviation > tol:
        raise ValidationError(f"Matrix is not Hermitian (relative deviation {deviation:.3e})")
    if deviation > 0:
        _LOGGER.debug("Symmetrising matrix with relative deviation %.3e", deviation)
    return (arr + arr.conj().T) / 2


def validate_density(rho: ArrayLike, tol: float = DENSITY_TOL) -> ComplexMatrix:
    """
    Validate a density matrix: Hermitian, unit trace and positive semidefinite.

    Returns:
        The symmetrised density matrix
    """
    arr = validate_hermitian(rho)
    trace = float(np.real(np.trace(arr)))
    if abs(trace - 1.0) > tol:
        raise ValidationError(f"Density matrix trace is {trace:.12g}, expected 1")
    min_eig = float(np.linalg.eigvalsh(arr)[0])
    if min_eig < -tol:
        raise ValidationError(f"Density matrix has negative eigenvalue {min_eig:.3e}")
    return arr


def eig_hermitian(m: ArrayLike) -> tuple[RealVector, ComplexMatrix]:
    """
    Eigendecomposition of a Hermitian matrix.

    Returns:
        Eigenvalues in non-increasing order and the unitary whose columns are
        the matching eigenvectors, so that M = U diag(w) U^dagger
    """
    arr = validate_hermitian(m)
    w, u = np.linalg.eigh(arr)
    return w[::-1].copy(), u[:, ::-1].copy()


def schatten_norm(m: ArrayLike, p: float) -> float:
    """
    Schatten p-norm of a Hermitian matrix for p in {1, 2, inf}.

    Raises:
        ValidationError: unsupported p or non-Hermitian input
    """
    w = np.linalg.eigvalsh(validate_hermitian(m))
    if p == 1:
        return float(np.sum(np.abs(w)))
    if p == 2:
        return float(np.sqrt(np.sum(w**2)))
    if p == np.inf:
        return float(np.max(np.abs(w)))
    raise ValidationError(f"Unsupported Schatten index {p}")


def _same_shape(rho: ArrayLike, sigma: ArrayLike) -> tuple[ComplexMatrix, ComplexMatrix]:
    a = _as_square(rho)
    b = _as_square(sigma)
    if a.shape != b.shape:
        raise DimensionMismatch(f"Shapes differ: {a.shape} vs {b.shape}")
    return a, b


def trace_distance(rho: ArrayLike, sigma: ArrayLike) -> float:
    """Return T(rho, sigma) = ||rho - sigma||_1 / 2."""
    a, b = _same_shape(rho, sigma)
    return 0.5 * schatten_norm(a - b, 1)


def operator_distance(rho: ArrayLike, sigma: ArrayLike) -> float:
    """Return the operator-norm distance ||rho - sigma||_inf."""
    a, b = _same_shape(rho, sigma)
    return schatten_norm(a - b, np.inf)


def partial_trace(m: ArrayLike, label: BipartiteLabel, subsystem: Subsystem) -> ComplexMatrix:
    """
    Trace out one factor of an operator on B (x) A.

    Args:
        m: Matrix of dimension label.dim
        label: Bipartite dimensions
        subsystem: Factor to trace out, "A" or "B"

    Returns:
        Operator on the remaining factor
    """
    arr = np.asarray(m, dtype=np.complex128)
    label.check(arr)
    t = arr.reshape(label.dim_b, label.dim_a, label.dim_b, label.dim_a)
    if subsystem == "A":
        return np.einsum("iaja->ij", t)
    if subsystem == "B":
        return np.einsum("aiaj->ij", t)
    raise ValidationError(f"Unknown subsystem {subsystem!r}")


def partial_trace_multi(
    m: ArrayLike, dims: tuple[int, ...], keep: tuple[int, ...]
) -> ComplexMatrix:
    """
    Partial trace over a multipartite product space.

    Args:
        m: Operator on the tensor product of spaces with the given dims
        dims: Dimension of every factor, in tensor order
        keep: Indices of the factors to keep, in increasing order

    Returns:
        Reduced operator on the kept factors
    """
    arr = np.asarray(m, dtype=np.complex128)
    total = int(np.prod(dims))
    if arr.shape != (total, total):
        raise DimensionMismatch(f"Matrix of shape {arr.shape} does not match dims {dims}")
    if list(keep) != sorted(set(keep)) or any(k < 0 or k >= len(dims) for k in keep):
        raise ValidationError(f"Invalid kept factors {keep} for {len(dims)} subsystems")

    n = len(dims)
    t = arr.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for k in range(n):
        if k not in keep:
            col[k] = row[k]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    result = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    return np.asarray(result).reshape(kept_dim, kept_dim)


def partial_transpose(m: ArrayLike, label: BipartiteLabel) -> ComplexMatrix:
    """Transpose the A factor of an operator on B (x) A."""
    arr = np.asarray(m, dtype=np.complex128)
    label.check(arr)
    t = arr.reshape(label.dim_b, label.dim_a, label.dim_b, label.dim_a)
    return t.transpose(0, 3, 2, 1).reshape(label.dim, label.dim)


def maximally_entangled(dim: int) -> ComplexMatrix:
    """Return |Omega><Omega| with |Omega> = sum_j |jj> / sqrt(dim)."""
    omega = np.eye(dim, dtype=np.complex128).reshape(dim * dim) / np.sqrt(dim)
    return np.outer(omega, omega.conj())


def random_densities(dim: int, count: int, rng: np.random.Generator) -> ComplexMatrix:
    """
    Draw Hilbert-Schmidt distributed density matrices.

    Each sample is G G^dagger / Tr(G G^dagger) with G a complex Ginibre matrix.

    Returns:
        Array of shape (count, dim, dim)
    """
    if dim < 1:
        raise ValidationError(f"Dimension must be positive, got {dim}")
    g = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))
    rho = g @ g.conj().transpose(0, 2, 1)
    traces = np.real(np.trace(rho, axis1=1, axis2=2))
    return rho / traces[:, None, None]


def random_density(dim: int, seed: int) -> ComplexMatrix:
    """Draw one Hilbert-Schmidt distributed density matrix, deterministic per seed."""
    rho = random_densities(dim, 1, np.random.default_rng(seed))[0]
    return (rho + rho.conj().T) / 2


def random_hermitian(dim: int, seed: int) -> ComplexMatrix:
    """Draw a random Hermitian matrix with Gaussian entries."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2
