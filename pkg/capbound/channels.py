"""
Quantum channels in the Choi representation.

A map A -> B is stored as its Choi matrix J = sum_ij Phi(|i><j|) (x) |i><j| on
B (x) A, output factor first, so Tr J = d_A for trace-preserving maps and
Tr_B J = 1_A. Composition, adjoints, Kraus operators and the minimal
complementary channel are all computed by index contractions on the
four-index view J[x, a, y, c] = <x| Phi(|a><c|) |y>.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import xlogy

from .const import CHANNEL_TOL, KRAUS_CUTOFF
from .entropy import von_neumann_entropies, von_neumann_entropy
from .exceptions import DimensionMismatch, DomainError, ValidationError
from .hermitian import (
    BipartiteLabel,
    ComplexMatrix,
    partial_trace,
    partial_trace_multi,
    validate_density,
    validate_hermitian,
)
from .search import SearchResult, maximize_over_qubit_states

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ChoiMap:
    """A Hermiticity-preserving linear map A -> B given by its Choi matrix on B (x) A."""

    dim_in: int
    dim_out: int
    choi: ComplexMatrix

    def __post_init__(self) -> None:
        if self.dim_in < 1 or self.dim_out < 1:
            raise ValidationError(f"Invalid map dimensions {self.dim_in} -> {self.dim_out}")
        choi = validate_hermitian(self.choi)
        self.label.check(choi)
        choi.setflags(write=False)
        object.__setattr__(self, "choi", choi)

    @property
    def label(self) -> BipartiteLabel:
        """Bipartite label of the Choi matrix, output factor first."""
        return BipartiteLabel(self.dim_out, self.dim_in)

    @property
    def tensor(self) -> NDArray[np.complex128]:
        """Four-index view J[x, a, y, c] = <x| Phi(|a><c|) |y>."""
        return self.choi.reshape(self.dim_out, self.dim_in, self.dim_out, self.dim_in)

    @cached_property
    def input_marginal(self) -> ComplexMatrix:
        """Tr_B J, equal to 1_A for trace-preserving maps."""
        return partial_trace(self.choi, self.label, "B")


@dataclass(frozen=True, eq=False)
class HermitianMapDiff(ChoiMap):
    """A Hermiticity-preserving map such as the difference of two channels."""

    @cached_property
    def is_traceless(self) -> bool:
        """True when Tr_B J vanishes, as for any difference of channels."""
        return bool(np.max(np.abs(self.input_marginal)) <= CHANNEL_TOL)

    def __neg__(self) -> HermitianMapDiff:
        return HermitianMapDiff(self.dim_in, self.dim_out, -self.choi)


@dataclass(frozen=True, eq=False)
class ChoiChannel(ChoiMap):
    """A linear map with complete positivity and trace preservation flags."""

    @cached_property
    def is_cp(self) -> bool:
        """True when the Choi matrix is positive semidefinite within tolerance."""
        return bool(np.linalg.eigvalsh(self.choi)[0] >= -CHANNEL_TOL)

    @cached_property
    def is_tp(self) -> bool:
        """True when Tr_B J = 1_A within tolerance."""
        eye = np.eye(self.dim_in)
        return bool(np.max(np.abs(self.input_marginal - eye)) <= CHANNEL_TOL)

    @property
    def is_cptp(self) -> bool:
        """True for quantum channels."""
        return self.is_cp and self.is_tp


@dataclass(frozen=True, eq=False)
class StinespringTriple:
    """Minimal Stinespring dilation V: A -> B (x) E with its Kraus operators."""

    isometry: ComplexMatrix
    dim_env: int
    kraus: tuple[ComplexMatrix, ...]


@dataclass(frozen=True, eq=False)
class TripartiteState:
    """A state on E (x) E~ (x) F with its factor dimensions."""

    omega: ComplexMatrix
    dim_env: int
    dim_env_tilde: int
    dim_f: int

    @property
    def dims(self) -> tuple[int, int, int]:
        """Factor dimensions in tensor order."""
        return (self.dim_env, self.dim_env_tilde, self.dim_f)

    def marginal(self, keep: tuple[int, ...]) -> ComplexMatrix:
        """Reduced state on the kept factors (0 = E, 1 = E~, 2 = F)."""
        return partial_trace_multi(self.omega, self.dims, keep)


def channel_apply(phi: ChoiMap, rho: ArrayLike) -> ComplexMatrix:
    """
    Apply a map to an operator: Phi(rho) = Tr_A(J (1_B (x) rho^T)).

    Raises:
        DimensionMismatch: rho is not dim_in x dim_in
    """
    arr = np.asarray(rho, dtype=np.complex128)
    if arr.shape != (phi.dim_in, phi.dim_in):
        raise DimensionMismatch(f"Input of shape {arr.shape} for map with dim_in={phi.dim_in}")
    return np.einsum("xayc,ac->xy", phi.tensor, arr)


def apply_batch(phi: ChoiMap, rhos: ArrayLike) -> NDArray[np.complex128]:
    """Apply a map to a stack of operators of shape (n, dim_in, dim_in)."""
    arr = np.asarray(rhos, dtype=np.complex128)
    if arr.ndim != 3 or arr.shape[1:] != (phi.dim_in, phi.dim_in):
        raise DimensionMismatch(f"Input stack of shape {arr.shape} for dim_in={phi.dim_in}")
    return np.einsum("xayc,nac->nxy", phi.tensor, arr)


def link_product(outer: NDArray[np.complex128], inner: NDArray[np.complex128]) -> ComplexMatrix:
    """
    Choi matrix of outer o inner from their four-index views.

    Args:
        outer: J[e, b, f, d] of a map B -> E
        inner: J[b, a, d, c] of a map A -> B

    Returns:
        Choi matrix of the composition on E (x) A
    """
    t = np.einsum("ebfd,badc->eafc", outer, inner)
    n = outer.shape[0] * inner.shape[1]
    return t.reshape(n, n)


def channel_compose(lam: ChoiChannel, phi: ChoiChannel) -> ChoiChannel:
    """
    Choi matrix of Lambda o Phi for Phi: A -> B and Lambda: B -> E.

    Raises:
        DimensionMismatch: dim_out of phi differs from dim_in of lam
    """
    if lam.dim_in != phi.dim_out:
        raise DimensionMismatch(
            f"Cannot compose a {lam.dim_in}-input map after a {phi.dim_out}-output map"
        )
    return ChoiChannel(phi.dim_in, lam.dim_out, link_product(lam.tensor, phi.tensor))


def channel_adjoint(phi: ChoiChannel) -> ChoiChannel:
    """Adjoint map B -> A defined by Tr(Y Phi(X)) = Tr(Phi*(Y) X)."""
    n = phi.dim_in * phi.dim_out
    choi = phi.tensor.transpose(3, 2, 1, 0).reshape(n, n)
    return ChoiChannel(phi.dim_out, phi.dim_in, choi)


def channel_difference(phi1: ChoiMap, phi2: ChoiMap) -> HermitianMapDiff:
    """Return the Hermiticity-preserving map Phi1 - Phi2."""
    if (phi1.dim_in, phi1.dim_out) != (phi2.dim_in, phi2.dim_out):
        raise DimensionMismatch(
            f"Maps differ in shape: {phi1.dim_in}->{phi1.dim_out} "
            f"vs {phi2.dim_in}->{phi2.dim_out}"
        )
    return HermitianMapDiff(phi1.dim_in, phi1.dim_out, phi1.choi - phi2.choi)


def snap_to_channel(phi: ChoiMap) -> ChoiChannel:
    """
    Move a numerically CPTP Choi matrix onto the channel set.

    Tr_B J is first corrected to 1_A by subtracting 1_B (x) (Tr_B J - 1_A) / d_B,
    then the result is mixed with the completely depolarizing channel just
    enough to clear negative eigenvalues. Both steps keep trace preservation.
    """
    d_b = phi.dim_out
    excess = phi.input_marginal - np.eye(phi.dim_in)
    choi = phi.choi - np.kron(np.eye(d_b), excess) / d_b
    lowest = float(np.linalg.eigvalsh((choi + choi.conj().T) / 2)[0])
    if lowest < 0:
        weight = -lowest * d_b / (1.0 - lowest * d_b)
        choi = (1.0 - weight) * choi + weight * np.eye(choi.shape[0]) / d_b
        _LOGGER.debug("Snapped Choi matrix with mixing weight %.3e", weight)
    return ChoiChannel(phi.dim_in, d_b, choi)


def channel_from_kraus(kraus: Sequence[ArrayLike]) -> ChoiChannel:
    """Build the channel rho -> sum_k K_k rho K_k^dagger."""
    ops = [np.asarray(k, dtype=np.complex128) for k in kraus]
    if not ops:
        raise ValidationError("At least one Kraus operator is required")
    dim_out, dim_in = ops[0].shape
    if any(k.shape != (dim_out, dim_in) for k in ops):
        raise DimensionMismatch("Kraus operators must share one shape")
    vecs = np.stack([k.reshape(-1) for k in ops])
    return ChoiChannel(dim_in, dim_out, vecs.T @ vecs.conj())


def _normalize_phase(v: NDArray[np.complex128]) -> NDArray[np.complex128]:
    nonzero = np.flatnonzero(np.abs(v) > KRAUS_CUTOFF)
    if nonzero.size == 0:
        return v
    first = v[nonzero[0]]
    return v * (np.abs(first) / first)


def kraus_and_complementary(phi: ChoiChannel) -> tuple[StinespringTriple, ChoiChannel]:
    """
    Minimal Kraus decomposition, Stinespring isometry and complementary channel.

    Kraus operators come from Choi eigenvectors with eigenvalue above
    KRAUS_CUTOFF * Tr J, sorted by decreasing eigenvalue, each eigenvector
    phase-fixed so that its first nonzero component is real and positive.
    The isometry orders its output as B (x) E.

    Returns:
        (StinespringTriple, complementary channel A -> E)

    Raises:
        ValidationError: phi is not CPTP
    """
    if not phi.is_cptp:
        raise ValidationError("Complementary channel requires a CPTP map")

    w, u = np.linalg.eigh(phi.choi)
    cutoff = KRAUS_CUTOFF * float(np.real(np.trace(phi.choi)))
    keep = np.flatnonzero(w > cutoff)[::-1]
    kraus = np.stack(
        [
            np.sqrt(w[i]) * _normalize_phase(u[:, i]).reshape(phi.dim_out, phi.dim_in)
            for i in keep
        ]
    )
    dim_env = int(kraus.shape[0])

    isometry = kraus.transpose(1, 0, 2).reshape(phi.dim_out * dim_env, phi.dim_in)
    comp = np.einsum("kba,lbc->kalc", kraus, kraus.conj())
    n = dim_env * phi.dim_in
    complementary = ChoiChannel(phi.dim_in, dim_env, comp.reshape(n, n))

    _LOGGER.debug(
        "Minimal dilation: d_E=%d, kept eigenvalues %s", dim_env, np.round(w[keep], 12)
    )
    triple = StinespringTriple(isometry=isometry, dim_env=dim_env, kraus=tuple(kraus))
    return triple, complementary


def identity_channel(dim: int) -> ChoiChannel:
    """The identity channel on a dim-dimensional system."""
    return channel_from_kraus([np.eye(dim)])


def unitary_channel(unitary: ArrayLike) -> ChoiChannel:
    """The channel rho -> U rho U^dagger."""
    return channel_from_kraus([unitary])


def trace_map(dim: int) -> ChoiChannel:
    """The trace functional, a channel onto a one-dimensional output."""
    return ChoiChannel(dim, 1, np.eye(dim, dtype=np.complex128))


def completely_depolarizing(dim: int) -> ChoiChannel:
    """The channel rho -> Tr(rho) 1 / dim."""
    return ChoiChannel(dim, dim, np.eye(dim * dim, dtype=np.complex128) / dim)


def depolarizing(p: float) -> ChoiChannel:
    """
    Qubit depolarizing channel (1 - p) rho + (p / 3)(X rho X + Y rho Y + Z rho Z).

    Raises:
        DomainError: p outside [0, 1]
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Depolarizing parameter {p} outside [0, 1]")
    paulis = [
        np.array([[0, 1], [1, 0]], dtype=np.complex128),
        np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
        np.array([[1, 0], [0, -1]], dtype=np.complex128),
    ]
    kraus = [np.sqrt(1.0 - p) * np.eye(2)] + [np.sqrt(p / 3.0) * s for s in paulis]
    return channel_from_kraus(kraus)


def amplitude_damping(gamma: float) -> ChoiChannel:
    """
    Qubit amplitude damping channel with decay probability gamma.

    Raises:
        DomainError: gamma outside [0, 1]
    """
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"Damping parameter {gamma} outside [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]])
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]])
    return channel_from_kraus([k0, k1])


def random_channel(dim_in: int, dim_out: int, rank: int, seed: int) -> ChoiChannel:
    """
    Random channel from the QR isometry of a complex Ginibre matrix.

    The isometry maps A into B (x) E with d_E = rank.
    """
    if min(dim_in, dim_out, rank) < 1 or dim_out * rank < dim_in:
        raise ValidationError(
            f"Cannot embed dimension {dim_in} into {dim_out}x{rank} isometrically"
        )
    rng = np.random.default_rng(seed)
    shape = (dim_out * rank, dim_in)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    q, _ = np.linalg.qr(g)
    kraus = q.reshape(dim_out, rank, dim_in).transpose(1, 0, 2)
    return channel_from_kraus(list(kraus))


def dephasing(dim: int) -> ChoiChannel:
    """Completely dephasing channel in the computational basis."""
    projectors = []
    for x in range(dim):
        proj = np.zeros((dim, dim))
        proj[x, x] = 1.0
        projectors.append(proj)
    return channel_from_kraus(projectors)


def coherent_info_depolarizing(p: float) -> float:
    """
    Closed-form coherent information 1 + (1 - p) log(1 - p) + p log(p / 3).

    Raises:
        DomainError: p outside [0, 1]
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Depolarizing parameter {p} outside [0, 1]")
    return float(1.0 + (xlogy(1.0 - p, 1.0 - p) + xlogy(p, p / 3.0)) / np.log(2.0))


def _require_qubit_input(phi: ChoiMap) -> None:
    if phi.dim_in != 2:
        raise ValidationError(f"State search supports qubit inputs only, got dim_in={phi.dim_in}")


def coherent_info_search(phi: ChoiChannel) -> SearchResult:
    """Maximise S(Phi(rho)) - S(Phi^c(rho)) over qubit inputs and return the optimiser."""
    _require_qubit_input(phi)
    _, comp = kraus_and_complementary(phi)

    def objective(rhos: NDArray[np.complex128]) -> NDArray[np.float64]:
        return von_neumann_entropies(apply_batch(phi, rhos)) - von_neumann_entropies(
            apply_batch(comp, rhos)
        )

    return maximize_over_qubit_states(objective)


def coherent_info_numeric(phi: ChoiChannel) -> float:
    """
    Single-letter coherent information of a qubit-input channel.

    The value is the maximum of the objective, which may be negative.

    Raises:
        ValidationError: input dimension other than 2, or a non-CPTP map
    """
    return coherent_info_search(phi).value


def s_phi_lambda_search(phi: ChoiChannel, lam: ChoiChannel) -> SearchResult:
    """Maximise S(Phi(rho)) - S(Lambda o Phi(rho)) over qubit inputs."""
    _require_qubit_input(phi)
    if not (phi.is_cptp and lam.is_cptp):
        raise ValidationError("S(Phi, Lambda) needs a channel and a CPTP degrading map")
    composed = channel_compose(lam, phi)

    def objective(rhos: NDArray[np.complex128]) -> NDArray[np.float64]:
        return von_neumann_entropies(apply_batch(phi, rhos)) - von_neumann_entropies(
            apply_batch(composed, rhos)
        )

    return maximize_over_qubit_states(objective)


def s_phi_lambda(phi: ChoiChannel, lam: ChoiChannel) -> float:
    """
    Maximal conditional entropy S(F|E~) over inputs for a channel and degrading map.

    Uses S(F|E~) = S(Phi(rho)) - S(Lambda o Phi(rho)); the tripartite state is
    built only by tripartite_state for cross-checks.

    Raises:
        DimensionMismatch: lam does not act on the output of phi
        ValidationError: input dimension other than 2, or phi or lam not CPTP
    """
    return s_phi_lambda_search(phi, lam).value


def tripartite_state(phi: ChoiChannel, lam: ChoiChannel, rho: ArrayLike) -> TripartiteState:
    """
    Build omega on E (x) E~ (x) F from the dilations of Phi and Lambda.

    E is the environment of Phi, E~ the output of Lambda and F its environment.
    """
    if lam.dim_in != phi.dim_out:
        raise DimensionMismatch("Degrading map must act on the channel output")
    rho = validate_density(rho)
    phi_dil, _ = kraus_and_complementary(phi)
    lam_dil, _ = kraus_and_complementary(lam)
    d_b, d_e = phi.dim_out, phi_dil.dim_env
    d_et, d_f = lam.dim_out, lam_dil.dim_env

    v = phi_dil.isometry
    m4 = (v @ rho @ v.conj().T).reshape(d_b, d_e, d_b, d_e)
    w = lam_dil.isometry
    t = np.einsum("xb,beyc,zy->xezc", w, m4, w.conj())
    t = t.reshape(d_et, d_f, d_e, d_et, d_f, d_e).transpose(2, 0, 1, 5, 3, 4)
    n = d_e * d_et * d_f
    return TripartiteState(
        omega=t.reshape(n, n), dim_env=d_e, dim_env_tilde=d_et, dim_f=d_f
    )


def conditional_entropy(state: TripartiteState) -> float:
    """Return S(F|E~) = S(E~ F) - S(E~) of a tripartite state."""
    return von_neumann_entropy(state.marginal((1, 2))) - von_neumann_entropy(state.marginal((1,)))
