"""
Entropies, classical distances and entropy continuity bounds.

All logarithms are base 2. The two-distance bounds take the total variation
(or trace) distance together with the local (or operator-norm) distance.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import xlogy

from .const import INTEGER_SNAP, PROBABILITY_CLAMP, PROBABILITY_TOL
from .exceptions import DimensionMismatch, DomainError, ValidationError
from .hermitian import validate_hermitian

_LOGGER = logging.getLogger(__name__)

_LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False, init=False)
class ProbabilityVector:
    """A finite probability distribution with read-only weights."""

    weights: NDArray[np.float64]

    def __init__(self, weights: ArrayLike) -> None:
        arr = np.array(weights, dtype=np.float64).reshape(-1)
        if arr.size < 1:
            raise ValidationError("Probability vector must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("Probability vector contains non-finite weights")
        if np.any(arr < -PROBABILITY_CLAMP):
            raise ValidationError(f"Negative probability weight {arr.min():.3e}")
        arr = np.clip(arr, 0.0, None)
        total = float(arr.sum())
        if abs(total - 1.0) > PROBABILITY_TOL:
            raise ValidationError(f"Probability weights sum to {total:.12g}, expected 1")
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)

    def __len__(self) -> int:
        return int(self.weights.size)


@dataclass(frozen=True)
class DistancePair:
    """Total variation (trace) distance and local (operator-norm) distance."""

    tv: float
    local: float

    def __post_init__(self) -> None:
        for name, value in (("tv", self.tv), ("local", self.local)):
            if not 0.0 <= value <= 1.0 + PROBABILITY_CLAMP:
                raise ValidationError(f"Distance {name}={value} outside [0, 1]")
        if self.local > self.tv + PROBABILITY_CLAMP:
            raise ValidationError(
                f"Local distance {self.local} exceeds total variation distance {self.tv}"
            )


@dataclass(frozen=True)
class RemainderDecomposition:
    """Split eps = d_plus * nu + mu used by the tight two-distance bound."""

    d_plus: int
    mu: float
    d_minus: int
    eps: float
    nu: float


def _log2(x: float) -> float:
    return math.log2(x) if x > 0 else 0.0


def shannon_entropy(p: ProbabilityVector) -> float:
    """Shannon entropy in bits with 0 log 0 = 0."""
    return float(-np.sum(xlogy(p.weights, p.weights)) / _LN2)


def _check_lengths(p: ProbabilityVector, q: ProbabilityVector) -> None:
    if len(p) != len(q):
        raise DimensionMismatch(f"Distribution lengths differ: {len(p)} vs {len(q)}")


def tv_distance(p: ProbabilityVector, q: ProbabilityVector) -> float:
    """Total variation distance, half the l1 distance."""
    _check_lengths(p, q)
    return float(0.5 * np.sum(np.abs(p.weights - q.weights)))


def local_distance(p: ProbabilityVector, q: ProbabilityVector) -> float:
    """Local distance, the largest pointwise difference."""
    _check_lengths(p, q)
    return float(np.max(np.abs(p.weights - q.weights)))


def distance_pair(p: ProbabilityVector, q: ProbabilityVector) -> DistancePair:
    """Return the (TV, LO) pair of two distributions."""
    tv = min(tv_distance(p, q), 1.0)
    return DistancePair(tv=tv, local=min(local_distance(p, q), tv))


def binary_entropy(eps: float) -> float:
    """
    Binary entropy h(eps) in bits.

    Raises:
        DomainError: eps outside [0, 1]
    """
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"Binary entropy argument {eps} outside [0, 1]")
    return float(-(xlogy(eps, eps) + xlogy(1.0 - eps, 1.0 - eps)) / _LN2)


def bosonic_g(eps: float) -> float:
    """
    Return g(eps) = (1 + eps) log(1 + eps) - eps log eps.

    Raises:
        DomainError: eps negative
    """
    if eps < 0.0:
        raise DomainError(f"g(eps) requires eps >= 0, got {eps}")
    return float((xlogy(1.0 + eps, 1.0 + eps) - xlogy(eps, eps)) / _LN2)


def von_neumann_entropy(rho: ArrayLike) -> float:
    """Von Neumann entropy in bits, eigenvalues clamped at zero."""
    w = np.clip(np.linalg.eigvalsh(validate_hermitian(rho)), 0.0, None)
    return float(-np.sum(xlogy(w, w)) / _LN2)


def von_neumann_entropies(stack: ArrayLike) -> NDArray[np.float64]:
    """Von Neumann entropies of a stack of Hermitian matrices of shape (n, d, d)."""
    arr = np.asarray(stack, dtype=np.complex128)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise DimensionMismatch(f"Expected a stack of square matrices, got shape {arr.shape}")
    herm = (arr + arr.conj().transpose(0, 2, 1)) / 2
    w = np.clip(np.linalg.eigvalsh(herm), 0.0, None)
    return -np.sum(xlogy(w, w), axis=1) / _LN2


def _snapped_ratio(eps: float, nu: float) -> float:
    ratio = eps / nu
    nearest = round(ratio)
    if abs(ratio - nearest) <= INTEGER_SNAP:
        return float(nearest)
    return ratio


def check_two_distance_feasible(d: int, pair: DistancePair) -> None:
    """
    Check that distributions on d points can realise the distance pair.

    Raises:
        DomainError: the pair is infeasible, with the d >= 2*ceil(eps/nu) diagnostic
    """
    eps, nu = pair.tv, pair.local
    if d < 2:
        raise DomainError(f"Alphabet size must be at least 2, got {d}")
    if eps == 0.0:
        return
    if nu <= 0.0:
        raise DomainError(f"Local distance must be positive when eps={eps} > 0")
    needed = 2 * math.ceil(_snapped_ratio(eps, nu))
    if d < needed:
        raise DomainError(
            f"Infeasible distances for d={d}: need d >= 2*ceil(eps/nu) = {needed} "
            f"(eps={eps}, nu={nu})",
            threshold=float(needed),
        )


def remainder_decomposition(d: int, pair: DistancePair) -> RemainderDecomposition:
    """
    Decompose eps = d_plus * nu + mu with 0 <= mu < nu.

    A ratio eps / nu within the snapping tolerance of an integer is treated as
    integral so that mu is exactly zero.
    """
    check_two_distance_feasible(d, pair)
    eps, nu = pair.tv, pair.local
    if eps == 0.0:
        return RemainderDecomposition(d_plus=0, mu=0.0, d_minus=d, eps=0.0, nu=nu)
    ratio = _snapped_ratio(eps, nu)
    d_plus = math.floor(ratio)
    mu = 0.0 if ratio == d_plus else max(eps - d_plus * nu, 0.0)
    return RemainderDecomposition(
        d_plus=d_plus, mu=mu, d_minus=d - math.ceil(ratio), eps=eps, nu=nu
    )


def bound_fd(d: int, pair: DistancePair) -> float:
    """
    Tight two-distance continuity bound f_d(eps, nu) for the Shannon entropy.

    Args:
        d: Alphabet size
        pair: Total variation and local distances

    Returns:
        h(eps) + d_plus nu log nu + mu log mu + eps log d_minus - eps log eps

    Raises:
        DomainError: infeasible (d, eps, nu)
    """
    dec = remainder_decomposition(d, pair)
    if dec.eps == 0.0:
        return 0.0
    eps, nu = dec.eps, dec.nu
    return (
        binary_entropy(eps)
        + dec.d_plus * nu * _log2(nu)
        + dec.mu * _log2(dec.mu)
        + eps * _log2(dec.d_minus)
        - eps * _log2(eps)
    )


def bound_sason(d: int, pair: DistancePair) -> float:
    """
    Two-distance bound eps log(beta d - 1) + h(eps) with beta = nu / eps.

    Raises:
        DomainError: beta * d <= 1
    """
    eps, nu = pair.tv, pair.local
    if eps == 0.0:
        return 0.0
    beta = nu / eps
    if beta * d <= 1.0:
        raise DomainError(f"Bound requires beta*d > 1, got {beta * d}")
    return eps * math.log2(beta * d - 1.0) + binary_entropy(eps)


def bound_csiszar(d: int, eps: float) -> float:
    """Single-distance bound eps log(d - 1) + h(eps)."""
    if d < 2:
        raise DomainError(f"Alphabet size must be at least 2, got {d}")
    return eps * math.log2(d - 1) + binary_entropy(eps)


def bound_afp(d: int, eps: float) -> float:
    """Quantum single-distance bound, same formula as bound_csiszar."""
    return bound_csiszar(d, eps)


def two_distance_term(tv: float, local: float, d: int) -> float:
    """
    Return tv log(beta d - 1) + h(tv) with beta = local / tv.

    Unlike bound_vn_two_distance this does not require local <= tv, so it also
    serves the stabilised-norm corrections where beta may exceed 1.

    Raises:
        DomainError: tv > local d / (local d + 3), carrying that threshold
    """
    if tv == 0.0:
        return 0.0
    threshold = local * d / (local * d + 3.0)
    if tv > threshold + PROBABILITY_CLAMP:
        raise DomainError(
            f"Hypothesis eps <= nu*d/(nu*d + 3) fails: eps={tv:.6g}, threshold={threshold:.6g}",
            threshold=threshold,
        )
    beta = local / tv
    if beta * d <= 1.0:
        raise DomainError(f"Bound requires beta*d > 1, got {beta * d}", threshold=threshold)
    return tv * math.log2(beta * d - 1.0) + binary_entropy(min(tv, 1.0))


def bound_vn_two_distance(d: int, pair: DistancePair) -> float:
    """
    Two-distance continuity bound for the von Neumann entropy.

    Valid for states on a d-dimensional space whose trace distance is at most
    pair.tv and operator-norm distance at most pair.local.

    Raises:
        DomainError: eps > nu d / (nu d + 3), carrying the threshold
    """
    return two_distance_term(pair.tv, pair.local, d)


def saturating_pair(d: int, pair: DistancePair) -> tuple[ProbabilityVector, ProbabilityVector]:
    """
    Construct distributions attaining bound_fd.

    Returns:
        (q, p) with TV(p, q) = eps, LO(p, q) = nu and H(p) - H(q) = f_d(eps, nu)
    """
    dec = remainder_decomposition(d, pair)
    if dec.eps == 0.0:
        e1 = np.zeros(d)
        e1[0] = 1.0
        return ProbabilityVector(e1), ProbabilityVector(e1)

    eps, nu = dec.eps, dec.nu
    q = np.zeros(d)
    p = np.zeros(d)
    q[: dec.d_plus] = nu / eps
    p[: dec.d_plus] = (1.0 - eps) * nu / eps
    head = dec.d_plus
    if dec.mu > 0.0:
        q[head] = dec.mu / eps
        p[head] = (1.0 - eps) * dec.mu / eps
        head += 1
    p[head:] = eps / dec.d_minus
    _LOGGER.debug("Saturating pair for d=%d eps=%s nu=%s: %s / %s", d, eps, nu, q, p)
    return ProbabilityVector(q), ProbabilityVector(p)


def majorizes(u: Sequence[float] | ArrayLike, v: Sequence[float] | ArrayLike) -> bool:
    """
    Return True iff u is majorized by v (u < v in the majorization order).

    The shorter vector is zero-padded.

    Raises:
        ValidationError: totals differ by more than the normalisation tolerance
    """
    a = np.asarray(u, dtype=np.float64).reshape(-1)
    b = np.asarray(v, dtype=np.float64).reshape(-1)
    if abs(a.sum() - b.sum()) > PROBABILITY_TOL:
        raise ValidationError(f"Totals differ: {a.sum():.12g} vs {b.sum():.12g}")
    n = max(a.size, b.size)
    a = np.pad(a, (0, n - a.size))
    b = np.pad(b, (0, n - b.size))
    prefix_a = np.cumsum(np.sort(a)[::-1])
    prefix_b = np.cumsum(np.sort(b)[::-1])
    return bool(np.all(prefix_b - prefix_a >= -PROBABILITY_CLAMP))
