"""
Capacity upper bounds for approximately degradable channels.

Corrections combine the two-distance entropy bound (through eps_1 and nu) with
the diamond-norm distance eps_diamond. Final curves are lower convex envelopes
of the corrected coherent information and the classical comparison curves.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .channels import ChoiChannel
from .const import EPS1_RULE_MAX, MAX_P_THETA, NORM_CLAMP, PROBABILITY_CLAMP
from .entropy import binary_entropy, bosonic_g, two_distance_term
from .exceptions import DimensionMismatch, DomainError, ValidationError
from .norms import NormBundle

_LOGGER = logging.getLogger(__name__)


def _clamp(value: float) -> float:
    return 0.0 if value < NORM_CLAMP else float(value)


@dataclass(frozen=True, eq=False)
class DegradabilityCertificate:
    """Norm parameters certifying approximate degradability of a channel."""

    eps_diamond: float
    eps1: float
    nu: float
    d_env: int
    degrading: ChoiChannel | None = None

    def __post_init__(self) -> None:
        if self.d_env < 1:
            raise ValidationError(f"Environment dimension must be positive, got {self.d_env}")
        for name in ("eps_diamond", "eps1", "nu"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < -NORM_CLAMP:
                raise ValidationError(f"Certificate {name}={value} must be finite and >= 0")
            object.__setattr__(self, name, _clamp(value))

    @classmethod
    def from_bundle(
        cls,
        bundle: NormBundle,
        d_env: int,
        degrading: ChoiChannel | None = None,
        eps1_rule: str = EPS1_RULE_MAX,
    ) -> DegradabilityCertificate:
        """Build a certificate from the norms of Phi^c - Lambda o Phi."""
        return cls(
            eps_diamond=bundle.diamond,
            eps1=bundle.eps1_by_rule(eps1_rule),
            nu=bundle.nu,
            d_env=d_env,
            degrading=degrading,
        )

    @property
    def beta(self) -> float:
        """Ratio 2 nu / eps_1, zero for an exactly degradable channel."""
        return 2.0 * self.nu / self.eps1 if self.eps1 > 0 else 0.0

    @property
    def threshold(self) -> float:
        """Largest eps_1 allowed by the hypothesis, 2 nu d_E / (nu d_E + 3)."""
        nd = self.nu * self.d_env
        return 2.0 * nd / (nd + 3.0)

    @property
    def hypothesis_ok(self) -> bool:
        """True when eps_1 <= 2 nu d_E / (nu d_E + 3)."""
        return self.eps1 <= self.threshold + PROBABILITY_CLAMP

    def as_dict(self) -> dict[str, Any]:
        """Plain mapping for JSON reports."""
        return {
            "eps_diamond": self.eps_diamond,
            "eps1": self.eps1,
            "nu": self.nu,
            "beta": self.beta,
            "d_env": self.d_env,
            "threshold": self.threshold,
            "hypothesis_ok": self.hypothesis_ok,
        }


def _require_hypothesis(cert: DegradabilityCertificate) -> None:
    if not cert.hypothesis_ok:
        raise DomainError(
            f"eps_1={cert.eps1:.6g} exceeds 2 nu d_E/(nu d_E + 3)={cert.threshold:.6g}",
            threshold=cert.threshold,
        )


def _diamond_terms(eps: float, d_env: int, weight: float) -> float:
    return weight * (eps * math.log2(d_env) + bosonic_g(eps / 2.0))


def cohinfo_gap_bound(cert: DegradabilityCertificate) -> float:
    """
    Continuity term (eps_1 / 2) log(beta d_E - 1) + h(eps_1 / 2).

    Bounds the distance between the coherent information and S(Phi, Lambda).

    Raises:
        DomainError: hypothesis violated
    """
    _require_hypothesis(cert)
    return two_distance_term(cert.eps1 / 2.0, cert.nu, cert.d_env)


def corr_quantum(cert: DegradabilityCertificate) -> float:
    """
    Additive correction to the coherent information bounding the quantum capacity.

    Returns:
        (eps_1/2) log(beta d_E - 1) + h(eps_1/2) + eps_d log d_E + g(eps_d/2)

    Raises:
        DomainError: eps_1 > 2 nu d_E / (nu d_E + 3), carrying the threshold
    """
    if cert.eps1 == 0.0 and cert.eps_diamond == 0.0:
        return 0.0
    return cohinfo_gap_bound(cert) + _diamond_terms(cert.eps_diamond, cert.d_env, 1.0)


def corr_private(cert: DegradabilityCertificate) -> float:
    """
    Additive correction to the private information bounding the private capacity.

    Returns:
        (eps_1/2) log(beta d_E - 1) + h(eps_1/2) + 3 eps_d log d_E + 3 g(eps_d/2)

    Raises:
        DomainError: hypothesis violated
    """
    if cert.eps1 == 0.0 and cert.eps_diamond == 0.0:
        return 0.0
    return cohinfo_gap_bound(cert) + _diamond_terms(cert.eps_diamond, cert.d_env, 3.0)


def _cbnorm_term(eps: float, nu: float, d_env: int) -> float:
    if eps < 0 or nu < 0:
        raise ValidationError("Norm parameters must be nonnegative")
    if eps == 0.0:
        return 0.0
    try:
        return two_distance_term(eps / 2.0, nu, d_env)
    except DomainError as err:
        nd = nu * d_env
        raise DomainError(str(err), threshold=2.0 * nd / (nd + 3.0)) from err


def corr_quantum_cbnorm(eps: float, nu: float, d_env: int) -> float:
    """
    Quantum-capacity correction for (eps, nu)-degradable channels in diamond and cb norm.

    Returns:
        (eps/2) log(beta d_E - 1) + h(eps/2) + eps log d_E + g(eps/2), beta = 2 nu / eps

    Raises:
        DomainError: eps > 2 nu d_E / (nu d_E + 3)
    """
    if eps == 0.0:
        return 0.0
    return _cbnorm_term(eps, nu, d_env) + _diamond_terms(eps, d_env, 1.0)


def corr_private_cbnorm(eps: float, nu: float, d_env: int) -> float:
    """Private-capacity correction in diamond and cb norm, with tripled diamond terms."""
    if eps == 0.0:
        return 0.0
    return _cbnorm_term(eps, nu, d_env) + _diamond_terms(eps, d_env, 3.0)


def _afp_term(eps: float, d_env: int) -> float:
    half = eps / 2.0
    log_term = half * math.log2(d_env - 1) if d_env > 1 else 0.0
    return log_term + binary_entropy(half)


def corr_sutter(eps: float, d_env: int) -> float:
    """
    Single-distance correction (eps/2) log(d_E - 1) + h(eps/2) + eps log d_E + g(eps/2).

    Raises:
        DomainError: eps outside [0, 2]
    """
    if eps == 0.0:
        return 0.0
    return _afp_term(eps, d_env) + _diamond_terms(eps, d_env, 1.0)


def corr_private_sutter(eps: float, d_env: int) -> float:
    """Single-distance private-capacity correction with tripled diamond terms."""
    if eps == 0.0:
        return 0.0
    return _afp_term(eps, d_env) + _diamond_terms(eps, d_env, 3.0)


def quantum_capacity_bound(q1: float, cert: DegradabilityCertificate) -> float:
    """Upper bound Q^(1) + corr_quantum on the quantum capacity."""
    return q1 + corr_quantum(cert)


def private_capacity_bound(p1: float, cert: DegradabilityCertificate) -> float:
    """Upper bound P^(1) + corr_private on the private capacity, P^(1) supplied by the caller."""
    return p1 + corr_private(cert)


def s_phi_lambda_bound(s: float, eps: float, d_env: int) -> float:
    """Conditional-entropy bound S(Phi, Lambda) + eps log d_E + g(eps/2)."""
    return s + _diamond_terms(eps, d_env, 1.0)


def theta_gamma(p: float) -> tuple[float, float]:
    """
    Return (theta(p), gamma(p)) for the depolarizing comparison curve.

    gamma(p) = 4 (sqrt(1 - p) - 1 + p) and
    theta(p) = h((1 + gamma) / 2) - h(gamma / 2).

    Raises:
        DomainError: p outside [0, 1/4]
    """
    if not 0.0 <= p <= MAX_P_THETA:
        raise DomainError(f"theta(p) is defined for p in [0, 1/4], got {p}")
    gamma = 4.0 * (math.sqrt(1.0 - p) - 1.0 + p)
    theta = binary_entropy((1.0 + gamma) / 2.0) - binary_entropy(gamma / 2.0)
    return theta, gamma


def comparison_curves(grid: ArrayLike) -> dict[str, NDArray[np.float64]]:
    """Sample 1 - h(p), theta(p) and 1 - 4p on a grid inside [0, 1/4]."""
    p = np.asarray(grid, dtype=np.float64)
    return {
        "one_minus_h": np.array([1.0 - binary_entropy(x) for x in p]),
        "theta": np.array([theta_gamma(x)[0] for x in p]),
        "one_minus_4p": 1.0 - 4.0 * p,
    }


def _check_grid(grid: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(grid, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValidationError("Grid must be a non-empty one-dimensional array")
    if not np.all(np.isfinite(x)):
        raise ValidationError("Grid contains non-finite points")
    if x.size > 1 and np.any(np.diff(x) <= 0):
        raise ValidationError("Grid must be strictly increasing")
    return x


def _cross(o: tuple[float, float], a: tuple[float, float], b: tuple[float, float]) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(x: ArrayLike, y: ArrayLike) -> list[tuple[float, float]]:
    """Lower convex hull vertices of points sorted by x (monotone chain)."""
    hull: list[tuple[float, float]] = []
    for point in zip(np.asarray(x, dtype=float), np.asarray(y, dtype=float), strict=True):
        pt = (float(point[0]), float(point[1]))
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0:
            hull.pop()
        hull.append(pt)
    return hull


def convex_envelope(
    grid: ArrayLike, curves: Sequence[ArrayLike] | Mapping[str, ArrayLike]
) -> NDArray[np.float64]:
    """
    Lower convex envelope of the pointwise minimum of sampled curves.

    A value of +inf marks a point where a curve is unavailable; that curve is
    ignored there.

    Args:
        grid: Strictly increasing sample points shared by all curves
        curves: Sampled functions on the grid

    Returns:
        Envelope sampled on the grid

    Raises:
        DimensionMismatch: a curve does not match the grid
        ValidationError: NaN or -inf values, or a point where no curve is finite
    """
    x = _check_grid(grid)
    values = list(curves.values()) if isinstance(curves, Mapping) else list(curves)
    if not values:
        raise ValidationError("At least one curve is required")
    stacked = np.vstack([np.asarray(c, dtype=np.float64).reshape(-1) for c in values])
    if stacked.shape[1] != x.size:
        raise DimensionMismatch(f"Curves of length {stacked.shape[1]} on a grid of {x.size}")
    if np.any(np.isnan(stacked)) or np.any(stacked == -np.inf):
        raise ValidationError("Curves must not contain NaN or -inf")

    lowest = stacked.min(axis=0)
    if not np.all(np.isfinite(lowest)):
        raise ValidationError("Every grid point needs at least one finite curve value")
    hull = lower_hull(x, lowest)
    hx, hy = zip(*hull, strict=True)
    return np.interp(x, np.array(hx), np.array(hy))


def envelope_resolution(grid: ArrayLike, values: ArrayLike) -> float:
    """
    Sampling error estimate L h / 2 of a convex envelope.

    L is the largest slope between neighbouring samples and h the largest grid
    spacing.
    """
    x = _check_grid(grid)
    y = np.asarray(values, dtype=np.float64)
    if y.shape != x.shape:
        raise DimensionMismatch("Values must match the grid")
    if x.size < 2:
        return 0.0
    slopes = np.abs(np.diff(y) / np.diff(x))
    return float(np.max(slopes) * np.max(np.diff(x)) / 2.0)


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Per-parameter record of the norms, corrections and assembled bounds."""

    p: float
    q1: float
    certificate: DegradabilityCertificate | None = None
    norms: NormBundle | None = None
    s_phi_lambda: float | None = None
    corr_quantum: float | None = None
    corr_private: float | None = None
    corr_sutter: float | None = None
    nu_cb: float | None = None
    corr_quantum_cbnorm: float | None = None
    bound_new: float = math.nan
    bound_sutter: float = math.nan
    error: str | None = None

    @property
    def q1_floor(self) -> float:
        """Coherent-information lower bound on the capacity, floored at zero."""
        return max(self.q1, 0.0)

    @property
    def raw_new(self) -> float:
        """Q^(1) + corr_quantum, or +inf when the correction is unavailable."""
        return self.q1 + self.corr_quantum if self.corr_quantum is not None else math.inf

    @property
    def raw_sutter(self) -> float:
        """Q^(1) + corr_sutter, or +inf when unavailable."""
        return self.q1 + self.corr_sutter if self.corr_sutter is not None else math.inf

    def _cert_value(self, name: str) -> float:
        if self.certificate is None:
            return math.nan
        return float(getattr(self.certificate, name))

    @property
    def eps_diamond(self) -> float:
        """Diamond-norm parameter."""
        return self._cert_value("eps_diamond")

    @property
    def eps1(self) -> float:
        """Unstabilised trace-norm parameter."""
        return self._cert_value("eps1")

    @property
    def nu(self) -> float:
        """Unstabilised infinity-norm parameter."""
        return self._cert_value("nu")

    @property
    def beta(self) -> float:
        """Ratio 2 nu / eps_1."""
        return self._cert_value("beta")

    @property
    def hypothesis_ok(self) -> bool:
        """Whether the correction hypothesis holds at this point."""
        return self.certificate is not None and self.certificate.hypothesis_ok
