"""
Semidefinite programs for channel norms and degradability parameters.

Every quantity has a *_program builder returning the SdpProblem (for
inspection and JSON dumps) and a solver wrapper returning the certified value:
the primal value of minimisation programs and the dual value of maximisation
programs, so that each reported number bounds the exact quantity from above.

Choi matrices live on output (x) input, see capbound.channels.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize

from .channels import (
    ChoiChannel,
    ChoiMap,
    HermitianMapDiff,
    apply_batch,
    channel_adjoint,
    kraus_and_complementary,
    link_product,
    snap_to_channel,
)
from .const import (
    DEFAULT_SEED,
    EPS1_RULE_MAX,
    EPS1_RULE_MIN,
    EPS1_RULES,
    NORM_CLAMP,
    SAMPLING_REFINEMENTS,
    SAMPLING_STATES,
    SEARCH_MAX_ITERATIONS,
)
from .exceptions import ValidationError
from .hermitian import (
    BipartiteLabel,
    partial_trace,
    partial_transpose,
    random_densities,
)
from .sdp import SdpBuilder, SdpProblem, SdpSolution, Sense, SolverSettings, solve
from .search import density_to_bloch, pauli_eigenstates, refine_bloch

_LOGGER = logging.getLogger(__name__)

Matrix = NDArray[Any]


def _identity(x: Matrix) -> Matrix:
    return x


def _negate(x: Matrix) -> Matrix:
    return -x


def _scalar_times_eye(dim: int, scale: float = 1.0) -> Callable[[Matrix], Matrix]:
    def term(v: Matrix) -> Matrix:
        return scale * v[0] * np.eye(dim)

    return term


def _check_sign(sign: int) -> None:
    if sign not in (1, -1):
        raise ValidationError(f"Sign must be +1 or -1, got {sign}")


def _solve_checked(
    problem: SdpProblem, settings: SolverSettings | None, what: str
) -> SdpSolution:
    return solve(problem, settings).require_success(what)


def _hermitian_block(solution: SdpSolution, problem: SdpProblem, name: str) -> Matrix:
    x = solution.primal_point[problem.block_index(name)]
    return (x + x.conj().T) / 2


# Diamond norm


def diamond_norm_program(delta: ChoiMap) -> SdpProblem:
    """
    Watrous program 2 min ||Tr_out Z||_inf subject to Z >= J, Z >= 0.

    Blocks: Z and S = Z - J on out (x) in, W = lambda 1 - Tr_out Z on in, lambda >= 0.
    """
    label = delta.label
    n, d_in = label.dim, delta.dim_in
    builder = SdpBuilder(Sense.MINIMIZE, "diamond")
    z = builder.add_psd(n, "Z")
    s = builder.add_psd(n, "S")
    w = builder.add_psd(d_in, "W")
    lam = builder.add_nonneg(1, "lambda")
    builder.set_objective(lam, [2.0])
    builder.add_equality({s: _identity, z: _negate}, -delta.choi)
    builder.add_equality(
        {
            w: _identity,
            z: lambda x: partial_trace(x, label, "B"),
            lam: _scalar_times_eye(d_in, -1.0),
        },
        np.zeros((d_in, d_in)),
    )
    return builder.build()


def diamond_norm(delta: ChoiMap, settings: SolverSettings | None = None) -> float:
    """
    Diamond norm of a difference of channels.

    The program is exact for trace-annihilating maps (Tr_out J = 0).

    Raises:
        SolverFailure: the program could not be solved
    """
    solution = _solve_checked(diamond_norm_program(delta), settings, "diamond norm")
    return solution.upper_bound


# Degradability parameters


@dataclass(frozen=True, eq=False)
class EpsResult:
    """Optimal diamond-norm degradability parameter and its degrading channel."""

    value: float
    degrading: ChoiChannel
    solution: SdpSolution


@dataclass(frozen=True, eq=False)
class NuResult:
    """Optimal cb-norm degradability parameter and the unital witness Theta."""

    value: float
    theta: ChoiChannel
    solution: SdpSolution

    @property
    def degrading(self) -> ChoiChannel:
        """The degrading channel Lambda = Theta*."""
        return channel_adjoint(self.theta)


def eps_phi_program(phi: ChoiChannel, complementary: ChoiChannel | None = None) -> SdpProblem:
    """
    Joint program over (Z, Lambda) minimising ||Phi^c - Lambda o Phi||_diamond.

    Z and S live on E (x) A, J(Lambda) on E (x) B with Tr_E J(Lambda) = 1_B.
    """
    if complementary is None:
        _, complementary = kraus_and_complementary(phi)
    d_a, d_b, d_e = phi.dim_in, phi.dim_out, complementary.dim_out
    n = d_e * d_a
    z_label = BipartiteLabel(d_e, d_a)
    lam_label = BipartiteLabel(d_e, d_b)

    def composed(x: Matrix) -> Matrix:
        return link_product(x.reshape(d_e, d_b, d_e, d_b), phi.tensor)

    builder = SdpBuilder(Sense.MINIMIZE, "eps_phi")
    z = builder.add_psd(n, "Z")
    s = builder.add_psd(n, "S")
    j_lam = builder.add_psd(d_e * d_b, "J_Lambda")
    w = builder.add_psd(d_a, "W")
    lam = builder.add_nonneg(1, "lambda")
    builder.set_objective(lam, [2.0])
    # S = Z - J(Phi^c) + J(Lambda o Phi)
    builder.add_equality(
        {s: _identity, z: _negate, j_lam: lambda x: -composed(x)}, -complementary.choi
    )
    builder.add_equality(
        {
            w: _identity,
            z: lambda x: partial_trace(x, z_label, "B"),
            lam: _scalar_times_eye(d_a, -1.0),
        },
        np.zeros((d_a, d_a)),
    )
    builder.add_equality({j_lam: lambda x: partial_trace(x, lam_label, "B")}, np.eye(d_b))
    return builder.build()


def eps_phi(
    phi: ChoiChannel,
    settings: SolverSettings | None = None,
    complementary: ChoiChannel | None = None,
) -> EpsResult:
    """
    Minimal diamond distance between Phi^c and Lambda o Phi over channels Lambda.

    Raises:
        SolverFailure: the program could not be solved
    """
    if complementary is None:
        _, complementary = kraus_and_complementary(phi)
    problem = eps_phi_program(phi, complementary)
    solution = _solve_checked(problem, settings, "eps_phi")
    j_lam = _hermitian_block(solution, problem, "J_Lambda")
    degrading = snap_to_channel(ChoiChannel(phi.dim_out, complementary.dim_out, j_lam))
    _LOGGER.debug("eps_phi=%.12g (gap %.3e)", solution.upper_bound, solution.gap)
    return EpsResult(value=solution.upper_bound, degrading=degrading, solution=solution)


def nu_phi_program(phi: ChoiChannel, complementary: ChoiChannel | None = None) -> SdpProblem:
    """
    Program for the cb-norm parameter posed on adjoint maps.

    With Theta = Lambda* unital and completely positive, minimises
    2 ||Tr_A Z||_inf subject to Z >= J((Phi^c)* - Phi* o Theta), Z >= 0, where
    Z lives on A (x) E and J(Theta) on B (x) E.
    """
    if complementary is None:
        _, complementary = kraus_and_complementary(phi)
    d_a, d_b, d_e = phi.dim_in, phi.dim_out, complementary.dim_out
    j_comp_adj = channel_adjoint(complementary).choi
    phi_adj = channel_adjoint(phi)
    n = d_a * d_e
    z_label = BipartiteLabel(d_a, d_e)
    theta_label = BipartiteLabel(d_b, d_e)

    def composed(x: Matrix) -> Matrix:
        return link_product(phi_adj.tensor, x.reshape(d_b, d_e, d_b, d_e))

    builder = SdpBuilder(Sense.MINIMIZE, "nu_phi")
    z = builder.add_psd(n, "Z")
    s = builder.add_psd(n, "S")
    j_theta = builder.add_psd(d_b * d_e, "J_Theta")
    w = builder.add_psd(d_e, "W")
    lam = builder.add_nonneg(1, "lambda")
    builder.set_objective(lam, [2.0])
    builder.add_equality(
        {s: _identity, z: _negate, j_theta: lambda x: -composed(x)}, -j_comp_adj
    )
    builder.add_equality(
        {
            w: _identity,
            z: lambda x: partial_trace(x, z_label, "B"),
            lam: _scalar_times_eye(d_e, -1.0),
        },
        np.zeros((d_e, d_e)),
    )
    # Theta(1_E) = 1_B
    builder.add_equality({j_theta: lambda x: partial_trace(x, theta_label, "A")}, np.eye(d_b))
    return builder.build()


def nu_phi(
    phi: ChoiChannel,
    settings: SolverSettings | None = None,
    complementary: ChoiChannel | None = None,
) -> NuResult:
    """
    Minimal cb-norm distance between Phi^c and Lambda o Phi.

    Returns:
        NuResult with the value and the unital witness Theta = Lambda*

    Raises:
        SolverFailure: the program could not be solved
    """
    if complementary is None:
        _, complementary = kraus_and_complementary(phi)
    problem = nu_phi_program(phi, complementary)
    solution = _solve_checked(problem, settings, "nu_phi")
    j_theta = _hermitian_block(solution, problem, "J_Theta")
    theta = ChoiChannel(complementary.dim_out, phi.dim_out, j_theta)
    return NuResult(value=solution.upper_bound, theta=theta, solution=solution)


# PPT relaxations of the unstabilised norms


def m_infinity_program(delta: ChoiMap, sign: int) -> SdpProblem:
    """
    max sign * Tr(J sigma) over sigma >= 0, sigma^T_A >= 0, Tr sigma <= 1.

    Blocks: sigma, tau = sigma^T_A, and the trace slack s.
    """
    _check_sign(sign)
    label = delta.label
    builder = SdpBuilder(Sense.MAXIMIZE, f"m_inf{'+' if sign > 0 else '-'}")
    sigma = builder.add_psd(label.dim, "sigma")
    tau = builder.add_psd(label.dim, "tau")
    slack = builder.add_nonneg(1, "s")
    builder.set_objective(sigma, sign * delta.choi)
    builder.add_equality(
        {tau: _identity, sigma: lambda x: -partial_transpose(x, label)},
        np.zeros((label.dim, label.dim)),
    )
    builder.add_equality({sigma: lambda x: np.trace(x), slack: lambda v: v[0]}, 1.0)
    return builder.build()


def m_infinity_dual_program(delta: ChoiMap, sign: int) -> SdpProblem:
    """min lambda subject to lambda 1 - omega^T_A >= sign * J, omega >= 0."""
    _check_sign(sign)
    label = delta.label
    n = label.dim
    builder = SdpBuilder(Sense.MINIMIZE, f"m_inf{'+' if sign > 0 else '-'}_dual")
    omega = builder.add_psd(n, "omega")
    s = builder.add_psd(n, "S")
    lam = builder.add_nonneg(1, "lambda")
    builder.set_objective(lam, [1.0])
    builder.add_equality(
        {
            s: _identity,
            omega: lambda x: partial_transpose(x, label),
            lam: _scalar_times_eye(n, -1.0),
        },
        -sign * delta.choi,
    )
    return builder.build()


def m_infinity(delta: ChoiMap, sign: int, settings: SolverSettings | None = None) -> float:
    """PPT upper bound on the sign-part of the unstabilised infinity norm."""
    solution = _solve_checked(m_infinity_program(delta, sign), settings, "M_inf")
    return solution.upper_bound


def m_infinity_dual(delta: ChoiMap, sign: int, settings: SolverSettings | None = None) -> float:
    """Value of the hand-built dual of the M_inf program."""
    solution = _solve_checked(m_infinity_dual_program(delta, sign), settings, "M_inf dual")
    return solution.upper_bound


def _require_traceless(delta: ChoiMap) -> None:
    traceless = isinstance(delta, HermitianMapDiff) and delta.is_traceless
    if not traceless:
        raise ValidationError("M_1 programs need a channel difference with Tr_B J = 0")


def m_one_program(delta: ChoiMap, sign: int) -> SdpProblem:
    """
    max 2 sign * Tr(J W) over the PPT_2 set.

    PPT_2: W >= 0, W^T_A >= 0 and W <= 1_B (x) rho for a state rho on A.
    Blocks: W, rho, V = 1_B (x) rho - W and T = W^T_A.
    """
    _check_sign(sign)
    _require_traceless(delta)
    label = delta.label
    n, d_b, d_a = label.dim, delta.dim_out, delta.dim_in
    builder = SdpBuilder(Sense.MAXIMIZE, f"m_one{'+' if sign > 0 else '-'}")
    w = builder.add_psd(n, "W")
    rho = builder.add_psd(d_a, "rho")
    v = builder.add_psd(n, "V")
    t = builder.add_psd(n, "T")
    builder.set_objective(w, 2 * sign * delta.choi)
    builder.add_equality(
        {v: _identity, w: _identity, rho: lambda x: -np.kron(np.eye(d_b), x)},
        np.zeros((n, n)),
    )
    builder.add_equality(
        {t: _identity, w: lambda x: -partial_transpose(x, label)}, np.zeros((n, n))
    )
    builder.add_equality({rho: lambda x: np.trace(x)}, 1.0)
    return builder.build()


def m_one_dual_program(delta: ChoiMap, sign: int) -> SdpProblem:
    """
    min lambda subject to Y_2 - Y_1^T_A >= 2 sign J and lambda 1 >= Tr_B Y_2.

    Blocks: Y_1, Y_2 >= 0, the slacks S_1, S_2 and lambda.
    """
    _check_sign(sign)
    _require_traceless(delta)
    label = delta.label
    n, d_a = label.dim, delta.dim_in
    builder = SdpBuilder(Sense.MINIMIZE, f"m_one{'+' if sign > 0 else '-'}_dual")
    y1 = builder.add_psd(n, "Y1")
    y2 = builder.add_psd(n, "Y2")
    s1 = builder.add_psd(n, "S1")
    s2 = builder.add_psd(d_a, "S2")
    lam = builder.add_nonneg(1, "lambda")
    builder.set_objective(lam, [1.0])
    builder.add_equality(
        {s1: _identity, y2: _negate, y1: lambda x: partial_transpose(x, label)},
        -2 * sign * delta.choi,
    )
    builder.add_equality(
        {
            s2: _identity,
            y2: lambda x: partial_trace(x, label, "B"),
            lam: _scalar_times_eye(d_a, -1.0),
        },
        np.zeros((d_a, d_a)),
    )
    return builder.build()


def m_one(delta: ChoiMap, sign: int, settings: SolverSettings | None = None) -> float:
    """
    PPT upper bound for the unstabilised trace norm of a channel difference.

    Raises:
        ValidationError: delta is not trace-annihilating
        SolverFailure: the program could not be solved
    """
    solution = _solve_checked(m_one_program(delta, sign), settings, "M_1")
    return solution.upper_bound


def m_one_dual(delta: ChoiMap, sign: int, settings: SolverSettings | None = None) -> float:
    """Value of the hand-built dual of the M_1 program."""
    solution = _solve_checked(m_one_dual_program(delta, sign), settings, "M_1 dual")
    return solution.upper_bound


def in_ppt2(
    w: ArrayLike,
    label: BipartiteLabel,
    rho: ArrayLike | None = None,
    tol: float = 1e-8,
) -> bool:
    """
    Check membership of W in the PPT_2 set.

    Without an explicit rho, the state Tr_B W + (1 - Tr W) 1 / d_A is used,
    which certifies any PPT operator of trace at most one.
    """
    arr = np.asarray(w, dtype=np.complex128)
    label.check(arr)
    arr = (arr + arr.conj().T) / 2
    if rho is None:
        reduced = partial_trace(arr, label, "B")
        slack = 1.0 - float(np.real(np.trace(arr)))
        state = reduced + slack * np.eye(label.dim_a) / label.dim_a
    else:
        state = np.asarray(rho, dtype=np.complex128)
    state = (state + state.conj().T) / 2

    def psd(m: Matrix) -> bool:
        return bool(np.linalg.eigvalsh(m)[0] >= -tol)

    return (
        psd(arr)
        and psd(partial_transpose(arr, label))
        and psd(state)
        and abs(float(np.real(np.trace(state))) - 1.0) <= tol
        and psd(np.kron(np.eye(label.dim_b), state) - arr)
    )


# Sampling lower bounds


def _output_norms(delta: ChoiMap, states: Matrix, p: float) -> NDArray[np.float64]:
    outputs = apply_batch(delta, states)
    w = np.linalg.eigvalsh((outputs + outputs.conj().transpose(0, 2, 1)) / 2)
    if p == 1:
        return np.sum(np.abs(w), axis=1)
    return np.max(np.abs(w), axis=1)


def _refine_general(delta: ChoiMap, start: Matrix, p: float) -> float:
    d = delta.dim_in
    w, u = np.linalg.eigh(start)
    g0 = u @ np.diag(np.sqrt(np.clip(w, 0.0, None)))

    def negated(x: NDArray[np.float64]) -> float:
        g = (x[: d * d] + 1j * x[d * d :]).reshape(d, d)
        rho = g @ g.conj().T
        trace = float(np.real(np.trace(rho)))
        if trace <= 0:
            return 0.0
        return -float(_output_norms(delta, (rho / trace)[None], p)[0])

    x0 = np.concatenate([g0.real.reshape(-1), g0.imag.reshape(-1)])
    result = minimize(
        negated, x0, method="Nelder-Mead", options={"maxiter": SEARCH_MAX_ITERATIONS}
    )
    return float(-result.fun)


def unstabilized_norm_sampling(
    delta: ChoiMap,
    p: float,
    samples: int = SAMPLING_STATES,
    seed: int = DEFAULT_SEED,
    refinements: int = SAMPLING_REFINEMENTS,
) -> float:
    """
    Lower bound on max_rho ||Delta(rho)||_p by sampling and local refinement.

    Hilbert-Schmidt random states (plus the Pauli eigenstates for qubit inputs)
    are evaluated in one batch; the best are refined with Nelder-Mead.

    Args:
        delta: Map to evaluate
        p: 1 or inf
        samples: Number of random input states
        seed: Seed of the sampler
        refinements: Number of best samples refined locally

    Returns:
        Largest output norm found
    """
    if p not in (1, np.inf):
        raise ValidationError(f"Sampling supports p in {{1, inf}}, got {p}")
    rng = np.random.default_rng(seed)
    states = random_densities(delta.dim_in, samples, rng)
    if delta.dim_in == 2:
        states = np.concatenate([states, pauli_eigenstates()])
    values = _output_norms(delta, states, p)
    best = float(np.max(values)) if values.size else 0.0
    order = np.argsort(values)[::-1][:refinements]

    if delta.dim_in == 2:
        if order.size:
            refined = refine_bloch(
                lambda rhos: _output_norms(delta, rhos, p), density_to_bloch(states[order])
            )
            best = max(best, refined.value)
    else:
        for i in order:
            best = max(best, _refine_general(delta, states[i], p))

    _LOGGER.debug("Sampled ||.||_%s lower bound: %.12g", p, best)
    return best


# Bundles


@dataclass(frozen=True)
class NormBundle:
    """All norm quantities of one channel difference."""

    diamond: float
    m1_minus: float
    m1_plus: float
    minf_minus: float
    minf_plus: float
    gaps: dict[str, float] = field(default_factory=dict)
    sampled_1: float | None = None
    sampled_inf: float | None = None

    @property
    def eps1(self) -> float:
        """Larger of the two M_1 bounds."""
        return max(self.m1_minus, self.m1_plus)

    @property
    def eps1_min(self) -> float:
        """Smaller of the two M_1 bounds, itself a valid bound on the trace norm."""
        return min(self.m1_minus, self.m1_plus)

    def eps1_by_rule(self, rule: str = EPS1_RULE_MAX) -> float:
        """
        Combine the two M_1 bounds into eps_1.

        Both signs bound the unstabilised trace norm from above, so "min" is
        never looser than "max".

        Raises:
            ValidationError: unknown rule
        """
        if rule == EPS1_RULE_MAX:
            return self.eps1
        if rule == EPS1_RULE_MIN:
            return self.eps1_min
        raise ValidationError(f"eps_1 rule must be one of {EPS1_RULES}, got {rule!r}")

    @property
    def nu(self) -> float:
        """Larger of the two M_inf bounds."""
        return max(self.minf_minus, self.minf_plus)

    def ordering_holds(self, tol: float = 1e-6) -> bool:
        """True when 2 nu <= eps1 <= diamond within tol."""
        return 2 * self.nu <= self.eps1 + tol and self.eps1 <= self.diamond + tol

    def as_dict(self) -> dict[str, Any]:
        """Plain mapping for JSON reports."""
        return {
            "diamond": self.diamond,
            "m1_minus": self.m1_minus,
            "m1_plus": self.m1_plus,
            "minf_minus": self.minf_minus,
            "minf_plus": self.minf_plus,
            "eps1": self.eps1,
            "eps1_min": self.eps1_min,
            "nu": self.nu,
            "sampled_1": self.sampled_1,
            "sampled_inf": self.sampled_inf,
            "gaps": dict(self.gaps),
        }


def _clamp(value: float) -> float:
    return 0.0 if value < NORM_CLAMP else value


def norm_bundle(
    delta: HermitianMapDiff,
    settings: SolverSettings | None = None,
    diamond: float | None = None,
    sample: bool = False,
    samples: int = SAMPLING_STATES,
    seed: int = DEFAULT_SEED,
) -> NormBundle:
    """
    Solve every norm program for a channel difference.

    Args:
        delta: Trace-annihilating map
        settings: Solver settings
        diamond: Known diamond norm, skipping that solve
        sample: Also compute the sampling lower bounds
        samples: Random states per sampling oracle
        seed: Sampling seed

    Raises:
        ValidationError: delta is not trace-annihilating
        SolverFailure: any program could not be solved
    """
    _require_traceless(delta)
    gaps: dict[str, float] = {}

    def run(problem: SdpProblem, key: str) -> float:
        solution = _solve_checked(problem, settings, key)
        gaps[key] = solution.gap
        return _clamp(solution.upper_bound)

    if diamond is None:
        diamond = run(diamond_norm_program(delta), "diamond")
    bundle = NormBundle(
        diamond=_clamp(diamond),
        m1_minus=run(m_one_program(delta, -1), "m1_minus"),
        m1_plus=run(m_one_program(delta, 1), "m1_plus"),
        minf_minus=run(m_infinity_program(delta, -1), "minf_minus"),
        minf_plus=run(m_infinity_program(delta, 1), "minf_plus"),
        gaps=gaps,
        sampled_1=unstabilized_norm_sampling(delta, 1, samples, seed) if sample else None,
        sampled_inf=unstabilized_norm_sampling(delta, np.inf, samples, seed) if sample else None,
    )
    if not bundle.ordering_holds():
        _LOGGER.warning(
            "Norm ordering 2nu <= eps1 <= diamond violated: nu=%.6g eps1=%.6g diamond=%.6g",
            bundle.nu,
            bundle.eps1,
            bundle.diamond,
        )
    return bundle
