"""
Built-in invariant suite.

Each check returns a CheckResult; a check that raises counts as failed. The
quick subset skips the sweep and the brute-force search and uses smaller
random samples.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize
from scipy.special import xlogy

from .capacity import (
    DegradabilityCertificate,
    comparison_curves,
    convex_envelope,
    corr_private,
    corr_quantum,
    corr_sutter,
)
from .channels import (
    HermitianMapDiff,
    amplitude_damping,
    channel_compose,
    channel_difference,
    coherent_info_depolarizing,
    coherent_info_numeric,
    depolarizing,
    identity_channel,
    random_channel,
)
from .config import RunConfig
from .const import EPS1_RULE_MAX, INTEGER_SNAP
from .coordinator import SweepCoordinator, evaluate_point
from .entropy import (
    DistancePair,
    ProbabilityVector,
    bound_fd,
    bound_sason,
    bound_vn_two_distance,
    local_distance,
    saturating_pair,
    shannon_entropy,
    tv_distance,
    von_neumann_entropy,
)
from .hermitian import (
    BipartiteLabel,
    eig_hermitian,
    operator_distance,
    partial_trace,
    random_densities,
    random_hermitian,
    schatten_norm,
    trace_distance,
)
from .norms import (
    diamond_norm,
    eps_phi,
    m_infinity,
    norm_bundle,
    unstabilized_norm_sampling,
)

_LOGGER = logging.getLogger(__name__)

CheckOutcome = tuple[bool, str]


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one invariant check."""

    name: str
    passed: bool
    detail: str
    seconds: float


def _grid_pairs(max_d: int) -> list[tuple[int, DistancePair]]:
    pairs = []
    values = np.linspace(0.05, 0.95, 10)
    for d in range(3, max_d + 1):
        for eps, nu in itertools.product(values, values):
            if nu > eps or d < 2 * math.ceil(eps / nu - 1e-12):
                continue
            pairs.append((d, DistancePair(float(eps), float(nu))))
    return pairs


def check_fd_tightness(quick: bool, config: RunConfig) -> CheckOutcome:
    """Saturating pairs attain bound_fd."""
    worst = 0.0
    for d, pair in _grid_pairs(12):
        q, p = saturating_pair(d, pair)
        worst = max(worst, abs(shannon_entropy(p) - shannon_entropy(q) - bound_fd(d, pair)))
    return worst <= 1e-10, f"max deviation {worst:.3e}"


def check_fd_dominance(quick: bool, config: RunConfig) -> CheckOutcome:
    """Random distribution pairs never exceed bound_fd."""
    rng = np.random.default_rng(config.seed)
    samples = 2_000 if quick else 100_000
    violations = 0
    for d in range(3, 9):
        ps = rng.dirichlet(np.ones(d), size=samples)
        qs = rng.dirichlet(np.ones(d), size=samples)
        for a, b in zip(ps, qs, strict=True):
            p, q = ProbabilityVector(a), ProbabilityVector(b)
            tv = tv_distance(p, q)
            if tv == 0.0:
                continue
            pair = DistancePair(min(tv, 1.0), min(local_distance(p, q), tv))
            gap = abs(shannon_entropy(p) - shannon_entropy(q)) - bound_fd(d, pair)
            violations += gap > 1e-10
    return violations == 0, f"{violations} violations over {6 * samples} pairs"


def check_sason_sharpening(quick: bool, config: RunConfig) -> CheckOutcome:
    """
    bound_fd sharpens the Sason-type bound where nu d >= 2 eps.

    The gain is strict for non-integer eps / nu and vanishes for integer ratios.
    """
    not_strict = not_equal = 0
    checked = 0
    for d, pair in _grid_pairs(12):
        if pair.local * d < 2 * pair.tv:
            continue
        slack = bound_sason(d, pair) - bound_fd(d, pair)
        ratio = pair.tv / pair.local
        checked += 1
        if abs(ratio - round(ratio)) <= INTEGER_SNAP:
            not_equal += abs(slack) > 1e-12
        else:
            not_strict += slack <= 0.0
    ok = not_strict == 0 and not_equal == 0
    return ok, f"{checked} pairs, {not_strict} not strict, {not_equal} integer pairs unequal"


def check_hermitian_core(quick: bool, config: RunConfig) -> CheckOutcome:
    """Eigendecompositions reconstruct and partial traces respect products."""
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for k, dim in enumerate((2, 4, 6) if quick else (2, 3, 4, 6, 8, 12)):
        m = random_hermitian(dim, config.seed + k)
        w, u = eig_hermitian(m)
        worst = max(worst, float(np.max(np.abs(u @ np.diag(w) @ u.conj().T - m))))
        worst = max(worst, abs(schatten_norm(m, 1) - float(np.sum(np.abs(w)))))
    label = BipartiteLabel(2, 3)
    b, a = random_densities(2, 1, rng)[0], random_densities(3, 1, rng)[0]
    joint = np.kron(b, a)
    worst = max(worst, float(np.max(np.abs(partial_trace(joint, label, "A") - b))))
    worst = max(worst, float(np.max(np.abs(partial_trace(joint, label, "B") - a))))
    return worst <= 1e-10, f"max deviation {worst:.3e}"


def check_channel_algebra(quick: bool, config: RunConfig) -> CheckOutcome:
    """Composition is associative and the optimal degrading map is a channel."""
    worst = 0.0
    for k in range(2 if quick else 20):
        seed = config.seed + 3 * k
        a = random_channel(2, 3, 2, seed)
        b = random_channel(3, 2, 3, seed + 1)
        c = random_channel(2, 4, 2, seed + 2)
        left = channel_compose(channel_compose(c, b), a)
        right = channel_compose(c, channel_compose(b, a))
        worst = max(worst, float(np.max(np.abs(left.choi - right.choi))))
    lam = eps_phi(depolarizing(0.1), config.solver_settings()).degrading
    ok = worst <= 1e-9 and lam.is_cptp
    return ok, f"associativity deviation {worst:.3e}, degrading map CPTP={lam.is_cptp}"


def check_sdp_certificates(quick: bool, config: RunConfig) -> CheckOutcome:
    """Norm programs close their duality gap and scale with their data."""
    settings = config.solver_settings()
    delta = channel_difference(depolarizing(0.1), depolarizing(0.3))
    bundle = norm_bundle(delta, settings)
    worst_gap = max(bundle.gaps.values())
    scale = 7.5
    scaled = HermitianMapDiff(delta.dim_in, delta.dim_out, scale * delta.choi)
    drift = 0.0
    for sign in (1, -1):
        base = m_infinity(delta, sign, settings)
        drift = max(drift, abs(m_infinity(scaled, sign, settings) - scale * base) / scale)
    ok = worst_gap <= config.gap_tol * 10 and drift <= 1e-6
    return ok, f"max gap {worst_gap:.3e}, scaling drift {drift:.3e}"


def _entropy_bits(p: NDArray[np.float64]) -> float:
    return float(-np.sum(xlogy(p, p)) / math.log(2.0))


def brute_force_entropy_gap(
    d: int, pair: DistancePair, restarts: int, seed: int, target: float | None = None
) -> float:
    """
    Largest H(p) - H(q) found by penalised Nelder-Mead restarts.

    Distributions are normalised squares of free coordinates, so zero weights
    are reachable. The TV and local constraints enter as an exact penalty and
    only feasible optima count.
    Stops early once target - 1e-3 is reached.
    """
    rng = np.random.default_rng(seed)

    def split(x: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        sq = x * x + 1e-300
        return sq[:d] / np.sum(sq[:d]), sq[d:] / np.sum(sq[d:])

    def objective(x: NDArray[np.float64]) -> float:
        p, q = split(x)
        diff = np.abs(p - q)
        excess = max(0.0, 0.5 * float(np.sum(diff)) - pair.tv)
        excess += max(0.0, float(np.max(diff)) - pair.local)
        return -(_entropy_bits(p) - _entropy_bits(q)) + 50.0 * excess

    best = 0.0
    for _ in range(restarts):
        start = rng.normal(size=2 * d)
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-12},
        )
        p, q = split(result.x)
        diff = np.abs(p - q)
        if 0.5 * np.sum(diff) <= pair.tv + 1e-9 and np.max(diff) <= pair.local + 1e-9:
            best = max(best, _entropy_bits(p) - _entropy_bits(q))
        if target is not None and best >= target - 1e-3:
            break
    return best


def check_fd_attainability(quick: bool, config: RunConfig) -> CheckOutcome:
    """A brute-force search at d = 4 comes within 1e-3 of bound_fd in some cell."""
    d = 4
    cells = [DistancePair(0.5, 0.25), DistancePair(0.3, 0.2), DistancePair(0.4, 0.3)]
    restarts = 500 if quick else 10_000
    details = []
    for k, pair in enumerate(cells):
        target = bound_fd(d, pair)
        found = brute_force_entropy_gap(d, pair, restarts, config.seed + k, target)
        details.append(f"({pair.tv:g}, {pair.local:g}): {found:.6f} of {target:.6f}")
        if found >= target - 1e-3:
            return True, "; ".join(details)
    return False, "; ".join(details)


def check_vn_dominance(quick: bool, config: RunConfig) -> CheckOutcome:
    """Random state pairs within the hypothesis respect the von Neumann bound."""
    rng = np.random.default_rng(config.seed)
    samples = 500 if quick else 10_000
    dims = (4,) if quick else (4, 6, 8)
    checked = violations = 0
    for d in dims:
        rhos = random_densities(d, samples, rng)
        sigmas = random_densities(d, samples, rng)
        for rho, sigma in zip(rhos, sigmas, strict=True):
            tv, nu = trace_distance(rho, sigma), operator_distance(rho, sigma)
            if tv == 0.0 or tv > nu * d / (nu * d + 3.0):
                continue
            checked += 1
            gap = abs(von_neumann_entropy(rho) - von_neumann_entropy(sigma))
            violations += gap > bound_vn_two_distance(d, DistancePair(tv, min(nu, tv))) + 1e-10
    return violations == 0, f"{violations} violations over {checked} admissible pairs"


def check_depolarizing_norms(quick: bool, config: RunConfig) -> CheckOutcome:
    """Diamond and sampled norms of depolarizing differences match closed forms."""
    settings = config.solver_settings()
    pairs = [(0.1, 0.3)] if quick else [(0.1, 0.3), (0.02, 0.2), (0.5, 0.05)]
    worst = 0.0
    for p, q in pairs:
        delta = channel_difference(depolarizing(p), depolarizing(q))
        worst = max(worst, abs(diamond_norm(delta, settings) - 2 * abs(p - q)))
        sampled_1 = unstabilized_norm_sampling(delta, 1, 200, config.seed)
        worst = max(worst, abs(sampled_1 - 4 * abs(p - q) / 3))
    return worst <= 1e-4, f"max deviation {worst:.3e}"


def check_degradability_zeros(quick: bool, config: RunConfig) -> CheckOutcome:
    """Degradable channels have eps_phi close to zero."""
    settings = config.solver_settings()
    values = [eps_phi(ch, settings).value for ch in (identity_channel(2), amplitude_damping(0.3))]
    return max(values) <= 1e-6, f"eps_phi values {np.round(values, 9).tolist()}"


def check_ordering_chain(quick: bool, config: RunConfig) -> CheckOutcome:
    """2 nu <= eps_1 <= diamond on random qubit channel differences."""
    settings = config.solver_settings()
    count = 3 if quick else 50
    failures = 0
    for k in range(count):
        seed = config.seed + 2 * k
        delta = channel_difference(random_channel(2, 2, 2, seed), random_channel(2, 2, 2, seed + 1))
        failures += not norm_bundle(delta, settings).ordering_holds()
    return failures == 0, f"{failures} of {count} differences out of order"


def check_coherent_info(quick: bool, config: RunConfig) -> CheckOutcome:
    """Numerical coherent information of E_p matches the closed form."""
    ps = (0.1,) if quick else (0.0, 0.05, 0.1, 0.2)
    worst = max(
        abs(coherent_info_numeric(depolarizing(p)) - coherent_info_depolarizing(p)) for p in ps
    )
    return worst <= 1e-4, f"max deviation {worst:.3e}"


def check_correction_identities(quick: bool, config: RunConfig) -> CheckOutcome:
    """corr_private offsets corr_quantum exactly and beta = 1 recovers corr_sutter."""
    d_env = 4
    cert = DegradabilityCertificate(eps_diamond=0.01, eps1=0.004, nu=0.002, d_env=d_env)
    extra = 2 * (0.01 * math.log2(d_env)) + 2 * (
        (1.005) * math.log2(1.005) - 0.005 * math.log2(0.005)
    )
    offset = abs(corr_private(cert) - corr_quantum(cert) - extra)
    eps = 0.02
    collapse = DegradabilityCertificate(eps_diamond=eps, eps1=eps, nu=eps / 2, d_env=d_env)
    beta_one = abs(corr_quantum(collapse) - corr_sutter(eps, d_env))
    ok = offset <= 1e-12 and beta_one <= 1e-12
    return ok, f"offset {offset:.3e}, beta=1 deviation {beta_one:.3e}"


def check_envelope(quick: bool, config: RunConfig) -> CheckOutcome:
    """The envelope of the comparison curves is convex and dominated by each."""
    grid = np.linspace(0.0, 0.25, 101)
    curves = comparison_curves(grid)
    env = convex_envelope(grid, curves)
    dominated = all(np.all(env <= c + 1e-12) for c in curves.values())
    convex = bool(np.all(np.diff(env, 2) >= -1e-12))
    return dominated and convex, f"dominated={dominated} convex={convex}"


def check_sweep(quick: bool, config: RunConfig) -> CheckOutcome:
    """
    A short depolarizing sweep satisfies the bound orderings.

    The share of points with p > 0.005 improving on the single-distance bound
    by more than 1e-4 is measured and reported, not enforced.
    """
    grid = np.linspace(0.0, 0.025, 6 if quick else 26)
    coordinator = SweepCoordinator(config, grid)
    reports = coordinator.assemble(
        [evaluate_point(i, float(p), config) for i, p in enumerate(grid)]
    )
    problems = []
    for r in reports:
        if not r.hypothesis_ok:
            problems.append(f"p={r.p:.4g}: hypothesis")
        if r.bound_new > r.bound_sutter + 1e-9:
            problems.append(f"p={r.p:.4g}: new > previous")
        if r.bound_new < r.q1 - 1e-9:
            problems.append(f"p={r.p:.4g}: below Q1")
        if config.eps1_rule == EPS1_RULE_MAX and r.beta > 1 + 1e-6:
            problems.append(f"p={r.p:.4g}: beta={r.beta:.4g}")
    upper = [r for r in reports if r.p > 0.005]
    gains = [r.bound_sutter - r.bound_new for r in upper]
    improved = sum(g > 1e-4 for g in gains)
    summary = (
        f"{len(reports)} points consistent; {improved}/{len(upper)} improve by > 1e-4 "
        f"(largest gain {max(gains, default=0.0):.3e})"
    )
    return not problems, "; ".join(problems) or summary


CHECKS: list[tuple[str, Callable[[bool, RunConfig], CheckOutcome], bool]] = [
    ("hermitian_core", check_hermitian_core, True),
    ("fd_tightness", check_fd_tightness, True),
    ("fd_dominance", check_fd_dominance, True),
    ("fd_attainability", check_fd_attainability, False),
    ("sason_sharpening", check_sason_sharpening, True),
    ("vn_dominance", check_vn_dominance, True),
    ("channel_algebra", check_channel_algebra, True),
    ("sdp_certificates", check_sdp_certificates, True),
    ("depolarizing_norms", check_depolarizing_norms, True),
    ("degradability_zeros", check_degradability_zeros, True),
    ("ordering_chain", check_ordering_chain, True),
    ("coherent_info", check_coherent_info, True),
    ("correction_identities", check_correction_identities, True),
    ("envelope", check_envelope, True),
    ("depolarizing_sweep", check_sweep, False),
]


def run_selftest(quick: bool = False, config: RunConfig | None = None) -> list[CheckResult]:
    """
    Run the invariant suite.

    Args:
        quick: Run only the fast checks with reduced sample sizes
        config: Seed and solver settings, defaults to RunConfig()

    Returns:
        One CheckResult per executed check
    """
    config = config or RunConfig()
    results = []
    for name, check, in_quick in CHECKS:
        if quick and not in_quick:
            continue
        start = time.perf_counter()
        try:
            passed, detail = check(quick, config)
        except Exception as err:
            _LOGGER.exception("Self-test check %s raised", name)
            passed, detail = False, f"{type(err).__name__}: {err}"
        elapsed = time.perf_counter() - start
        level = logging.INFO if passed else logging.ERROR
        verdict = "PASS" if passed else "FAIL"
        _LOGGER.log(level, "%s: %s (%s, %.2fs)", name, verdict, detail, elapsed)
        results.append(CheckResult(name, bool(passed), detail, elapsed))
    return results
