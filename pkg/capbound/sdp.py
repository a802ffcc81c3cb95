"""
Block-structured semidefinite programs over complex Hermitian cones.

A problem has PSD blocks X_k (complex Hermitian) and nonnegative vector blocks
x_k, a linear objective sum_k Re Tr(C_k X_k) and scalar equality constraints
sum_k Re Tr(A_ik X_k) = b_i. Complex blocks are handed to cvxpy through the
real embedding [[Re, -Im], [Im, Re]]. The primal and its Lagrange dual are
solved as two separate programs so that every solution carries its own dual
certificate, duality gap and residuals.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):  # type: ignore[no-redef]
        """Backport of :class:`enum.StrEnum`."""

        def __str__(self) -> str:
            return str(self.value)
from typing import Any

import cvxpy as cp
import numpy as np
from numpy.typing import ArrayLike, NDArray

from .const import (
    DEFAULT_FEAS_TOL,
    DEFAULT_GAP_TOL,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_SOLVER,
    FALLBACK_SOLVER,
    MAX_PSD_DIMENSION,
    SCS_MAX_ITERATIONS,
    SOLVER_CLARABEL,
    SOLVER_SCS,
    SUPPORTED_SOLVERS,
)
from .exceptions import DimensionMismatch, SolverFailure, ValidationError
from .hermitian import ComplexMatrix, validate_hermitian

_LOGGER = logging.getLogger(__name__)


class Sense(StrEnum):
    """Optimisation direction."""

    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class ConeKind(StrEnum):
    """Cone of a variable block."""

    PSD = "psd"
    NONNEG = "nonneg"


class SolverStatus(StrEnum):
    """Outcome of a solve."""

    OPTIMAL = "optimal"
    INACCURATE = "inaccurate"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITERATIONS = "max_iterations"
    FAILED = "failed"


_CVXPY_STATUS: dict[str, SolverStatus] = {
    cp.OPTIMAL: SolverStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolverStatus.INACCURATE,
    cp.INFEASIBLE: SolverStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolverStatus.INFEASIBLE,
    cp.UNBOUNDED: SolverStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: SolverStatus.UNBOUNDED,
    cp.USER_LIMIT: SolverStatus.MAX_ITERATIONS,
}


@dataclass(frozen=True)
class ConeBlock:
    """A variable block: a size x size Hermitian PSD matrix or a length-size vector >= 0."""

    kind: ConeKind
    size: int
    name: str = ""


@dataclass(frozen=True, eq=False)
class EqualityConstraint:
    """Scalar constraint sum_k <A_k, X_k> = rhs, coefficients keyed by block index."""

    coefficients: Mapping[int, NDArray[Any]]
    rhs: float


@dataclass(frozen=True)
class SolverSettings:
    """Back end and accuracy targets shared by every program."""

    solver: str = DEFAULT_SOLVER
    feas_tol: float = DEFAULT_FEAS_TOL
    gap_tol: float = DEFAULT_GAP_TOL
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self) -> None:
        if self.solver not in SUPPORTED_SOLVERS:
            raise ValidationError(f"Unsupported solver {self.solver!r}")
        if self.feas_tol <= 0 or self.gap_tol <= 0:
            raise ValidationError("Solver tolerances must be positive")
        if self.max_iterations < 1:
            raise ValidationError("Iteration cap must be positive")

    def with_solver(self, solver: str) -> SolverSettings:
        """Return a copy using another back end."""
        return SolverSettings(solver, self.feas_tol, self.gap_tol, self.max_iterations)


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """A block-structured semidefinite program in standard equality form."""

    blocks: tuple[ConeBlock, ...]
    objective: tuple[NDArray[Any], ...]
    constraints: tuple[EqualityConstraint, ...]
    sense: Sense = Sense.MINIMIZE
    name: str = ""

    def __post_init__(self) -> None:
        if not self.blocks:
            raise ValidationError("Problem needs at least one block")
        if len(self.objective) != len(self.blocks):
            raise DimensionMismatch("One objective coefficient per block is required")
        objective = tuple(
            self._check_coefficient(k, c) for k, c in enumerate(self.objective)
        )
        object.__setattr__(self, "objective", objective)
        for con in self.constraints:
            for k, coeff in con.coefficients.items():
                if not 0 <= k < len(self.blocks):
                    raise ValidationError(f"Constraint references unknown block {k}")
                self._check_coefficient(k, coeff)
        if self.psd_dimension > MAX_PSD_DIMENSION:
            raise ValidationError(
                f"Total PSD dimension {self.psd_dimension} exceeds {MAX_PSD_DIMENSION}"
            )

    def _check_coefficient(self, k: int, coeff: NDArray[Any]) -> NDArray[Any]:
        block = self.blocks[k]
        if block.kind is ConeKind.PSD:
            if coeff.shape != (block.size, block.size):
                raise DimensionMismatch(
                    f"Block {k} ({block.name}) expects {block.size}x{block.size}, "
                    f"got {coeff.shape}"
                )
            return validate_hermitian(coeff)
        if coeff.shape != (block.size,):
            raise DimensionMismatch(f"Block {k} ({block.name}) expects length {block.size}")
        return np.asarray(np.real(coeff), dtype=np.float64)

    @property
    def psd_dimension(self) -> int:
        """Sum of the complex PSD block sizes."""
        return sum(b.size for b in self.blocks if b.kind is ConeKind.PSD)

    def block_index(self, name: str) -> int:
        """Index of the block with the given name."""
        for k, block in enumerate(self.blocks):
            if block.name == name:
                return k
        raise KeyError(name)


@dataclass(frozen=True, eq=False)
class SdpSolution:
    """Primal and dual solutions of an SdpProblem with their certificates."""

    status: SolverStatus
    primal_value: float
    dual_value: float
    primal_point: tuple[NDArray[Any], ...] = ()
    dual_point: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    gap: float = math.inf
    primal_residual: float = math.inf
    dual_slack: float = -math.inf
    solver: str = ""
    sense: Sense = Sense.MINIMIZE

    @property
    def upper_bound(self) -> float:
        """Value certified from above: the primal for minimisation, the dual for maximisation."""
        if self.sense is Sense.MAXIMIZE and math.isfinite(self.dual_value):
            return self.dual_value
        return self.primal_value

    @property
    def succeeded(self) -> bool:
        """True when the values can be used downstream."""
        return self.status in (SolverStatus.OPTIMAL, SolverStatus.INACCURATE)

    def require_success(self, what: str) -> SdpSolution:
        """
        Return self, or raise when the solve did not succeed.

        Raises:
            SolverFailure: status other than OPTIMAL or INACCURATE
        """
        if not self.succeeded:
            raise SolverFailure(f"{what}: solver returned {self.status}", status=self.status)
        return self


def embed_complex(h: ArrayLike) -> NDArray[np.float64]:
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian matrix."""
    arr = np.asarray(h, dtype=np.complex128)
    re, im = arr.real, arr.imag
    return np.block([[re, -im], [im, re]])


def extract_complex(x: ArrayLike) -> ComplexMatrix:
    """Inverse of embed_complex, projecting any real symmetric matrix onto the embedded form."""
    arr = np.asarray(x, dtype=np.float64)
    n = arr.shape[0] // 2
    x11, x12 = arr[:n, :n], arr[:n, n:]
    x21, x22 = arr[n:, :n], arr[n:, n:]
    out = 0.5 * ((x11 + x22) + 1j * (x21 - x12))
    return (out + out.conj().T) / 2


def hermitian_basis(n: int) -> NDArray[np.complex128]:
    """
    Orthonormal basis of n x n Hermitian matrices under (A, B) -> Re Tr(AB).

    Returns:
        Array of shape (n*n, n, n)
    """
    basis = []
    for j in range(n):
        e = np.zeros((n, n), dtype=np.complex128)
        e[j, j] = 1.0
        basis.append(e)
    for j in range(n):
        for k in range(j + 1, n):
            sym = np.zeros((n, n), dtype=np.complex128)
            sym[j, k] = sym[k, j] = 1.0 / math.sqrt(2.0)
            basis.append(sym)
            anti = np.zeros((n, n), dtype=np.complex128)
            anti[j, k] = 1j / math.sqrt(2.0)
            anti[k, j] = -1j / math.sqrt(2.0)
            basis.append(anti)
    return np.stack(basis)


LinearTerm = Callable[[NDArray[Any]], ArrayLike]


class SdpBuilder:
    """
    Assemble an SdpProblem from matrix-valued affine equality constraints.

    Each constraint sum_k L_k(X_k) = R, with L_k a Hermiticity-preserving
    linear map and R Hermitian, is scalarised over an orthonormal Hermitian
    basis of the target space.
    """

    def __init__(self, sense: Sense = Sense.MINIMIZE, name: str = "") -> None:
        self.sense = sense
        self.name = name
        self._blocks: list[ConeBlock] = []
        self._objective: list[NDArray[Any]] = []
        self._constraints: list[EqualityConstraint] = []

    def _add_block(self, kind: ConeKind, size: int, name: str) -> int:
        if size < 1:
            raise ValidationError(f"Block size must be positive, got {size}")
        self._blocks.append(ConeBlock(kind, size, name))
        if kind is ConeKind.PSD:
            self._objective.append(np.zeros((size, size), dtype=np.complex128))
        else:
            self._objective.append(np.zeros(size))
        return len(self._blocks) - 1

    def add_psd(self, size: int, name: str = "") -> int:
        """Add a size x size Hermitian PSD block and return its index."""
        return self._add_block(ConeKind.PSD, size, name)

    def add_nonneg(self, size: int, name: str = "") -> int:
        """Add a nonnegative vector block and return its index."""
        return self._add_block(ConeKind.NONNEG, size, name)

    def set_objective(self, block: int, coeff: ArrayLike) -> None:
        """Set the objective coefficient of one block."""
        self._objective[block] = np.asarray(coeff)

    def _domain_basis(self, block: int) -> NDArray[Any]:
        spec = self._blocks[block]
        if spec.kind is ConeKind.PSD:
            return hermitian_basis(spec.size)
        return np.eye(spec.size)

    def add_equality(self, terms: Mapping[int, LinearTerm], rhs: ArrayLike) -> int:
        """
        Add the constraint sum_k terms[k](X_k) = rhs.

        Args:
            terms: Linear map per block, returning a Hermitian matrix of rhs shape
            rhs: Hermitian right-hand side, or a scalar

        Returns:
            Number of scalar constraints added
        """
        target = np.atleast_2d(np.asarray(rhs, dtype=np.complex128))
        target = validate_hermitian(target)
        r = target.shape[0]
        h_basis = hermitian_basis(r)
        rows: list[dict[int, NDArray[Any]]] = [{} for _ in range(len(h_basis))]

        for k, term in terms.items():
            g_basis = self._domain_basis(k)
            images = np.stack(
                [np.atleast_2d(np.asarray(term(g), dtype=np.complex128)) for g in g_basis]
            )
            if images.shape[1:] != (r, r):
                raise DimensionMismatch(
                    f"Term for block {k} maps to {images.shape[1:]}, expected {(r, r)}"
                )
            # m[i, s] = Re Tr(H_i L(G_s))
            m = np.real(np.einsum("iab,sba->is", h_basis, images))
            for i in range(len(h_basis)):
                rows[i][k] = np.tensordot(m[i], g_basis, axes=1)

        rhs_values = np.real(np.einsum("iab,ba->i", h_basis, target))
        added = 0
        for row, b in zip(rows, rhs_values, strict=True):
            if all(np.max(np.abs(c)) == 0.0 for c in row.values()):
                if abs(b) > 0.0:
                    raise ValidationError("Constraint row is identically zero with nonzero rhs")
                continue
            self._constraints.append(EqualityConstraint(row, float(b)))
            added += 1
        return added

    def build(self) -> SdpProblem:
        """Freeze the accumulated blocks and constraints into an SdpProblem."""
        return SdpProblem(
            blocks=tuple(self._blocks),
            objective=tuple(self._objective),
            constraints=tuple(self._constraints),
            sense=self.sense,
            name=self.name,
        )


def _stacked_data(problem: SdpProblem) -> list[NDArray[np.float64]]:
    """Per block, the constraint matrix with one row per equality, real-embedded."""
    m = len(problem.constraints)
    stacked = []
    for k, block in enumerate(problem.blocks):
        width = (2 * block.size) ** 2 if block.kind is ConeKind.PSD else block.size
        a = np.zeros((m, width))
        for i, con in enumerate(problem.constraints):
            coeff = con.coefficients.get(k)
            if coeff is None:
                continue
            if block.kind is ConeKind.PSD:
                a[i] = embed_complex(coeff).reshape(-1, order="F")
            else:
                a[i] = np.real(coeff)
        stacked.append(a)
    return stacked


def _solver_options(settings: SolverSettings) -> dict[str, Any]:
    if settings.solver == SOLVER_CLARABEL:
        return {
            "max_iter": settings.max_iterations,
            "tol_feas": settings.feas_tol / 10,
            "tol_gap_abs": settings.gap_tol / 100,
            "tol_gap_rel": settings.gap_tol / 100,
        }
    if settings.solver == SOLVER_SCS:
        return {
            "max_iters": SCS_MAX_ITERATIONS,
            "eps_abs": settings.feas_tol,
            "eps_rel": settings.feas_tol,
        }
    raise ValidationError(f"Unsupported solver {settings.solver!r}")


def _run(problem: cp.Problem, settings: SolverSettings, what: str) -> tuple[str, str]:
    """Solve a cvxpy problem, falling back to the secondary solver when the first raises."""
    solvers = [settings.solver]
    if settings.solver != FALLBACK_SOLVER:
        solvers.append(FALLBACK_SOLVER)
    for solver in solvers:
        try:
            problem.solve(solver=solver, **_solver_options(settings.with_solver(solver)))
        except cp.error.SolverError as err:
            _LOGGER.warning("%s: solver %s failed: %s", what, solver, err)
            continue
        _LOGGER.debug(
            "%s: %s status=%s value=%s iterations=%s",
            what,
            solver,
            problem.status,
            problem.value,
            problem.solver_stats.num_iters if problem.solver_stats else None,
        )
        return str(problem.status), solver
    return cp.SOLVER_ERROR, solvers[-1]


def _solve_primal(
    problem: SdpProblem, data: list[NDArray[np.float64]], sign: float, settings: SolverSettings
) -> tuple[SolverStatus, str, tuple[NDArray[Any], ...]]:
    variables: list[cp.Variable] = []
    lhs = []
    objective = []
    for k, block in enumerate(problem.blocks):
        if block.kind is ConeKind.PSD:
            var = cp.Variable((2 * block.size, 2 * block.size), PSD=True)
            flat = cp.reshape(var, ((2 * block.size) ** 2,), order="F")
            c = embed_complex(problem.objective[k]).reshape(-1, order="F") / 2
            lhs.append(data[k] @ flat / 2)
        else:
            var = cp.Variable(block.size, nonneg=True)
            flat = var
            c = problem.objective[k]
            lhs.append(data[k] @ flat)
        objective.append(sign * (c @ flat))
        variables.append(var)

    constraints = []
    if problem.constraints:
        b = np.array([con.rhs for con in problem.constraints])
        constraints.append(sum(lhs[1:], start=lhs[0]) == b)
    program = cp.Problem(cp.Minimize(sum(objective[1:], start=objective[0])), constraints)
    raw, solver = _run(program, settings, f"{problem.name or 'sdp'} primal")
    status = _CVXPY_STATUS.get(raw, SolverStatus.FAILED)

    points: list[NDArray[Any]] = []
    if status in (SolverStatus.OPTIMAL, SolverStatus.INACCURATE):
        for block, var in zip(problem.blocks, variables, strict=True):
            if var.value is None:
                return SolverStatus.FAILED, solver, ()
            if block.kind is ConeKind.PSD:
                points.append(extract_complex(var.value))
            else:
                points.append(np.asarray(var.value, dtype=np.float64))
    return status, solver, tuple(points)


def _solve_dual(
    problem: SdpProblem, data: list[NDArray[np.float64]], sign: float, settings: SolverSettings
) -> tuple[SolverStatus, NDArray[np.float64]]:
    m = len(problem.constraints)
    y = cp.Variable(m) if m else None
    constraints = []
    for k, block in enumerate(problem.blocks):
        if block.kind is ConeKind.PSD:
            size = 2 * block.size
            c = sign * embed_complex(problem.objective[k])
            combo = (
                cp.reshape(data[k].T @ y, (size, size), order="F") if y is not None else 0
            )
            slack = cp.Variable((size, size), PSD=True)
            diff = slack - (c - combo)
            constraints.append(cp.upper_tri(diff) == 0)
            constraints.append(cp.diag(diff) == 0)
        else:
            c = sign * problem.objective[k]
            combo = data[k].T @ y if y is not None else 0
            constraints.append(c - combo >= 0)

    if y is None:
        program = cp.Problem(cp.Maximize(0), constraints)
    else:
        b = np.array([con.rhs for con in problem.constraints])
        program = cp.Problem(cp.Maximize(b @ y), constraints)
    raw, _ = _run(program, settings, f"{problem.name or 'sdp'} dual")
    status = _CVXPY_STATUS.get(raw, SolverStatus.FAILED)
    if y is None:
        return status, np.zeros(0)
    if status not in (SolverStatus.OPTIMAL, SolverStatus.INACCURATE) or y.value is None:
        return status, np.zeros(0)
    return status, np.asarray(y.value, dtype=np.float64)


def primal_objective(problem: SdpProblem, point: Sequence[NDArray[Any]]) -> float:
    """Objective value sum_k Re Tr(C_k X_k) at a primal point."""
    total = 0.0
    for block, c, x in zip(problem.blocks, problem.objective, point, strict=True):
        if block.kind is ConeKind.PSD:
            total += float(np.real(np.trace(c @ x)))
        else:
            total += float(c @ x)
    return total


def primal_residual(problem: SdpProblem, point: Sequence[NDArray[Any]]) -> float:
    """Largest absolute equality-constraint violation at a primal point."""
    worst = 0.0
    for con in problem.constraints:
        value = 0.0
        for k, coeff in con.coefficients.items():
            if problem.blocks[k].kind is ConeKind.PSD:
                value += float(np.real(np.trace(coeff @ point[k])))
            else:
                value += float(np.real(coeff) @ point[k])
        worst = max(worst, abs(value - con.rhs))
    return worst


def dual_slack(problem: SdpProblem, y: NDArray[np.float64], sign: float) -> float:
    """Smallest eigenvalue (or entry) over blocks of sign * C_k - sum_i y_i A_ik."""
    worst = math.inf
    for k, block in enumerate(problem.blocks):
        s = sign * problem.objective[k]
        for yi, con in zip(y, problem.constraints, strict=True):
            coeff = con.coefficients.get(k)
            if coeff is not None:
                s = s - yi * coeff
        if block.kind is ConeKind.PSD:
            worst = min(worst, float(np.linalg.eigvalsh(s)[0]))
        else:
            worst = min(worst, float(np.min(np.real(s))))
    return worst


def solve(problem: SdpProblem, settings: SolverSettings | None = None) -> SdpSolution:
    """
    Solve a problem and its Lagrange dual.

    OPTIMAL requires a relative gap within settings.gap_tol, a primal residual
    within settings.feas_tol and dual slacks above -settings.feas_tol; a solve
    that misses any of these is reported as INACCURATE.

    Args:
        problem: Program to solve
        settings: Solver back end and tolerances

    Returns:
        SdpSolution; never raises for solver-side failures
    """
    settings = settings or SolverSettings()
    sign = -1.0 if problem.sense is Sense.MAXIMIZE else 1.0
    data = _stacked_data(problem)
    name = problem.name or "sdp"

    status, solver, point = _solve_primal(problem, data, sign, settings)
    if not point:
        _LOGGER.warning("%s: primal solve ended with status %s", name, status)
        nan = math.nan
        return SdpSolution(
            status=status, primal_value=nan, dual_value=nan, solver=solver, sense=problem.sense
        )

    dual_status, y = _solve_dual(problem, data, sign, settings)
    primal_value = primal_objective(problem, point)
    residual = primal_residual(problem, point)

    if y.size or not problem.constraints:
        b = np.array([con.rhs for con in problem.constraints])
        dual_value = sign * float(b @ y) if y.size else 0.0
        slack = dual_slack(problem, y, sign)
    else:
        dual_value = math.nan
        slack = -math.inf
    gap = abs(primal_value - dual_value)

    if status is SolverStatus.OPTIMAL:
        reasons = []
        if dual_status not in (SolverStatus.OPTIMAL, SolverStatus.INACCURATE):
            reasons.append(f"dual status {dual_status}")
        if not gap <= settings.gap_tol * (1.0 + abs(primal_value)):
            reasons.append(f"gap {gap:.3e}")
        if residual > settings.feas_tol:
            reasons.append(f"primal residual {residual:.3e}")
        if slack < -settings.feas_tol:
            reasons.append(f"dual slack {slack:.3e}")
        if reasons:
            status = SolverStatus.INACCURATE
            _LOGGER.warning("%s: accuracy targets missed (%s)", name, ", ".join(reasons))

    _LOGGER.debug(
        "%s: status=%s primal=%.12g dual=%.12g gap=%.3e residual=%.3e slack=%.3e",
        name,
        status,
        primal_value,
        dual_value,
        gap,
        residual,
        slack,
    )
    return SdpSolution(
        status=status,
        primal_value=primal_value,
        dual_value=dual_value,
        primal_point=point,
        dual_point=y,
        gap=gap,
        primal_residual=residual,
        dual_slack=slack,
        solver=solver,
        sense=problem.sense,
    )
