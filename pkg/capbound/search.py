"""
Maximisation of state functionals over qubit density matrices.

A deterministic Bloch-ball grid (Fibonacci-sphere directions times a set of
radii) is evaluated in one batch, then the best grid points are refined with
scipy's Nelder-Mead on the Bloch vector, projected back into the unit ball.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

from .const import (
    SEARCH_DIRECTIONS,
    SEARCH_MAX_ITERATIONS,
    SEARCH_RADII,
    SEARCH_REFINEMENTS,
    SEARCH_SIMPLEX_STEP,
)
from .exceptions import ValidationError

_LOGGER = logging.getLogger(__name__)

_PAULIS = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)

BatchObjective = Callable[[NDArray[np.complex128]], NDArray[np.float64]]


@dataclass(frozen=True, eq=False)
class SearchResult:
    """Best value found by a state search and the state attaining it."""

    value: float
    state: NDArray[np.complex128]
    evaluations: int


def fibonacci_sphere(count: int) -> NDArray[np.float64]:
    """Return count nearly uniform unit vectors on the sphere, shape (count, 3)."""
    if count < 1:
        raise ValidationError(f"Need at least one direction, got {count}")
    golden = np.pi * (3.0 - np.sqrt(5.0))
    k = np.arange(count, dtype=np.float64)
    z = 1.0 - 2.0 * (k + 0.5) / count
    radius = np.sqrt(1.0 - z**2)
    phi = golden * k
    return np.stack([radius * np.cos(phi), radius * np.sin(phi), z], axis=1)


def bloch_to_density(r: NDArray[np.float64]) -> NDArray[np.complex128]:
    """Map Bloch vectors of shape (..., 3) to qubit density matrices (..., 2, 2)."""
    r = np.asarray(r, dtype=np.float64)
    return 0.5 * (np.eye(2, dtype=np.complex128) + np.tensordot(r, _PAULIS, axes=([-1], [0])))


def pauli_eigenstates() -> NDArray[np.complex128]:
    """Return the six pure eigenstates of X, Y and Z, shape (6, 2, 2)."""
    axes = np.concatenate([np.eye(3), -np.eye(3)])
    return bloch_to_density(axes)


def bloch_grid(
    directions: int = SEARCH_DIRECTIONS, radii: int = SEARCH_RADII
) -> NDArray[np.float64]:
    """Bloch vectors for every direction at radii 1/(radii-1), ..., 1, plus the origin."""
    shells = np.linspace(0.0, 1.0, radii)[1:]
    dirs = fibonacci_sphere(directions)
    points = (shells[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    return np.concatenate([np.zeros((1, 3)), points])


def _project(r: NDArray[np.float64]) -> NDArray[np.float64]:
    norm = float(np.linalg.norm(r))
    return r / norm if norm > 1.0 else r


def density_to_bloch(rho: NDArray[np.complex128]) -> NDArray[np.float64]:
    """Bloch vectors of qubit density matrices of shape (..., 2, 2)."""
    return np.real(np.einsum("kab,...ba->...k", _PAULIS, rho))


def refine_bloch(
    objective: BatchObjective,
    starts: NDArray[np.float64],
    max_iterations: int = SEARCH_MAX_ITERATIONS,
) -> SearchResult:
    """
    Nelder-Mead refinement on Bloch vectors from each start, keeping the best.

    Points leaving the unit ball are projected back onto it before evaluation.
    """

    def negated(x: NDArray[np.float64]) -> float:
        rho = bloch_to_density(_project(x))[None]
        return -float(np.asarray(objective(rho))[0])

    best_value = -np.inf
    best_r = np.zeros(3)
    evaluations = 0
    for x0 in np.atleast_2d(starts):
        simplex = np.vstack([x0, x0 + SEARCH_SIMPLEX_STEP * np.eye(3)])
        result = minimize(
            negated,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": max_iterations,
                "initial_simplex": simplex,
                "xatol": 1e-9,
                "fatol": 1e-12,
            },
        )
        evaluations += int(result.nfev)
        if -result.fun > best_value:
            best_value = float(-result.fun)
            best_r = _project(np.asarray(result.x))
    return SearchResult(value=best_value, state=bloch_to_density(best_r), evaluations=evaluations)


def maximize_over_qubit_states(
    objective: BatchObjective,
    directions: int = SEARCH_DIRECTIONS,
    radii: int = SEARCH_RADII,
    refinements: int = SEARCH_REFINEMENTS,
    max_iterations: int = SEARCH_MAX_ITERATIONS,
) -> SearchResult:
    """
    Maximise a batched functional over qubit states.

    Args:
        objective: Maps a stack of density matrices (n, 2, 2) to n real values
        directions: Number of Fibonacci-sphere directions in the grid
        radii: Number of radii including the origin
        refinements: Number of best grid points refined with Nelder-Mead
        max_iterations: Nelder-Mead iteration cap per refinement

    Returns:
        SearchResult with the best value, state and evaluation count
    """
    grid = bloch_grid(directions, radii)
    values = np.asarray(objective(bloch_to_density(grid)), dtype=np.float64)
    order = np.argsort(values)[::-1][:refinements]
    refined = refine_bloch(objective, grid[order], max_iterations)

    evaluations = int(values.size) + refined.evaluations
    best_index = int(np.argmax(values))
    if refined.value > values[best_index]:
        best_value, best_r = refined.value, density_to_bloch(refined.state)
    else:
        best_value, best_r = float(values[best_index]), grid[best_index]

    _LOGGER.debug(
        "Qubit search: best value %.12g at r=%s after %d evaluations",
        best_value,
        np.round(best_r, 6),
        evaluations,
    )
    return SearchResult(value=best_value, state=bloch_to_density(best_r), evaluations=evaluations)
