"""
Coordinator for the depolarizing-channel sweep.

This coordinator manages:
- Evaluating every grid point off the event loop (process pool or thread)
- Per-point timeouts and retries with the fallback solver
- Single-threaded aggregation of the convex envelopes
"""

from __future__ import annotations

import asyncio
import functools
import logging
from collections.abc import Sequence
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .capacity import (
    BoundReport,
    DegradabilityCertificate,
    comparison_curves,
    convex_envelope,
    corr_private,
    corr_quantum,
    corr_quantum_cbnorm,
    corr_sutter,
    envelope_resolution,
)
from .channels import (
    channel_compose,
    channel_difference,
    coherent_info_depolarizing,
    depolarizing,
    kraus_and_complementary,
    s_phi_lambda,
)
from .config import RunConfig
from .const import FALLBACK_SOLVER, MAX_P_THETA
from .exceptions import DomainError, SolverFailure, ValidationError
from .norms import eps_phi, norm_bundle, nu_phi

_LOGGER = logging.getLogger(__name__)


def evaluate_point(
    index: int, p: float, config: RunConfig, solver: str | None = None
) -> BoundReport:
    """
    Evaluate norms, corrections and S(Phi, Lambda) for one depolarizing parameter.

    Args:
        index: Position of p in the grid; the sampling seed is config.seed + index
        p: Depolarizing parameter
        config: Run configuration
        solver: Back end overriding config.solver

    Returns:
        BoundReport without envelope values; hypothesis failures are recorded
        in its error field

    Raises:
        SolverFailure: one of the programs could not be solved
    """
    settings = config.solver_settings(solver)
    phi = depolarizing(p)
    _, comp = kraus_and_complementary(phi)
    d_env = comp.dim_out
    q1 = coherent_info_depolarizing(p)

    eps = eps_phi(phi, settings, comp)
    lam = eps.degrading
    delta = channel_difference(comp, channel_compose(lam, phi))
    bundle = norm_bundle(
        delta, settings, sample=config.sample_norms, seed=config.seed + index
    )
    if d_env == 1:
        # Phi^c is the trace map, degraded exactly by Tr
        cert = DegradabilityCertificate(0.0, 0.0, 0.0, d_env, lam)
    else:
        cert = DegradabilityCertificate.from_bundle(bundle, d_env, lam, config.eps1_rule)

    error: str | None = None
    quantum: float | None = None
    private: float | None = None
    try:
        quantum = corr_quantum(cert)
        private = corr_private(cert)
    except DomainError as err:
        error = str(err)
        _LOGGER.warning("p=%.6g: capacity hypothesis fails (%s)", p, err)

    nu_cb: float | None = None
    cb_corr: float | None = None
    if config.cb_norm:
        nu_cb = nu_phi(phi, settings, comp).value
        try:
            cb_corr = corr_quantum_cbnorm(cert.eps_diamond, nu_cb, d_env)
        except DomainError as err:
            _LOGGER.info("p=%.6g: cb-norm correction unavailable (%s)", p, err)

    report = BoundReport(
        p=p,
        q1=q1,
        certificate=cert,
        norms=bundle,
        s_phi_lambda=s_phi_lambda(phi, lam),
        corr_quantum=quantum,
        corr_private=private,
        corr_sutter=corr_sutter(cert.eps_diamond, d_env),
        nu_cb=nu_cb,
        corr_quantum_cbnorm=cb_corr,
        error=error,
    )
    _LOGGER.debug(
        "p=%.6g: eps_d=%.6g eps1=%.6g nu=%.6g beta=%.6g",
        p,
        cert.eps_diamond,
        cert.eps1,
        cert.nu,
        cert.beta,
    )
    return report


def _check_sweep_grid(grid: ArrayLike) -> NDArray[np.float64]:
    p = np.asarray(grid, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise ValidationError("Sweep grid needs at least two points")
    if np.any(np.diff(p) <= 0):
        raise ValidationError("Sweep grid must be strictly increasing")
    if p[0] < 0 or p[-1] > MAX_P_THETA:
        raise ValidationError(f"Sweep grid must lie in [0, {MAX_P_THETA}]")
    return p


class SweepCoordinator:
    """Run evaluate_point over a p-grid concurrently and assemble the bounds."""

    def __init__(
        self,
        config: RunConfig,
        grid: ArrayLike | None = None,
        executor: Executor | None = None,
    ) -> None:
        """
        Initialize the coordinator.

        Args:
            config: Run configuration (threads, timeouts, retries, solver)
            grid: Sweep grid, defaults to config.p_grid()
            executor: Executor for point evaluations; created on setup when
                omitted and more than one worker is configured
        """
        self.config = config
        self.grid = _check_sweep_grid(config.p_grid() if grid is None else grid)
        self._executor = executor
        self._owns_executor = False
        self._semaphore = asyncio.Semaphore(config.threads)
        self.reports: list[BoundReport] = []

    async def async_setup(self) -> None:
        """Create the worker pool."""
        if self._executor is None and self.config.threads > 1:
            self._executor = ProcessPoolExecutor(max_workers=self.config.threads)
            self._owns_executor = True
        _LOGGER.info(
            "Sweep over %d points in [%s, %s] with %d worker(s)",
            self.grid.size,
            self.grid[0],
            self.grid[-1],
            self.config.threads,
        )

    async def async_shutdown(self) -> None:
        """Release the worker pool."""
        if self._executor is not None and self._owns_executor:
            self._executor.shutdown(wait=False, cancel_futures=True)
            self._executor = None
            self._owns_executor = False

    async def _run_point(self, index: int, p: float, solver: str | None) -> BoundReport:
        call = functools.partial(evaluate_point, index, p, self.config, solver)
        if self._executor is None:
            return await asyncio.to_thread(call)
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._executor, call)

    async def _evaluate(self, index: int, p: float, max_retries: int) -> BoundReport:
        """
        Evaluate one point with retry logic.

        The first attempt uses the configured solver, retries the fallback one.
        Any exception from the worker is recorded on the report. A timed-out
        attempt is abandoned, not interrupted: the thread or pool worker runs
        until the solver returns. async_shutdown cancels only queued jobs.

        Args:
            index: Grid index
            p: Depolarizing parameter
            max_retries: Number of retry attempts on failure

        Returns:
            BoundReport, with the error recorded when every attempt failed
        """
        last_error = "Unknown error evaluating point"
        solver: str | None = None

        async with self._semaphore:
            for attempt in range(max_retries + 1):
                try:
                    return await asyncio.wait_for(
                        self._run_point(index, p, solver), timeout=self.config.point_timeout
                    )
                except (TimeoutError, asyncio.TimeoutError):  # distinct before Python 3.11
                    last_error = f"timed out after {self.config.point_timeout}s"
                except (SolverFailure, ValidationError) as err:
                    last_error = str(err)
                except Exception as err:
                    _LOGGER.debug("Unexpected error at p=%.6g", p, exc_info=True)
                    last_error = f"{type(err).__name__}: {err}"
                if attempt < max_retries:
                    _LOGGER.warning(
                        "Retry %d/%d at p=%.6g: %s", attempt + 1, max_retries, p, last_error
                    )
                    solver = FALLBACK_SOLVER

        _LOGGER.error("Point p=%.6g failed: %s", p, last_error)
        return BoundReport(p=p, q1=coherent_info_depolarizing(p), error=last_error)

    async def async_run(self) -> list[BoundReport]:
        """
        Evaluate every grid point and assemble the envelopes.

        Returns:
            One BoundReport per grid point, in grid order
        """
        tasks = [
            self._evaluate(i, float(p), self.config.max_retries) for i, p in enumerate(self.grid)
        ]
        raw = await asyncio.gather(*tasks)
        self.reports = self.assemble(raw)
        failed = sum(r.error is not None for r in self.reports)
        _LOGGER.info("Sweep finished: %d points, %d with errors", len(self.reports), failed)
        return self.reports

    def assemble(self, reports: Sequence[BoundReport]) -> list[BoundReport]:
        """
        Fill in the convex envelopes of both bound curves.

        Points whose correction is unavailable are excluded from the respective
        curve; the comparison curves are defined everywhere.
        """
        curves = list(comparison_curves(self.grid).values())
        raw_new = np.array([r.raw_new for r in reports])
        raw_sutter = np.array([r.raw_sutter for r in reports])
        bound_new = convex_envelope(self.grid, [raw_new, *curves])
        bound_sutter = convex_envelope(self.grid, [raw_sutter, *curves])
        _LOGGER.debug(
            "Envelope resolution: new %.3e, previous %.3e",
            envelope_resolution(self.grid, bound_new),
            envelope_resolution(self.grid, bound_sutter),
        )
        return [
            replace(r, bound_new=float(n), bound_sutter=float(s))
            for r, n, s in zip(reports, bound_new, bound_sutter, strict=True)
        ]


async def async_depolarizing_sweep(
    config: RunConfig, grid: ArrayLike | None = None
) -> list[BoundReport]:
    """Run a SweepCoordinator to completion, releasing its pool afterwards."""
    coordinator = SweepCoordinator(config, grid)
    await coordinator.async_setup()
    try:
        return await coordinator.async_run()
    finally:
        await coordinator.async_shutdown()


def depolarizing_sweep(config: RunConfig, grid: ArrayLike | None = None) -> list[BoundReport]:
    """
    Upper bounds on the quantum capacity of the qubit depolarizing channel.

    Raises:
        ValidationError: grid outside [0, 1/4] or not strictly increasing
    """
    return asyncio.run(async_depolarizing_sweep(config, grid))
