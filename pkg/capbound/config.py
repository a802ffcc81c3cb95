"""Run configuration: voluptuous schema and the immutable RunConfig."""

from __future__ import annotations

import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import voluptuous as vol
from numpy.typing import NDArray

from .const import (
    CERTIFIED_P_MAX,
    COMMAND_DEPOL_SWEEP,
    COMMANDS,
    CONF_CB_NORM,
    CONF_COMMAND,
    CONF_EPS1_RULE,
    CONF_FEAS_TOL,
    CONF_FORMAT,
    CONF_GAP_TOL,
    CONF_MAX_RETRIES,
    CONF_N_POINTS,
    CONF_OUTPUT_DIR,
    CONF_P_MAX,
    CONF_P_MIN,
    CONF_POINT_TIMEOUT,
    CONF_SAMPLE_NORMS,
    CONF_SEED,
    CONF_SOLVER,
    CONF_THREADS,
    CONF_TOLERANCES,
    DEFAULT_FEAS_TOL,
    DEFAULT_EPS1_RULE,
    DEFAULT_GAP_TOL,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_MAX_RETRIES,
    DEFAULT_N_POINTS,
    DEFAULT_P_MAX,
    DEFAULT_P_MIN,
    DEFAULT_POINT_TIMEOUT,
    DEFAULT_SEED,
    DEFAULT_SOLVER,
    ENV_THREADS,
    EPS1_RULES,
    FORMAT_CSV,
    FORMATS,
    MAX_P_THETA,
    SUPPORTED_SOLVERS,
)
from .exceptions import ValidationError
from .sdp import SolverSettings

_LOGGER = logging.getLogger(__name__)

_POSITIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))

TOLERANCES_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_FEAS_TOL, default=DEFAULT_FEAS_TOL): _POSITIVE_FLOAT,
        vol.Optional(CONF_GAP_TOL, default=DEFAULT_GAP_TOL): _POSITIVE_FLOAT,
    }
)

RUN_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_COMMAND, default=COMMAND_DEPOL_SWEEP): vol.In(COMMANDS),
        vol.Optional(CONF_P_MIN, default=DEFAULT_P_MIN): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, max=MAX_P_THETA)
        ),
        vol.Optional(CONF_P_MAX, default=DEFAULT_P_MAX): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, max=MAX_P_THETA)
        ),
        vol.Optional(CONF_N_POINTS, default=DEFAULT_N_POINTS): vol.All(
            vol.Coerce(int), vol.Range(min=2)
        ),
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.Coerce(int),
        vol.Optional(CONF_TOLERANCES, default=dict): TOLERANCES_SCHEMA,
        vol.Optional(CONF_OUTPUT_DIR, default="."): vol.Coerce(Path),
        vol.Optional(CONF_FORMAT, default=FORMAT_CSV): vol.In(FORMATS),
        vol.Optional(CONF_THREADS): vol.Any(None, vol.All(vol.Coerce(int), vol.Range(min=1))),
        vol.Optional(CONF_SOLVER, default=DEFAULT_SOLVER): vol.All(
            vol.Upper, vol.In(SUPPORTED_SOLVERS)
        ),
        vol.Optional(CONF_POINT_TIMEOUT, default=DEFAULT_POINT_TIMEOUT): _POSITIVE_FLOAT,
        vol.Optional(CONF_MAX_RETRIES, default=DEFAULT_MAX_RETRIES): vol.All(
            vol.Coerce(int), vol.Range(min=0)
        ),
        vol.Optional(CONF_SAMPLE_NORMS, default=False): vol.Boolean(),
        vol.Optional(CONF_CB_NORM, default=False): vol.Boolean(),
        vol.Optional(CONF_EPS1_RULE, default=DEFAULT_EPS1_RULE): vol.All(
            vol.Lower, vol.In(EPS1_RULES)
        ),
    }
)


def default_threads() -> int:
    """Worker count from CAPBOUND_THREADS, falling back to the CPU count."""
    raw = os.environ.get(ENV_THREADS)
    if raw:
        try:
            threads = int(raw)
        except ValueError:
            _LOGGER.warning("Ignoring non-integer %s=%r", ENV_THREADS, raw)
        else:
            if threads >= 1:
                return threads
            _LOGGER.warning("Ignoring non-positive %s=%r", ENV_THREADS, raw)
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RunConfig:
    """Validated settings of one capbound run."""

    command: str = COMMAND_DEPOL_SWEEP
    p_min: float = DEFAULT_P_MIN
    p_max: float = DEFAULT_P_MAX
    n_points: int = DEFAULT_N_POINTS
    seed: int = DEFAULT_SEED
    feas_tol: float = DEFAULT_FEAS_TOL
    gap_tol: float = DEFAULT_GAP_TOL
    output_dir: Path = Path(".")
    output_format: str = FORMAT_CSV
    threads: int = 1
    solver: str = DEFAULT_SOLVER
    point_timeout: float = DEFAULT_POINT_TIMEOUT
    max_retries: int = DEFAULT_MAX_RETRIES
    sample_norms: bool = False
    cb_norm: bool = False
    eps1_rule: str = DEFAULT_EPS1_RULE

    def p_grid(self) -> NDArray[np.float64]:
        """Uniform grid of n_points values on [p_min, p_max]."""
        return np.linspace(self.p_min, self.p_max, self.n_points)

    def solver_settings(self, solver: str | None = None) -> SolverSettings:
        """Settings for every SDP of the run, optionally with another back end."""
        return SolverSettings(
            solver=solver or self.solver,
            feas_tol=self.feas_tol,
            gap_tol=self.gap_tol,
            max_iterations=DEFAULT_MAX_ITERATIONS,
        )

    def as_dict(self) -> dict[str, Any]:
        """Mapping accepted by load_config, used in report metadata."""
        return {
            CONF_COMMAND: self.command,
            CONF_P_MIN: self.p_min,
            CONF_P_MAX: self.p_max,
            CONF_N_POINTS: self.n_points,
            CONF_SEED: self.seed,
            CONF_TOLERANCES: {CONF_FEAS_TOL: self.feas_tol, CONF_GAP_TOL: self.gap_tol},
            CONF_OUTPUT_DIR: str(self.output_dir),
            CONF_FORMAT: self.output_format,
            CONF_THREADS: self.threads,
            CONF_SOLVER: self.solver,
            CONF_POINT_TIMEOUT: self.point_timeout,
            CONF_MAX_RETRIES: self.max_retries,
            CONF_SAMPLE_NORMS: self.sample_norms,
            CONF_CB_NORM: self.cb_norm,
            CONF_EPS1_RULE: self.eps1_rule,
        }


def load_config(data: Mapping[str, Any] | None = None) -> RunConfig:
    """
    Validate a configuration mapping and build a RunConfig.

    Args:
        data: Raw settings keyed by the CONF_* names; missing keys take defaults

    Returns:
        Immutable RunConfig

    Raises:
        ValidationError: schema violation or inconsistent p-grid
    """
    try:
        conf = RUN_CONFIG_SCHEMA(dict(data or {}))
    except vol.Invalid as err:
        raise ValidationError(f"Invalid configuration: {err}") from err

    if conf[CONF_P_MIN] >= conf[CONF_P_MAX]:
        raise ValidationError(
            f"p_min={conf[CONF_P_MIN]} must be smaller than p_max={conf[CONF_P_MAX]}"
        )
    if conf[CONF_P_MAX] > CERTIFIED_P_MAX:
        _LOGGER.warning(
            "p_max=%s exceeds %s; the capacity hypothesis is checked per point",
            conf[CONF_P_MAX],
            CERTIFIED_P_MAX,
        )

    threads = conf.get(CONF_THREADS) or default_threads()
    tolerances = conf[CONF_TOLERANCES]
    config = RunConfig(
        command=conf[CONF_COMMAND],
        p_min=conf[CONF_P_MIN],
        p_max=conf[CONF_P_MAX],
        n_points=conf[CONF_N_POINTS],
        seed=conf[CONF_SEED],
        feas_tol=tolerances[CONF_FEAS_TOL],
        gap_tol=tolerances[CONF_GAP_TOL],
        output_dir=conf[CONF_OUTPUT_DIR],
        output_format=conf[CONF_FORMAT],
        threads=threads,
        solver=conf[CONF_SOLVER],
        point_timeout=conf[CONF_POINT_TIMEOUT],
        max_retries=conf[CONF_MAX_RETRIES],
        sample_norms=conf[CONF_SAMPLE_NORMS],
        cb_norm=conf[CONF_CB_NORM],
        eps1_rule=conf[CONF_EPS1_RULE],
    )
    _LOGGER.debug("Loaded configuration: %s", config)
    return config
