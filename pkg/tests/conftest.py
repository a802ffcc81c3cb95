"""Pytest fixtures for capbound tests."""

from __future__ import annotations

import math
from typing import Any

import numpy as np
import pytest

from capbound.capacity import BoundReport, DegradabilityCertificate
from capbound.channels import ChoiChannel, amplitude_damping, depolarizing
from capbound.config import RunConfig
from capbound.const import DEFAULT_SEED
from capbound.sdp import SolverSettings


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a seeded random generator."""
    return np.random.default_rng(DEFAULT_SEED)


@pytest.fixture
def depolarizing_channel() -> ChoiChannel:
    """Create the qubit depolarizing channel at p = 0.1."""
    return depolarizing(0.1)


@pytest.fixture
def damping_channel() -> ChoiChannel:
    """Create the amplitude damping channel at gamma = 0.3 (degradable)."""
    return amplitude_damping(0.3)


@pytest.fixture
def solver_settings() -> SolverSettings:
    """Return default solver settings."""
    return SolverSettings()


@pytest.fixture
def run_config_data(tmp_path: Any) -> dict[str, Any]:
    """Return a small valid configuration mapping."""
    return {
        "command": "depol-sweep",
        "p_min": 0.0,
        "p_max": 0.02,
        "n_points": 5,
        "seed": 7,
        "output_dir": str(tmp_path),
        "threads": 1,
    }


@pytest.fixture
def run_config(tmp_path: Any) -> RunConfig:
    """Return a single-threaded RunConfig writing into tmp_path."""
    return RunConfig(
        p_min=0.0, p_max=0.02, n_points=5, seed=7, output_dir=tmp_path, threads=1
    )


# Helper functions for tests


def make_certificate(
    eps_diamond: float = 0.03, eps1: float = 0.02, nu: float = 0.01, d_env: int = 4
) -> DegradabilityCertificate:
    """Create a certificate without a degrading channel."""
    return DegradabilityCertificate(eps_diamond=eps_diamond, eps1=eps1, nu=nu, d_env=d_env)


def make_report(
    p: float,
    q1: float,
    corr_new: float | None = None,
    corr_previous: float | None = None,
    certificate: DegradabilityCertificate | None = None,
    error: str | None = None,
) -> BoundReport:
    """Create a BoundReport before envelope assembly."""
    return BoundReport(
        p=p,
        q1=q1,
        certificate=certificate,
        corr_quantum=corr_new,
        corr_sutter=corr_previous,
        error=error,
    )


def binary_entropy_ref(x: float) -> float:
    """Reference binary entropy in bits."""
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def assert_hermitian(m: np.ndarray, tol: float = 1e-10) -> None:
    """Assert that m equals its conjugate transpose."""
    assert np.allclose(m, m.conj().T, atol=tol)
