"""Tests for run configuration."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pytest

from capbound.config import RunConfig, default_threads, load_config
from capbound.const import (
    CONF_FEAS_TOL,
    CONF_N_POINTS,
    CONF_P_MAX,
    CONF_P_MIN,
    CONF_SOLVER,
    CONF_THREADS,
    CONF_TOLERANCES,
    DEFAULT_FEAS_TOL,
    DEFAULT_GAP_TOL,
    DEFAULT_N_POINTS,
    ENV_THREADS,
    SOLVER_SCS,
)
from capbound.exceptions import ValidationError


class TestLoadConfig:
    """Test schema validation."""

    def test_defaults(self, monkeypatch):
        """Test an empty mapping yields the default sweep."""
        monkeypatch.setenv(ENV_THREADS, "3")
        config = load_config()
        assert config.n_points == DEFAULT_N_POINTS
        assert config.feas_tol == DEFAULT_FEAS_TOL
        assert config.gap_tol == DEFAULT_GAP_TOL
        assert config.threads == 3
        assert config.output_dir == Path(".")

    def test_valid_mapping(self, run_config_data, tmp_path):
        """Test a complete mapping is coerced into a RunConfig."""
        config = load_config(run_config_data)
        assert isinstance(config, RunConfig)
        assert config.p_max == 0.02
        assert config.seed == 7
        assert config.output_dir == tmp_path
        assert config.threads == 1

    def test_coercion(self, run_config_data):
        """Test strings are coerced and solver names upper-cased."""
        run_config_data[CONF_N_POINTS] = "11"
        run_config_data[CONF_SOLVER] = "scs"
        run_config_data[CONF_TOLERANCES] = {CONF_FEAS_TOL: "1e-6"}
        config = load_config(run_config_data)
        assert config.n_points == 11
        assert config.solver == SOLVER_SCS
        assert config.feas_tol == 1e-6
        assert config.gap_tol == DEFAULT_GAP_TOL

    @pytest.mark.parametrize(
        ("key", "value"),
        [
            (CONF_P_MAX, 0.3),
            (CONF_P_MIN, -0.01),
            (CONF_N_POINTS, 1),
            (CONF_SOLVER, "MOSEK"),
            (CONF_THREADS, 0),
            ("unknown", 1),
        ],
    )
    def test_invalid_values(self, run_config_data, key, value):
        """Test schema violations raise ValidationError."""
        run_config_data[key] = value
        with pytest.raises(ValidationError):
            load_config(run_config_data)

    def test_negative_tolerance(self, run_config_data):
        """Test tolerances must be positive."""
        run_config_data[CONF_TOLERANCES] = {CONF_FEAS_TOL: 0}
        with pytest.raises(ValidationError):
            load_config(run_config_data)

    def test_empty_range(self, run_config_data):
        """Test p_min must lie below p_max."""
        run_config_data[CONF_P_MIN] = 0.02
        with pytest.raises(ValidationError, match="p_min"):
            load_config(run_config_data)

    def test_uncertified_range_warns(self, run_config_data, caplog):
        """Test p_max beyond the certified range is accepted with a warning."""
        run_config_data[CONF_P_MAX] = 0.1
        with caplog.at_level(logging.WARNING, logger="capbound.config"):
            config = load_config(run_config_data)
        assert config.p_max == 0.1
        assert "exceeds" in caplog.text

    def test_round_trip(self, run_config):
        """Test as_dict is accepted by load_config."""
        assert load_config(run_config.as_dict()) == run_config


class TestRunConfig:
    """Test RunConfig helpers."""

    def test_grid(self, run_config):
        """Test the uniform p-grid."""
        assert run_config.p_grid() == pytest.approx(np.linspace(0.0, 0.02, 5))

    def test_solver_settings(self, run_config):
        """Test solver settings carry the tolerances and an optional override."""
        settings = run_config.solver_settings()
        assert settings.feas_tol == run_config.feas_tol
        assert run_config.solver_settings(SOLVER_SCS).solver == SOLVER_SCS


class TestDefaultThreads:
    """Test the worker-count environment variable."""

    def test_from_environment(self, monkeypatch):
        """Test a positive integer is used."""
        monkeypatch.setenv(ENV_THREADS, "5")
        assert default_threads() == 5

    @pytest.mark.parametrize("raw", ["many", "0", "-2"])
    def test_invalid_falls_back(self, monkeypatch, caplog, raw):
        """Test invalid values fall back to the CPU count with a warning."""
        monkeypatch.setenv(ENV_THREADS, raw)
        monkeypatch.setattr("capbound.config.os.cpu_count", lambda: 2)
        assert default_threads() == 2
        assert ENV_THREADS in caplog.text

    def test_unset(self, monkeypatch):
        """Test the CPU count is used when the variable is absent."""
        monkeypatch.delenv(ENV_THREADS, raising=False)
        monkeypatch.setattr("capbound.config.os.cpu_count", lambda: None)
        assert default_threads() == 1
