"""Tests for the built-in invariant suite."""

from __future__ import annotations

import logging
from unittest.mock import patch

import pytest

from capbound.config import RunConfig
from capbound.entropy import DistancePair, bound_fd
from capbound.selftest import (
    CHECKS,
    CheckResult,
    brute_force_entropy_gap,
    check_correction_identities,
    check_envelope,
    check_fd_attainability,
    check_fd_tightness,
    check_hermitian_core,
    check_sason_sharpening,
    run_selftest,
)


@pytest.fixture
def config() -> RunConfig:
    """Return a single-threaded configuration."""
    return RunConfig(threads=1)


class TestChecks:
    """Test individual checks."""

    @pytest.mark.parametrize(
        "check",
        [
            check_fd_tightness,
            check_sason_sharpening,
            check_correction_identities,
            check_envelope,
            check_hermitian_core,
        ],
    )
    def test_analytic_checks_pass(self, check, config):
        """Test the checks without solver calls pass."""
        passed, detail = check(True, config)
        assert passed, detail

    def test_registry(self):
        """Test only the brute-force search and the sweep are excluded from the quick subset."""
        names = [name for name, _, _ in CHECKS]
        assert len(names) == len(set(names))
        assert [name for name, _, quick in CHECKS if not quick] == [
            "fd_attainability",
            "depolarizing_sweep",
        ]

    def test_sason_detail_counts_pairs(self, config):
        """Test the Sason check reports strict and integer-ratio pairs separately."""
        passed, detail = check_sason_sharpening(True, config)
        assert passed, detail
        assert "0 not strict" in detail
        assert "0 integer pairs unequal" in detail

    def test_brute_force_never_exceeds_bound(self):
        """Test the penalised search stays below f_d and finds a positive gap."""
        pair = DistancePair(0.5, 0.25)
        found = brute_force_entropy_gap(4, pair, restarts=20, seed=3)
        assert 0.0 < found <= bound_fd(4, pair) + 1e-6

    @pytest.mark.slow
    def test_brute_force_attains_bound(self, config):
        """Test some d = 4 cell is reached within 1e-3 of f_d."""
        passed, detail = check_fd_attainability(False, config)
        assert passed, detail


class TestRunSelftest:
    """Test the suite runner."""

    def test_raising_check_fails(self, config, caplog):
        """Test a check that raises is reported as failed."""

        def boom(quick, cfg):
            raise RuntimeError("boom")

        checks = [("ok", lambda quick, cfg: (True, "fine"), True), ("boom", boom, True)]
        with patch("capbound.selftest.CHECKS", checks):
            with caplog.at_level(logging.ERROR, logger="capbound.selftest"):
                results = run_selftest(quick=True, config=config)

        assert [r.name for r in results] == ["ok", "boom"]
        assert isinstance(results[0], CheckResult)
        assert results[0].passed
        assert not results[1].passed
        assert results[1].detail == "RuntimeError: boom"
        assert "boom: FAIL" in caplog.text

    def test_quick_skips_slow_checks(self, config):
        """Test checks outside the quick subset are skipped."""
        checks = [
            ("fast", lambda quick, cfg: (True, "fast"), True),
            ("slow", lambda quick, cfg: (False, "slow"), False),
        ]
        with patch("capbound.selftest.CHECKS", checks):
            assert [r.name for r in run_selftest(quick=True, config=config)] == ["fast"]
            assert len(run_selftest(quick=False, config=config)) == 2

    @pytest.mark.slow
    def test_quick_suite_passes(self, config):
        """Test the quick suite passes on a correct installation."""
        results = run_selftest(quick=True, config=config)
        failed = [(r.name, r.detail) for r in results if not r.passed]
        assert not failed
