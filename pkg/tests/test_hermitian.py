"""Tests for dense Hermitian linear algebra."""

from __future__ import annotations

import logging

import numpy as np
import pytest

from capbound.exceptions import DimensionMismatch, ValidationError
from capbound.hermitian import (
    BipartiteLabel,
    eig_hermitian,
    maximally_entangled,
    operator_distance,
    partial_trace,
    partial_trace_multi,
    partial_transpose,
    random_densities,
    random_density,
    random_hermitian,
    schatten_norm,
    trace_distance,
    validate_density,
    validate_hermitian,
)

from .conftest import assert_hermitian


class TestValidation:
    """Test Hermitian and density validation."""

    def test_rejects_non_hermitian(self):
        """Test a matrix with an asymmetric off-diagonal is rejected."""
        with pytest.raises(ValidationError):
            validate_hermitian(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        """Test a rectangular matrix raises DimensionMismatch."""
        with pytest.raises(DimensionMismatch):
            validate_hermitian(np.zeros((2, 3)))

    def test_symmetrises_small_noise(self, caplog):
        """Test deviations below tolerance are symmetrised away and logged."""
        m = np.array([[1.0, 1e-13], [0.0, 2.0]])
        with caplog.at_level(logging.DEBUG, logger="capbound.hermitian"):
            out = validate_hermitian(m)
        assert_hermitian(out, tol=0.0)
        assert "Symmetrising matrix" in caplog.text

    def test_rejects_nan(self):
        """Test non-finite entries are rejected."""
        with pytest.raises(ValidationError):
            validate_hermitian(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_density_trace(self):
        """Test a density matrix must have unit trace."""
        with pytest.raises(ValidationError, match="trace"):
            validate_density(np.eye(2))

    def test_density_positivity(self):
        """Test a density matrix must be positive semidefinite."""
        with pytest.raises(ValidationError, match="negative"):
            validate_density(np.diag([1.5, -0.5]))


class TestSpectral:
    """Test eigendecomposition and norms."""

    def test_eig_descending_and_reconstructs(self):
        """Test eigenvalues are sorted descending and rebuild the matrix."""
        m = random_hermitian(5, seed=3)
        w, u = eig_hermitian(m)
        assert np.all(np.diff(w) <= 0)
        rebuilt = u @ np.diag(w) @ u.conj().T
        assert np.linalg.norm(rebuilt - m) <= 1e-10 * np.linalg.norm(m)

    def test_schatten_norms(self):
        """Test Schatten 1, 2 and inf norms of diag(3, -1)."""
        m = np.diag([3.0, -1.0])
        assert schatten_norm(m, 1) == pytest.approx(4.0)
        assert schatten_norm(m, 2) == pytest.approx(np.sqrt(10.0))
        assert schatten_norm(m, np.inf) == pytest.approx(3.0)

    def test_schatten_unsupported(self):
        """Test unsupported indices raise."""
        with pytest.raises(ValidationError):
            schatten_norm(np.eye(2), 3)

    def test_orthogonal_pure_states(self):
        """Test distances between |0><0| and |1><1|."""
        rho = np.diag([1.0, 0.0])
        sigma = np.diag([0.0, 1.0])
        assert trace_distance(rho, sigma) == pytest.approx(1.0)
        assert operator_distance(rho, sigma) == pytest.approx(1.0)

    def test_distance_shape_mismatch(self):
        """Test distances between different dimensions raise."""
        with pytest.raises(DimensionMismatch):
            trace_distance(np.eye(2) / 2, np.eye(3) / 3)


class TestPartialOperations:
    """Test partial traces and transposes."""

    def test_partial_trace_product(self):
        """Test both partial traces of X_B (x) Y_A."""
        x = random_hermitian(2, seed=1)
        y = random_hermitian(3, seed=2)
        label = BipartiteLabel(2, 3)
        m = np.kron(x, y)
        assert np.allclose(partial_trace(m, label, "A"), x * np.trace(y))
        assert np.allclose(partial_trace(m, label, "B"), np.trace(x) * y)

    def test_partial_trace_bad_subsystem(self):
        """Test unknown subsystems raise."""
        with pytest.raises(ValidationError):
            partial_trace(np.eye(4), BipartiteLabel(2, 2), "C")  # type: ignore[arg-type]

    def test_partial_trace_label_mismatch(self):
        """Test a matrix that does not match its label raises."""
        with pytest.raises(DimensionMismatch):
            partial_trace(np.eye(4), BipartiteLabel(2, 3), "A")

    def test_partial_trace_multi(self):
        """Test tracing the middle factor of a triple product."""
        a, b, c = (random_hermitian(d, seed=d) for d in (2, 3, 2))
        m = np.kron(np.kron(a, b), c)
        out = partial_trace_multi(m, (2, 3, 2), (0, 2))
        assert np.allclose(out, np.trace(b) * np.kron(a, c))

    def test_partial_trace_multi_everything(self):
        """Test tracing every factor returns the 1x1 trace."""
        m = random_hermitian(6, seed=4)
        out = partial_trace_multi(m, (2, 3), ())
        assert out.shape == (1, 1)
        assert out[0, 0] == pytest.approx(np.trace(m))

    def test_partial_trace_multi_invalid_keep(self):
        """Test unsorted kept factors raise."""
        with pytest.raises(ValidationError):
            partial_trace_multi(np.eye(6), (2, 3), (1, 0))

    def test_partial_transpose_product(self):
        """Test the A factor of a product is transposed."""
        b = random_hermitian(2, seed=5)
        a = random_hermitian(2, seed=6)
        out = partial_transpose(np.kron(b, a), BipartiteLabel(2, 2))
        assert np.allclose(out, np.kron(b, a.T))

    def test_entangled_partial_transpose_negative(self):
        """Test the maximally entangled state has a negative partial transpose."""
        omega = maximally_entangled(2)
        w = np.linalg.eigvalsh(partial_transpose(omega, BipartiteLabel(2, 2)))
        assert w[0] == pytest.approx(-0.5)

    def test_invalid_label(self):
        """Test non-positive dimensions are rejected."""
        with pytest.raises(ValidationError):
            BipartiteLabel(0, 2)


class TestSampling:
    """Test random state generation."""

    def test_random_densities_are_states(self, rng):
        """Test every sample is a density matrix."""
        states = random_densities(3, 20, rng)
        assert states.shape == (20, 3, 3)
        for rho in states:
            validate_density(rho)

    def test_random_density_deterministic(self):
        """Test the same seed gives the same state."""
        assert np.array_equal(random_density(4, seed=11), random_density(4, seed=11))

    def test_random_densities_invalid_dim(self, rng):
        """Test non-positive dimensions raise."""
        with pytest.raises(ValidationError):
            random_densities(0, 3, rng)
