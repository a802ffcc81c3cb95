"""Tests for capacity corrections and convex envelopes."""

from __future__ import annotations

import math

import numpy as np
import pytest

from capbound.capacity import (
    BoundReport,
    DegradabilityCertificate,
    cohinfo_gap_bound,
    comparison_curves,
    convex_envelope,
    corr_private,
    corr_private_cbnorm,
    corr_private_sutter,
    corr_quantum,
    corr_quantum_cbnorm,
    corr_sutter,
    envelope_resolution,
    lower_hull,
    private_capacity_bound,
    quantum_capacity_bound,
    s_phi_lambda_bound,
    theta_gamma,
)
from capbound.exceptions import DimensionMismatch, DomainError, ValidationError
from capbound.norms import NormBundle

from .conftest import binary_entropy_ref, make_certificate


def bosonic_g_ref(x: float) -> float:
    """Reference g(x) = (1 + x) log(1 + x) - x log x."""
    if x == 0.0:
        return 0.0
    return (1 + x) * math.log2(1 + x) - x * math.log2(x)


class TestCertificate:
    """Test the degradability certificate."""

    def test_derived_quantities(self):
        """Test beta, threshold and the hypothesis flag."""
        cert = make_certificate()
        assert cert.beta == pytest.approx(1.0)
        assert cert.threshold == pytest.approx(0.08 / 3.04)
        assert cert.hypothesis_ok

    def test_exactly_degradable(self):
        """Test beta is zero when eps_1 vanishes."""
        cert = make_certificate(0.0, 0.0, 0.0)
        assert cert.beta == 0.0
        assert cert.hypothesis_ok

    def test_tiny_negative_clamped(self):
        """Test solver noise below zero is clamped."""
        cert = make_certificate(eps_diamond=-1e-12)
        assert cert.eps_diamond == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eps_diamond": -0.1},
            {"eps1": math.nan},
            {"nu": math.inf},
            {"d_env": 0},
        ],
    )
    def test_invalid(self, kwargs):
        """Test negative, non-finite and dimensionless certificates are rejected."""
        with pytest.raises(ValidationError):
            make_certificate(**kwargs)

    def test_from_bundle(self):
        """Test eps_1 and nu take the larger sign."""
        bundle = NormBundle(
            diamond=0.03, m1_minus=0.02, m1_plus=0.015, minf_minus=0.01, minf_plus=0.005
        )
        cert = DegradabilityCertificate.from_bundle(bundle, d_env=4)
        assert (cert.eps_diamond, cert.eps1, cert.nu) == (0.03, 0.02, 0.01)
        data = cert.as_dict()
        assert data["d_env"] == 4
        assert data["hypothesis_ok"] is True

    def test_from_bundle_min_rule(self):
        """Test the min rule takes the smaller M_1 sign and keeps nu and the diamond norm."""
        bundle = NormBundle(
            diamond=0.03, m1_minus=0.03, m1_plus=0.025, minf_minus=0.01, minf_plus=0.012
        )
        cert = DegradabilityCertificate.from_bundle(bundle, d_env=4, eps1_rule="min")
        assert (cert.eps_diamond, cert.eps1, cert.nu) == (0.03, 0.025, 0.012)
        assert cert.beta == pytest.approx(0.024 / 0.025)
        assert corr_quantum(cert) < corr_quantum(
            DegradabilityCertificate.from_bundle(bundle, d_env=4)
        )


class TestCorrections:
    """Test the additive capacity corrections."""

    def test_quantum_correction_value(self):
        """Test corr_quantum against its closed form."""
        cert = make_certificate()
        expected = (
            0.01 * math.log2(3)
            + binary_entropy_ref(0.01)
            + 0.03 * 2
            + bosonic_g_ref(0.015)
        )
        assert corr_quantum(cert) == pytest.approx(expected, abs=1e-12)
        assert quantum_capacity_bound(0.3, cert) == pytest.approx(0.3 + expected)

    def test_private_offset(self):
        """Test corr_private exceeds corr_quantum by twice the diamond terms."""
        cert = make_certificate()
        offset = 2 * (0.03 * 2 + bosonic_g_ref(0.015))
        assert corr_private(cert) - corr_quantum(cert) == pytest.approx(offset, abs=1e-12)
        assert private_capacity_bound(0.1, cert) == pytest.approx(0.1 + corr_private(cert))

    def test_beta_one_recovers_single_distance(self):
        """Test nu = eps_1 / 2 and eps_1 = eps_diamond collapse to corr_sutter."""
        eps = 0.02
        cert = make_certificate(eps, eps, eps / 2)
        assert corr_quantum(cert) == pytest.approx(corr_sutter(eps, 4), abs=1e-12)

    def test_hypothesis_violation(self):
        """Test the correction is undefined when eps_1 exceeds the threshold."""
        cert = make_certificate(eps_diamond=0.03, eps1=0.02, nu=0.005, d_env=4)
        assert not cert.hypothesis_ok
        with pytest.raises(DomainError) as exc:
            corr_quantum(cert)
        assert exc.value.threshold == pytest.approx(0.0132450, abs=1e-7)
        with pytest.raises(DomainError):
            corr_private(cert)
        with pytest.raises(DomainError):
            cohinfo_gap_bound(cert)

    def test_zero_certificate(self):
        """Test an exactly degradable certificate needs no correction."""
        cert = make_certificate(0.0, 0.0, 0.0)
        assert corr_quantum(cert) == 0.0
        assert corr_private(cert) == 0.0

    def test_quantum_correction_nondecreasing(self):
        """Test corr_quantum grows in eps_1 and in eps_diamond with the others fixed."""
        nu, d_env = 0.01, 4
        eps1_max = 2 * nu * d_env / (nu * d_env + 3)
        by_eps1 = [
            corr_quantum(make_certificate(0.05, float(e), nu, d_env))
            for e in np.linspace(2 * nu, eps1_max, 200)
        ]
        by_diamond = [
            corr_quantum(make_certificate(float(e), 0.02, nu, d_env))
            for e in np.linspace(0.02, 0.5, 200)
        ]
        assert np.all(np.diff(by_eps1) >= -1e-12)
        assert np.all(np.diff(by_diamond) >= -1e-12)

    def test_cbnorm_value(self):
        """Test the diamond plus cb-norm correction at eps = nu = 0.04."""
        assert corr_quantum_cbnorm(0.04, 0.04, 4) == pytest.approx(0.4196053, abs=1e-5)

    def test_cbnorm_private_offset(self):
        """Test the private cb-norm correction triples the diamond terms."""
        offset = 2 * (0.04 * 2 + bosonic_g_ref(0.02))
        diff = corr_private_cbnorm(0.04, 0.04, 4) - corr_quantum_cbnorm(0.04, 0.04, 4)
        assert diff == pytest.approx(offset, abs=1e-12)

    def test_cbnorm_violation(self):
        """Test the cb-norm correction reports its threshold."""
        with pytest.raises(DomainError) as exc:
            corr_quantum_cbnorm(0.5, 0.1, 4)
        assert exc.value.threshold == pytest.approx(0.8 / 3.4)
        assert corr_quantum_cbnorm(0.0, 0.0, 4) == 0.0

    def test_single_distance(self):
        """Test corr_sutter and its private variant."""
        eps = 0.02
        expected = 0.01 * math.log2(3) + binary_entropy_ref(0.01) + eps * 2 + bosonic_g_ref(0.01)
        assert corr_sutter(eps, 4) == pytest.approx(expected, abs=1e-12)
        assert corr_private_sutter(eps, 4) - corr_sutter(eps, 4) == pytest.approx(
            2 * (eps * 2 + bosonic_g_ref(0.01)), abs=1e-12
        )
        assert corr_sutter(0.0, 4) == 0.0

    def test_single_distance_trivial_environment(self):
        """Test d_E = 1 drops the logarithmic terms."""
        assert corr_sutter(0.02, 1) == pytest.approx(binary_entropy_ref(0.01) + bosonic_g_ref(0.01))

    def test_s_phi_lambda_bound(self):
        """Test the conditional-entropy bound adds the diamond terms."""
        value = s_phi_lambda_bound(0.1, 0.02, 4)
        assert value == pytest.approx(0.1 + 0.04 + bosonic_g_ref(0.01))


class TestComparisonCurves:
    """Test the classical comparison curves."""

    def test_theta_gamma(self):
        """Test theta(0) = 1 and gamma(1/4) = 4(sqrt(3)/2 - 3/4)."""
        theta, gamma = theta_gamma(0.0)
        assert (theta, gamma) == (pytest.approx(1.0), pytest.approx(0.0))
        assert theta_gamma(0.25)[1] == pytest.approx(0.464102, abs=1e-6)

    def test_theta_domain(self):
        """Test p outside [0, 1/4] raises."""
        with pytest.raises(DomainError):
            theta_gamma(0.3)

    def test_curves_at_zero(self):
        """Test every comparison curve starts at one."""
        curves = comparison_curves([0.0, 0.1])
        assert set(curves) == {"one_minus_h", "theta", "one_minus_4p"}
        for values in curves.values():
            assert values[0] == pytest.approx(1.0)
        assert curves["one_minus_4p"][1] == pytest.approx(0.6)


class TestEnvelope:
    """Test the lower convex envelope."""

    def test_lower_hull_drops_collinear(self):
        """Test collinear interior points are removed."""
        assert lower_hull([0, 1, 2], [0, 1, 2]) == [(0.0, 0.0), (2.0, 2.0)]

    def test_bump_flattened(self):
        """Test a concave bump is replaced by its chord."""
        env = convex_envelope([0.0, 1.0, 2.0], [[0.0, 1.0, 0.0]])
        assert env == pytest.approx([0.0, 0.0, 0.0])

    def test_convex_curve_unchanged(self):
        """Test a convex curve is its own envelope."""
        grid = np.linspace(0, 1, 11)
        assert convex_envelope(grid, [grid**2]) == pytest.approx(grid**2)

    def test_pointwise_minimum(self):
        """Test the envelope lies below every curve."""
        grid = np.linspace(0.0, 0.25, 51)
        curves = comparison_curves(grid)
        env = convex_envelope(grid, curves)
        for values in curves.values():
            assert np.all(env <= values + 1e-12)
        assert np.all(np.diff(env, 2) >= -1e-12)

    def test_infinite_values_ignored(self):
        """Test +inf marks a curve as unavailable at that point."""
        env = convex_envelope([0.0, 1.0, 2.0], [[1.0, math.inf, 1.0], [5.0, 5.0, 5.0]])
        assert env == pytest.approx([1.0, 1.0, 1.0])

    def test_no_finite_value(self):
        """Test a point without any finite value raises."""
        with pytest.raises(ValidationError):
            convex_envelope([0.0, 1.0], [[1.0, math.inf]])

    @pytest.mark.parametrize("bad", [math.nan, -math.inf])
    def test_invalid_values(self, bad):
        """Test NaN and -inf are rejected."""
        with pytest.raises(ValidationError):
            convex_envelope([0.0, 1.0], [[1.0, bad]])

    def test_length_mismatch(self):
        """Test curves must match the grid."""
        with pytest.raises(DimensionMismatch):
            convex_envelope([0.0, 1.0], [[1.0, 2.0, 3.0]])

    def test_grid_not_increasing(self):
        """Test unsorted grids are rejected."""
        with pytest.raises(ValidationError):
            convex_envelope([0.0, 0.0], [[1.0, 2.0]])
        with pytest.raises(ValidationError):
            convex_envelope([0.0, 1.0], [])

    def test_resolution(self):
        """Test the L h / 2 resolution estimate."""
        assert envelope_resolution([0.0, 0.5, 1.0], [0.0, 1.0, 1.0]) == pytest.approx(0.5)
        assert envelope_resolution([0.0], [1.0]) == 0.0


class TestBoundReport:
    """Test the per-point report."""

    def test_missing_certificate(self):
        """Test a failed point reports NaN parameters and infinite raw bounds."""
        report = BoundReport(p=0.1, q1=-0.05, error="solver failed")
        assert math.isnan(report.eps1)
        assert math.isnan(report.beta)
        assert report.raw_new == math.inf
        assert report.raw_sutter == math.inf
        assert report.q1_floor == 0.0
        assert not report.hypothesis_ok

    def test_with_certificate(self):
        """Test parameters are read from the certificate."""
        cert = make_certificate()
        report = BoundReport(p=0.01, q1=0.8, certificate=cert, corr_quantum=0.1, corr_sutter=0.2)
        assert report.eps_diamond == pytest.approx(0.03)
        assert report.beta == pytest.approx(1.0)
        assert report.raw_new == pytest.approx(0.9)
        assert report.raw_sutter == pytest.approx(1.0)
        assert report.hypothesis_ok
