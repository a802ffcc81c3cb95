"""Tests for the norm and degradability programs."""

from __future__ import annotations

import numpy as np
import pytest

from capbound.channels import (
    HermitianMapDiff,
    amplitude_damping,
    channel_compose,
    channel_difference,
    completely_depolarizing,
    depolarizing,
    identity_channel,
    kraus_and_complementary,
    random_channel,
)
from capbound.exceptions import ValidationError
from capbound.hermitian import BipartiteLabel, maximally_entangled
from capbound.norms import (
    NormBundle,
    diamond_norm,
    diamond_norm_program,
    eps_phi,
    in_ppt2,
    m_infinity,
    m_infinity_dual,
    m_infinity_program,
    m_one,
    m_one_dual,
    m_one_program,
    norm_bundle,
    nu_phi,
    unstabilized_norm_sampling,
)
from capbound.sdp import solve


@pytest.fixture
def depolarizing_delta() -> HermitianMapDiff:
    """Difference of the depolarizing channels at p = 0.1 and q = 0.3."""
    return channel_difference(depolarizing(0.1), depolarizing(0.3))


class TestDiamondNorm:
    """Test the diamond norm program."""

    def test_depolarizing_difference(self, depolarizing_delta, solver_settings):
        """Test ||E_p - E_q||_diamond = 2|p - q|."""
        assert diamond_norm(depolarizing_delta, solver_settings) == pytest.approx(0.4, abs=1e-5)

    def test_identity_minus_replacer(self, solver_settings):
        """Test ||id - completely depolarizing||_diamond = 2(1 - 1/d^2) for a qubit."""
        delta = channel_difference(identity_channel(2), completely_depolarizing(2))
        assert diamond_norm(delta, solver_settings) == pytest.approx(1.5, abs=1e-5)

    def test_zero_difference(self, depolarizing_channel, solver_settings):
        """Test a channel has zero distance to itself."""
        delta = channel_difference(depolarizing_channel, depolarizing_channel)
        assert diamond_norm(delta, solver_settings) == pytest.approx(0.0, abs=1e-6)

    def test_program_structure(self, depolarizing_delta):
        """Test the program exposes its named blocks."""
        problem = diamond_norm_program(depolarizing_delta)
        assert problem.name == "diamond"
        assert problem.block_index("lambda") == 3
        assert problem.psd_dimension == 4 + 4 + 2


class TestUnstabilizedNorms:
    """Test the PPT relaxations and their duals."""

    @pytest.mark.parametrize("sign", [1, -1])
    def test_m_infinity_duality(self, depolarizing_delta, solver_settings, sign):
        """Test the hand-built dual of M_inf matches the primal."""
        primal = m_infinity(depolarizing_delta, sign, solver_settings)
        dual = m_infinity_dual(depolarizing_delta, sign, solver_settings)
        assert primal == pytest.approx(dual, abs=1e-5)

    @pytest.mark.parametrize("sign", [1, -1])
    def test_m_one_duality(self, depolarizing_delta, solver_settings, sign):
        """Test the hand-built dual of M_1 matches the primal."""
        primal = m_one(depolarizing_delta, sign, solver_settings)
        dual = m_one_dual(depolarizing_delta, sign, solver_settings)
        assert primal == pytest.approx(dual, abs=1e-5)

    def test_relaxations_bracket_sampling(self, depolarizing_delta, solver_settings):
        """Test the PPT upper bounds dominate the sampled lower bounds."""
        sampled_1 = unstabilized_norm_sampling(depolarizing_delta, 1, 200, seed=1)
        sampled_inf = unstabilized_norm_sampling(depolarizing_delta, np.inf, 200, seed=1)
        m1 = max(m_one(depolarizing_delta, s, solver_settings) for s in (1, -1))
        minf = max(m_infinity(depolarizing_delta, s, solver_settings) for s in (1, -1))
        assert m1 >= sampled_1 - 1e-6
        assert minf >= sampled_inf - 1e-6
        assert m1 <= 0.4 + 1e-5

    def test_m_infinity_sign_symmetry(self, depolarizing_delta, solver_settings):
        """Test M_inf(delta, +) equals M_inf(-delta, -)."""
        plus = m_infinity(depolarizing_delta, 1, solver_settings)
        flipped = m_infinity(-depolarizing_delta, -1, solver_settings)
        assert plus == pytest.approx(flipped, abs=1e-6)

    def test_m_infinity_depolarizing_value(self, depolarizing_delta, solver_settings):
        """Test max_sign M_inf(E_p - E_q) reaches (2/3)|p - q|."""
        minf = max(m_infinity(depolarizing_delta, s, solver_settings) for s in (1, -1))
        assert minf >= 2 * 0.2 / 3 - 1e-6

    def test_m_one_depolarizing_signs(self, depolarizing_delta, solver_settings):
        """Test M_1^+ = (4/3)|p - q| while M_1^- reaches the diamond norm 2|p - q|."""
        plus = m_one(depolarizing_delta, 1, solver_settings)
        minus = m_one(depolarizing_delta, -1, solver_settings)
        assert plus == pytest.approx(4 * 0.2 / 3, abs=1e-4)
        assert minus == pytest.approx(0.4, abs=1e-4)
        assert 4 * 0.2 / 3 - 1e-6 <= max(plus, minus) <= 0.4 + 1e-5

    def test_m_one_minus_attained_by_explicit_operator(self, depolarizing_delta):
        """Test W = (1 - Omega) / 2 lies in PPT_2 and gives -2 Tr(J W) = 2|p - q|."""
        label = BipartiteLabel(2, 2)
        w = (np.eye(4) - maximally_entangled(2)) / 2
        assert in_ppt2(w, label, rho=np.eye(2) / 2)
        value = -2 * np.real(np.trace(depolarizing_delta.choi @ w))
        assert value == pytest.approx(0.4, abs=1e-12)

    def test_m_infinity_optimizer_in_ppt2(self, depolarizing_delta, solver_settings):
        """Test the optimal sigma of M_inf passes the PPT_2 membership check."""
        problem = m_infinity_program(depolarizing_delta, 1)
        solution = solve(problem, solver_settings)
        assert solution.succeeded
        sigma = solution.primal_point[problem.block_index("sigma")]
        sigma = (sigma + sigma.conj().T) / 2
        assert in_ppt2(sigma, depolarizing_delta.label, tol=1e-6)

    @pytest.mark.parametrize("seed", [3, 11, 29])
    def test_sampled_infinity_below_half_trace(self, seed):
        """Test the sampled operator norm never exceeds half the sampled trace norm."""
        delta = channel_difference(
            random_channel(2, 3, 2, seed), random_channel(2, 3, 2, seed + 1)
        )
        sampled_1 = unstabilized_norm_sampling(delta, 1, 500, seed=seed)
        sampled_inf = unstabilized_norm_sampling(delta, np.inf, 500, seed=seed)
        assert 0.0 < sampled_inf <= sampled_1 / 2 + 1e-6

    def test_sign_checked(self, depolarizing_delta):
        """Test signs other than +1 and -1 are rejected."""
        with pytest.raises(ValidationError):
            m_one_program(depolarizing_delta, 2)

    def test_m_one_requires_traceless(self, depolarizing_channel):
        """Test M_1 refuses maps that do not annihilate the trace."""
        delta = HermitianMapDiff(2, 2, depolarizing_channel.choi)
        with pytest.raises(ValidationError):
            m_one_program(delta, 1)


class TestPPT2:
    """Test membership in the PPT_2 set."""

    def test_scaled_identity_member(self):
        """Test 1 / (d_B d_A) belongs to PPT_2."""
        label = BipartiteLabel(2, 2)
        assert in_ppt2(np.eye(4) / 4, label)

    def test_entangled_state_excluded(self):
        """Test the maximally entangled state fails the transpose condition."""
        assert not in_ppt2(maximally_entangled(2), BipartiteLabel(2, 2))

    def test_explicit_state(self):
        """Test W must be dominated by 1_B (x) rho."""
        label = BipartiteLabel(2, 2)
        w = np.kron(np.eye(2), np.diag([0.5, 0.0]))
        assert in_ppt2(w, label, rho=np.diag([0.5, 0.5]))
        assert not in_ppt2(w, label, rho=np.diag([0.0, 1.0]))


class TestSampling:
    """Test the sampling lower bounds."""

    def test_depolarizing_closed_forms(self, depolarizing_delta):
        """Test the sampled norms reach (4/3)|p - q| and (2/3)|p - q|."""
        assert unstabilized_norm_sampling(depolarizing_delta, 1, 200, seed=2) == pytest.approx(
            4 * 0.2 / 3, abs=1e-6
        )
        assert unstabilized_norm_sampling(
            depolarizing_delta, np.inf, 200, seed=2
        ) == pytest.approx(2 * 0.2 / 3, abs=1e-6)

    def test_general_dimension(self):
        """Test qutrit inputs use the general refinement and stay below the diamond norm."""
        delta = channel_difference(identity_channel(3), completely_depolarizing(3))
        value = unstabilized_norm_sampling(delta, 1, 50, seed=3, refinements=2)
        assert 0.0 < value <= 2 * (1 - 1 / 9) + 1e-9

    def test_unsupported_p(self, depolarizing_delta):
        """Test p other than 1 or inf is rejected."""
        with pytest.raises(ValidationError):
            unstabilized_norm_sampling(depolarizing_delta, 2)


class TestNormBundle:
    """Test the combined norm computation."""

    def test_depolarizing_bundle(self, depolarizing_delta, solver_settings):
        """Test the bundle is ordered and carries its gaps."""
        bundle = norm_bundle(depolarizing_delta, solver_settings, sample=True, samples=200)
        assert isinstance(bundle, NormBundle)
        assert bundle.ordering_holds()
        assert bundle.diamond == pytest.approx(0.4, abs=1e-5)
        assert bundle.eps1 >= bundle.eps1_min
        assert bundle.eps1 >= bundle.sampled_1 - 1e-6
        assert set(bundle.gaps) == {"diamond", "m1_minus", "m1_plus", "minf_minus", "minf_plus"}
        data = bundle.as_dict()
        assert data["nu"] == bundle.nu
        assert data["sampled_inf"] == bundle.sampled_inf

    def test_eps1_rules(self):
        """Test eps_1 takes the larger sign by default and the smaller one under "min"."""
        bundle = NormBundle(
            diamond=0.0021866,
            m1_minus=0.0021866,
            m1_plus=0.0021728,
            minf_minus=0.0010001,
            minf_plus=0.0010698,
        )
        assert bundle.eps1_by_rule() == bundle.eps1 == 0.0021866
        assert bundle.eps1_by_rule("min") == bundle.eps1_min == 0.0021728
        assert bundle.as_dict()["eps1_min"] == 0.0021728
        with pytest.raises(ValidationError):
            bundle.eps1_by_rule("mean")

    def test_known_diamond_skips_solve(self, depolarizing_delta, solver_settings):
        """Test a supplied diamond norm is used as is."""
        bundle = norm_bundle(depolarizing_delta, solver_settings, diamond=0.4)
        assert bundle.diamond == 0.4
        assert "diamond" not in bundle.gaps
        assert bundle.sampled_1 is None

    def test_zero_difference(self, depolarizing_channel, solver_settings):
        """Test a zero difference reports vanishing norms."""
        delta = channel_difference(depolarizing_channel, depolarizing_channel)
        bundle = norm_bundle(delta, solver_settings)
        assert bundle.diamond == pytest.approx(0.0, abs=1e-7)
        assert bundle.eps1 == pytest.approx(0.0, abs=1e-7)
        assert bundle.nu == pytest.approx(0.0, abs=1e-7)

    def test_requires_traceless(self, depolarizing_channel):
        """Test the bundle refuses maps that do not annihilate the trace."""
        with pytest.raises(ValidationError):
            norm_bundle(HermitianMapDiff(2, 2, depolarizing_channel.choi))


class TestDegradability:
    """Test the degradability parameters."""

    @pytest.mark.parametrize("phi", [identity_channel(2), amplitude_damping(0.3)])
    def test_degradable_channels(self, phi, solver_settings):
        """Test degradable channels have eps_phi close to zero."""
        result = eps_phi(phi, solver_settings)
        assert result.value <= 1e-6
        assert result.degrading.is_cptp

    def test_depolarizing_not_degradable(self, depolarizing_channel, solver_settings):
        """Test E_0.1 is strictly non-degradable and its degrading map fits the certificate."""
        result = eps_phi(depolarizing_channel, solver_settings)
        assert 0.0 < result.value < 2.0
        lam = result.degrading
        assert (lam.dim_in, lam.dim_out) == (2, 4)
        assert lam.is_cptp
        _, comp = kraus_and_complementary(depolarizing_channel)
        delta = channel_difference(comp, channel_compose(lam, depolarizing_channel))
        assert diamond_norm(delta, solver_settings) == pytest.approx(result.value, abs=1e-4)

    @pytest.mark.slow
    def test_nu_phi_degradable(self, damping_channel, solver_settings):
        """Test the cb-norm parameter vanishes for a degradable channel."""
        result = nu_phi(damping_channel, solver_settings)
        assert result.value <= 1e-6
        assert (result.degrading.dim_in, result.degrading.dim_out) == (2, 2)

    @pytest.mark.slow
    def test_nu_phi_bounded_by_diamond(self, depolarizing_channel, solver_settings):
        """Test the cb-norm parameter is positive and within the trivial range."""
        result = nu_phi(depolarizing_channel, solver_settings)
        assert 0.0 < result.value <= 2.0 + 1e-6
