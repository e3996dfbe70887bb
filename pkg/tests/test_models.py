"""Tests for the value types and their validators."""

import math

import pytest
from pydantic import ValidationError

from wiretap.models import (
    ChannelParams,
    KktReport,
    McEstimate,
    NoncentralChiSq,
    OptimizeRequest,
    QuadratureConfig,
    RadialExpectation,
    ShellPmf,
    SolverReport,
    UnitMode,
)


class TestChannelParams:
    """Test the problem-instance invariants."""

    def test_accepts_valid_instance(self):
        """All invariants hold for a degraded pair."""
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=2, radius=2.0)
        assert params.n == 2
        assert not params.degraded_direction
        assert params.order == 1.0

    def test_rejects_zero_variance(self):
        """A zero noise variance is a violation, reported by name."""
        with pytest.raises(ValidationError) as exc_info:
            ChannelParams(sigma1_sq=0.0, sigma2_sq=1.5, n=2, radius=2.0)
        assert "non_positive_variance" in str(exc_info.value)

    def test_reports_every_violation(self):
        """Variance, dimension and radius problems come back together."""
        with pytest.raises(ValidationError) as exc_info:
            ChannelParams(sigma1_sq=-1.0, sigma2_sq=1.0, n=0, radius=-1.0)
        message = str(exc_info.value)
        assert "non_positive_variance" in message
        assert "non_positive_dimension" in message
        assert "negative_radius" in message

    def test_reversed_noise_is_legal(self):
        """sigma1_sq >= sigma2_sq is accepted with the degraded-direction flag."""
        params = ChannelParams(sigma1_sq=2.0, sigma2_sq=1.0, n=4, radius=1.0)
        assert params.degraded_direction

    def test_with_radius_keeps_noise(self):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=4.0, n=3, radius=1.0)
        moved = params.with_radius(5.0)
        assert moved.radius == 5.0
        assert (moved.sigma1_sq, moved.sigma2_sq, moved.n) == (1.0, 4.0, 3)
        assert moved.sigma2 == 2.0

    def test_is_immutable(self):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=4.0, n=3, radius=1.0)
        with pytest.raises(ValidationError):
            params.radius = 2.0


class TestShellPmf:
    """Test shell pmf canonical form."""

    def test_single_shell(self):
        pmf = ShellPmf.single_shell(1.5)
        assert pmf.radii == (1.5,)
        assert pmf.probs == (1.0,)
        assert pmf.size == 1

    def test_rejects_unnormalized(self):
        """Probabilities must sum to one."""
        with pytest.raises(ValidationError) as exc_info:
            ShellPmf(radii=(0.0, 1.0), probs=(0.5, 0.6))
        assert "sum to 1" in str(exc_info.value)

    def test_rejects_unsorted_radii(self):
        with pytest.raises(ValidationError):
            ShellPmf(radii=(1.0, 0.5), probs=(0.5, 0.5))

    def test_rejects_negative_radius(self):
        with pytest.raises(ValidationError):
            ShellPmf(radii=(-0.5, 1.0), probs=(0.5, 0.5))

    def test_from_points_sorts_and_merges(self):
        """Near-duplicate radii merge, zero-mass shells drop, order is restored."""
        pmf = ShellPmf.from_points([1.0, 0.5, 0.5 + 1e-12, 0.8], [0.5, 0.2, 0.3, 0.0], radius=1.0)
        assert pmf.radii == (0.5, 1.0)
        assert pmf.probs[0] == pytest.approx(0.5)
        assert math.fsum(pmf.probs) == pytest.approx(1.0, abs=1e-15)

    def test_fits_constraint(self):
        pmf = ShellPmf(radii=(0.0, 2.0), probs=(0.5, 0.5))
        assert pmf.fits(ChannelParams(sigma1_sq=1.0, sigma2_sq=2.0, n=1, radius=2.0))
        assert not pmf.fits(ChannelParams(sigma1_sq=1.0, sigma2_sq=2.0, n=1, radius=1.5))

    def test_folded_support_size(self):
        """A scalar shell at r > 0 is the pair +-r; the origin counts once."""
        pmf = ShellPmf(radii=(0.0, 1.0, 2.0), probs=(0.2, 0.3, 0.5))
        assert pmf.folded_support_size() == 5

    def test_json_round_trip(self):
        pmf = ShellPmf(radii=(0.25, 1.75), probs=(0.375, 0.625))
        assert ShellPmf.model_validate_json(pmf.model_dump_json()) == pmf


class TestReports:
    """Test report consistency validators."""

    def test_converged_report_within_tolerance(self):
        report = SolverReport(value=1.0, residual=1e-6, iterations=10, converged=True, tolerance=1e-4)
        assert report.converged

    def test_converged_report_rejects_large_residual(self):
        with pytest.raises(ValidationError):
            SolverReport(value=1.0, residual=1e-2, iterations=10, converged=True, tolerance=1e-4)

    def test_kkt_verdict_must_match_violations(self):
        """valid=True with a violation above epsilon is inconsistent."""
        with pytest.raises(ValidationError) as exc_info:
            KktReport(valid=True, worst_support_violation=0.0, worst_interior_violation=1e-3,
                      argmax_t=0.0, xi_at_radius=0.2, epsilon=1e-6)
        assert "valid" in str(exc_info.value)

    def test_kkt_invalid_report(self):
        report = KktReport(valid=False, worst_support_violation=0.0, worst_interior_violation=1e-3,
                           argmax_t=0.0, xi_at_radius=0.2, epsilon=1e-6)
        assert not report.valid


class TestNumericalTypes:
    """Test the smaller value types."""

    def test_noncentral_chi_square_moments(self):
        law = NoncentralChiSq(dof=4, ncp=3.0)
        assert law.mean == 7.0
        assert law.variance == 20.0

    def test_noncentral_chi_square_rejects_zero_dof(self):
        with pytest.raises(ValidationError):
            NoncentralChiSq(dof=0, ncp=1.0)

    def test_radial_expectation_ncp(self):
        assert RadialExpectation(dof=3, shift=2.0, scale=0.5).ncp == 8.0

    def test_radial_expectation_rejects_zero_scale(self):
        with pytest.raises(ValidationError):
            RadialExpectation(dof=3, shift=2.0, scale=0.0)

    def test_quadrature_config_rejects_zero_tolerance(self):
        with pytest.raises(ValidationError):
            QuadratureConfig(rel_tol=0.0)

    def test_bits_conversion(self):
        assert UnitMode.BITS.convert(math.log(2.0)) == pytest.approx(1.0)
        assert UnitMode.NATS.convert(0.7) == 0.7

    def test_mc_estimate_agreement(self):
        estimate = McEstimate(mean=1.0, std_error=0.01, samples=10_000, seed=0)
        assert estimate.agrees_with(1.03)
        assert not estimate.agrees_with(1.05)

    def test_optimize_request_rejects_tiny_grid(self):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=2.0, n=1, radius=1.0)
        with pytest.raises(ValidationError):
            OptimizeRequest(params=params, kkt_grid=1)
