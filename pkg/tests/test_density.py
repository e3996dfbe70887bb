"""Tests for the secrecy-density, its derivative and the G-function."""

import math

import numpy as np
import pytest

from wiretap.density import (
    SecrecyDensity,
    audit_g_function,
    count_sign_changes,
    divergence,
    g_function,
    g_function_floor,
    g_function_lower_bound,
    g_series,
    kl_point_vs_shell,
    mutual_information,
    xi,
    xi_prime,
    xi_series,
)
from wiretap.models import ChannelParams, ShellPmf
from wiretap.regime import sufficient_radius
from wiretap.validation import DegenerateNoiseGap, UnsupportedNorm


class TestSecrecyDensity:
    """Test Xi(t; P) for shell pmfs."""

    def test_equal_noise_is_zero(self, two_shells, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.0, n=2, radius=1.0)
        density = SecrecyDensity(two_shells, params, quad_cfg)
        assert density.trivial
        assert density.xi(0.4) == 0.0
        assert density.xi_prime(0.4) == 0.0

    def test_origin_not_above_radius_in_low_regime(self, planar_params, quad_cfg):
        """Single shell at R below the threshold: Xi(0) <= Xi(R)."""
        pmf = ShellPmf.single_shell(1.0)
        assert xi(0.0, pmf, planar_params, quad_cfg) <= xi(1.0, pmf, planar_params, quad_cfg)

    def test_derivative_vanishes_at_origin(self, two_shells, planar_params, quad_cfg):
        assert xi_prime(0.0, two_shells, planar_params, quad_cfg) == 0.0

    def test_derivative_matches_finite_difference(self, two_shells, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=2.0, n=2, radius=1.0)
        density = SecrecyDensity(two_shells, params, quad_cfg)
        h = 1e-4
        numeric = (density.xi(0.8 + h) - density.xi(0.8 - h)) / (2 * h)
        assert density.xi_prime(0.8) == pytest.approx(numeric, abs=1e-4)

    def test_single_channel_derivative_matches_finite_difference(self, two_shells, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=2.0, n=3, radius=1.0)
        density = SecrecyDensity(two_shells, params, quad_cfg)
        h = 1e-4
        numeric = (density.divergence(0.6 + h, 1.0) - density.divergence(0.6 - h, 1.0)) / (2 * h)
        assert density.divergence_prime(0.6, 1.0) == pytest.approx(numeric, abs=1e-4)

    def test_evaluate_with_derivative(self, two_shells, planar_params, quad_cfg):
        row = SecrecyDensity(two_shells, planar_params, quad_cfg).evaluate(0.5, with_derivative=True)
        assert row.t == 0.5
        assert row.derivative is not None

    def test_series_in_grid_order(self, two_shells, planar_params, quad_cfg):
        rows = xi_series([0.0, 0.5, 1.0], two_shells, planar_params, quad_cfg, threads=2)
        assert [r.t for r in rows] == [0.0, 0.5, 1.0]
        assert rows[0].derivative == 0.0

    def test_merged_shells_identical(self, planar_params, quad_cfg):
        """Duplicated radii with split mass canonicalize to the merged pmf."""
        merged = ShellPmf(radii=(0.5, 1.0), probs=(0.5, 0.5))
        split = ShellPmf.from_points([0.5, 0.5, 1.0], [0.25, 0.25, 0.5], radius=1.0)
        assert split == merged
        assert xi(0.7, split, planar_params, quad_cfg) == xi(0.7, merged, planar_params, quad_cfg)


class TestDivergence:
    """Test the single-channel divergence and mutual information."""

    def test_point_mass_at_origin_carries_no_information(self, quad_cfg):
        assert mutual_information(ShellPmf.single_shell(0.0), 1.0, 3, quad_cfg) == pytest.approx(0.0, abs=1e-6)

    def test_mutual_information_below_gaussian(self, quad_cfg):
        """Any law with E||X||^2 <= R^2 carries at most n/2 log(1 + R^2 / (n sigma^2))."""
        pmf = ShellPmf.single_shell(1.5)
        value = mutual_information(pmf, 1.0, 2, quad_cfg)
        assert 0 < value < math.log(1.0 + 1.5 ** 2 / 2.0)

    def test_divergence_nonnegative(self, two_shells, quad_cfg):
        for t in (0.0, 0.3, 1.0, 2.0):
            assert divergence(t, two_shells, 1.0, 2, quad_cfg) >= -1e-8

    def test_kl_point_matches_divergence(self, quad_cfg):
        """D(P_{x+Z} || P_{X_R+Z}) at ||x|| = R is the single-shell divergence at R."""
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=2, radius=1.0)
        closed = kl_point_vs_shell(1.0, 1.0, 1.0, params, quad_cfg)
        direct = divergence(1.0, ShellPmf.single_shell(1.0), 1.0, 2, quad_cfg)
        assert closed == pytest.approx(direct, abs=1e-5)

    def test_kl_point_identical_laws(self, planar_params, quad_cfg):
        assert kl_point_vs_shell(0.0, 0.0, 1.0, planar_params, quad_cfg) == 0.0

    def test_kl_point_rejects_other_norms(self, planar_params, quad_cfg):
        with pytest.raises(UnsupportedNorm):
            kl_point_vs_shell(0.5, 1.0, 1.0, planar_params, quad_cfg)


class TestGFunction:
    """Test G and its bounds."""

    def test_positive_far_out(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=4.0, n=3, radius=1.0)
        y = 50.0 * (params.radius + params.sigma2 * math.sqrt(params.n))
        assert g_function(y, params, quad_cfg) > 0

    def test_above_pointwise_lower_bound(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=4.0, n=3, radius=2.0)
        for y in (0.1, 1.0, 3.0, 10.0):
            assert g_function(y, params, quad_cfg) >= g_function_lower_bound(y, params) - 1e-8

    def test_lower_bound_above_floor(self):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=4.0, n=3, radius=2.0)
        for y in (0.1, 1.0, 3.0, 10.0):
            assert g_function_lower_bound(y, params) >= g_function_floor(params) - 1e-12

    def test_floor_nonnegative_below_sufficient_radius(self):
        r_star = sufficient_radius(1.0, 4.0, 3)
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=4.0, n=3, radius=0.9 * r_star)
        assert g_function_floor(params) >= 0

    def test_equal_noise_uses_no_smoothing(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.0, n=2, radius=1.0)
        assert g_function(1.3, params, quad_cfg) == pytest.approx(0.0, abs=1e-15)

    def test_reversed_noise_raises(self, quad_cfg):
        params = ChannelParams(sigma1_sq=2.0, sigma2_sq=1.0, n=1, radius=1.0)
        with pytest.raises(DegenerateNoiseGap):
            g_function(1.0, params, quad_cfg)

    def test_rejects_nonpositive_argument(self, planar_params, quad_cfg):
        with pytest.raises(ValueError):
            g_function(0.0, planar_params, quad_cfg)

    def test_series(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=4.0, n=3, radius=1.0)
        rows = g_series([0.5, 1.5], params, quad_cfg, threads=1)
        assert [r.y for r in rows] == [0.5, 1.5]
        assert all(r.value >= r.lower_bound - 1e-8 for r in rows)


class TestSignChanges:
    """Test the grid sign-change counter."""

    def test_single_crossing(self):
        assert count_sign_changes(lambda x: x - 1.0, (0.0, 2.0), grid_points=101) == 1

    def test_zero_function(self):
        assert count_sign_changes(lambda x: 0.0, (0.0, 2.0), grid_points=101) == 0

    def test_two_crossings(self):
        assert count_sign_changes(math.sin, (0.5, 9.0), grid_points=200, threads=1) == 2

    def test_refinement_finds_close_pair(self):
        """Two roots between neighbouring grid points are seen after refinement of a flip."""
        f = lambda x: (x - 1.0) * (x - 1.004) * (x - 1.5)
        assert count_sign_changes(f, (0.0, 2.0), grid_points=3) == 1
        assert count_sign_changes(f, (0.0, 2.0), grid_points=3, refine_points=500) == 3

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            count_sign_changes(math.sin, (0.0, 1.0), grid_points=1)


class TestAudit:
    """Test the G sign-change audit."""

    def test_nonnegative_below_sufficient_radius(self, quad_cfg):
        r_star = sufficient_radius(1.0, 4.0, 3)
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=4.0, n=3, radius=0.5 * r_star)
        audit = audit_g_function(params, quad_cfg, grid_points=120, threads=1)
        assert audit.nonnegative_expected
        assert audit.conjecture_holds
        assert audit.lower_bound_holds
        assert audit.min_value >= -1e-8

    @pytest.mark.slow
    def test_at_most_one_sign_change(self, quad_cfg):
        r_star = sufficient_radius(9.0, 9.61, 11)
        params = ChannelParams(sigma1_sq=9.0, sigma2_sq=9.61, n=11, radius=2.0 * r_star)
        audit = audit_g_function(params, quad_cfg, grid_points=400)
        assert audit.sign_changes <= 1
        assert audit.conjecture_holds
        assert not audit.nonnegative_expected
        assert np.isfinite(audit.min_value)
