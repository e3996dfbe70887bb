"""Tests for the alternating optimizer and its KKT certificate."""

import numpy as np
import pytest

from wiretap.density import SecrecyDensity
from wiretap.models import ChannelParams, KktReport, OptimizerConfig, ShellPmf
from wiretap.optimizer import (
    add_point,
    blahut_arimoto_step,
    gradient_ascent_step,
    kkt_validate,
    optimize,
    secrecy_information,
)
from wiretap.regime import capacity_avg_power, capacity_low_amplitude
from wiretap.validation import NonConvergence, ParamsValidationError, TooManyPoints


def failing_report(argmax_t: float) -> KktReport:
    return KktReport(valid=False, worst_support_violation=0.0, worst_interior_violation=1e-2,
                     argmax_t=argmax_t, xi_at_radius=0.1, epsilon=1e-6)


class TestSecrecyInformation:
    """Test the objective I(X;Y1) - I(X;Y2)."""

    def test_equal_noise(self, two_shells, quad_cfg):
        params = ChannelParams(sigma1_sq=1.5, sigma2_sq=1.5, n=2, radius=1.0)
        assert secrecy_information(two_shells, params, quad_cfg) == 0.0

    def test_single_shell_matches_low_amplitude_capacity(self, planar_params, quad_cfg):
        value = secrecy_information(ShellPmf.single_shell(1.0), planar_params, quad_cfg)
        assert value == pytest.approx(capacity_low_amplitude(planar_params, quad_cfg), abs=1e-5)


class TestGradientAscentStep:
    """Test the projected radii update."""

    def test_pinned_single_shell_unchanged(self, planar_params, quad_cfg):
        """The outer shell is held at R, so a single shell has nothing to move."""
        pmf = ShellPmf.single_shell(1.0)
        step = gradient_ascent_step(pmf, planar_params, cfg=quad_cfg)
        assert step.pmf == pmf
        assert step.step_size == 0.0
        assert step.objective_after == step.objective_before

    def test_accepted_step_does_not_decrease(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=1, radius=2.0)
        pmf = ShellPmf(radii=(0.6, 2.0), probs=(0.5, 0.5))
        step = gradient_ascent_step(pmf, params, cfg=quad_cfg)
        assert step.objective_after >= step.objective_before
        assert step.pmf.max_radius == 2.0
        assert step.pmf.fits(params)


class TestBlahutArimotoStep:
    """Test the exponential tilting of the probabilities."""

    def test_single_shell_unchanged(self, planar_params, quad_cfg):
        pmf = ShellPmf.single_shell(1.0)
        assert blahut_arimoto_step(pmf, planar_params, cfg=quad_cfg) == pmf

    def test_tilts_towards_larger_density(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=1, radius=2.0)
        pmf = ShellPmf(radii=(0.0, 2.0), probs=(0.5, 0.5))
        values = [SecrecyDensity(pmf, params, quad_cfg).xi(r) for r in pmf.radii]
        favoured = int(np.argmax(values))
        updated = blahut_arimoto_step(pmf, params, OptimizerConfig(ba_max_iters=1), quad_cfg)
        assert updated.probs[favoured] > 0.5

    def test_converged_probabilities_equalize_density(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=1, radius=2.0)
        pmf = ShellPmf(radii=(0.0, 2.0), probs=(0.5, 0.5))
        updated = blahut_arimoto_step(pmf, params, OptimizerConfig(ba_max_iters=2000, ba_tol=1e-10), quad_cfg)
        assert updated.size == 2
        density = SecrecyDensity(updated, params, quad_cfg)
        assert density.xi(0.0) == pytest.approx(density.xi(2.0), abs=1e-5)


class TestKktValidate:
    """Test the epsilon-KKT certificate."""

    def test_single_shell_valid_below_threshold(self, scalar_params, quad_cfg):
        report = kkt_validate(ShellPmf.single_shell(1.0), scalar_params, epsilon=1e-6, kkt_grid=40, cfg=quad_cfg)
        assert report.valid
        assert report.worst_support_violation == 0.0
        assert report.xi_at_radius > 0

    def test_single_shell_invalid_above_threshold(self, quad_cfg):
        """At 1.5 times the threshold the single shell fails with an interior maximizer."""
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=1, radius=1.5 * 1.161)
        report = kkt_validate(ShellPmf.single_shell(params.radius), params, epsilon=1e-6, kkt_grid=40, cfg=quad_cfg)
        assert not report.valid
        assert report.worst_interior_violation > 1e-6
        assert report.argmax_t < params.radius

    def test_trivial_instance(self, two_shells, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.0, n=2, radius=1.0)
        assert kkt_validate(two_shells, params, cfg=quad_cfg).valid

    def test_defaults_come_from_given_config(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=1, radius=1.5 * 1.161)
        opt_cfg = OptimizerConfig(epsilon=0.5, kkt_grid=20)
        report = kkt_validate(ShellPmf.single_shell(params.radius), params, cfg=quad_cfg, opt_cfg=opt_cfg)
        assert report.epsilon == 0.5
        assert report.valid == (report.worst_interior_violation <= 0.5)

    def test_explicit_epsilon_overrides_config(self, scalar_params, quad_cfg):
        opt_cfg = OptimizerConfig(epsilon=0.5, kkt_grid=20)
        report = kkt_validate(ShellPmf.single_shell(1.0), scalar_params, epsilon=1e-6, cfg=quad_cfg, opt_cfg=opt_cfg)
        assert report.epsilon == 1e-6

    @pytest.mark.filterwarnings("error:In future, it will be an error for .np.bool.:DeprecationWarning")
    def test_report_holds_python_scalars(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=1, radius=1.5 * 1.161)
        pmf = ShellPmf.single_shell(params.radius)
        report = kkt_validate(pmf, params, epsilon=1e-6, kkt_grid=40, cfg=quad_cfg)
        assert type(report.valid) is bool
        assert type(report.xi_at_radius) is float
        assert type(report.worst_support_violation) is float
        assert type(SecrecyDensity(pmf, params, quad_cfg).xi(0.5)) is float


class TestAddPoint:
    """Test the shell insertion rule."""

    def test_adds_shell_at_origin(self):
        pmf = add_point(ShellPmf.single_shell(2.0), failing_report(0.0))
        assert pmf.radii == (0.0, 2.0)
        assert pmf.probs == (0.5, 0.5)

    def test_existing_radius_resets_probabilities_only(self):
        pmf = ShellPmf(radii=(0.0, 2.0), probs=(0.2, 0.8))
        updated = add_point(pmf, failing_report(2.0))
        assert updated.radii == (0.0, 2.0)
        assert updated.probs == (0.5, 0.5)

    def test_cap_raises_with_partial(self):
        pmf = ShellPmf(radii=(0.0, 2.0), probs=(0.2, 0.8))
        with pytest.raises(TooManyPoints) as exc_info:
            add_point(pmf, failing_report(1.0), max_points=2)
        assert exc_info.value.partial == pmf


class TestOptimize:
    """Test the end-to-end optimizer."""

    def test_reversed_noise(self, fast_opt_cfg, quad_cfg):
        params = ChannelParams(sigma1_sq=2.0, sigma2_sq=1.0, n=2, radius=1.0)
        result = optimize(params, fast_opt_cfg, quad_cfg)
        assert result.capacity == 0.0
        assert result.kkt.valid

    def test_low_amplitude_single_shell(self, scalar_params, fast_opt_cfg, quad_cfg):
        result = optimize(scalar_params, fast_opt_cfg, quad_cfg, threads=1)
        assert result.pmf == ShellPmf.single_shell(1.0)
        assert result.points_added == 0
        assert not result.partial
        assert result.capacity == pytest.approx(capacity_low_amplitude(scalar_params, quad_cfg), abs=1e-5)

    def test_initial_pmf_outside_constraint(self, scalar_params, fast_opt_cfg, quad_cfg):
        with pytest.raises(ParamsValidationError):
            optimize(scalar_params, fast_opt_cfg, quad_cfg, initial=ShellPmf.single_shell(2.0))

    def test_point_cap_returns_partial(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=1, radius=1.75)
        opt_cfg = OptimizerConfig(epsilon=1e-5, kkt_grid=40, max_points=1)
        with pytest.raises(TooManyPoints) as exc_info:
            optimize(params, opt_cfg, quad_cfg, threads=1)
        partial = exc_info.value.partial
        assert partial.partial
        assert partial.pmf.size == 1
        assert not partial.kkt.valid

    @pytest.mark.slow
    def test_above_threshold_adds_inner_shell(self, fast_opt_cfg, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=1, radius=1.5)
        result = optimize(params, fast_opt_cfg, quad_cfg)
        assert result.kkt.valid
        assert result.pmf.size >= 2
        assert result.pmf.max_radius == 1.5
        assert result.pmf.radii[0] < 0.5 * params.radius
        single = secrecy_information(ShellPmf.single_shell(1.5), params, quad_cfg)
        assert single - 1e-6 <= result.capacity <= capacity_avg_power(1.0, 1.5, 1.5 ** 2, 1)

    @pytest.mark.slow
    def test_objective_nondecreasing_within_ascent_phases(self, fast_opt_cfg, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=2.0, n=1, radius=2.0)
        try:
            result = optimize(params, fast_opt_cfg, quad_cfg, threads=1)
        except (NonConvergence, TooManyPoints) as e:
            result = e.partial
        ascent = [p for p in result.trace if p.phase == "ascent"]
        assert ascent
        for prev, point in zip(result.trace, result.trace[1:]):
            same_phase = (prev.escalation, prev.round, prev.phase) == (point.escalation, point.round, point.phase)
            if same_phase and point.phase == "ascent":
                assert point.objective >= prev.objective - 1e-10
        for point in result.trace:
            assert 0.0 <= point.pmf.radii[0] and point.pmf.max_radius <= params.radius

    def test_trace_records_probability_updates(self, scalar_params, fast_opt_cfg, quad_cfg):
        result = optimize(scalar_params, fast_opt_cfg, quad_cfg, threads=1)
        assert result.trace
        assert result.trace[-1].phase == "probabilities"
        assert result.trace[-1].pmf == result.pmf
        assert result.trace[-1].objective == pytest.approx(result.capacity, abs=1e-8)

    @pytest.mark.slow
    def test_planar_certificate_at_tight_epsilon(self, quad_cfg):
        params = ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=2, radius=2.0 * 1.687)
        result = optimize(params, OptimizerConfig(epsilon=1e-6, kkt_grid=400), quad_cfg)
        assert result.kkt.valid
        assert result.kkt.epsilon == 1e-6
