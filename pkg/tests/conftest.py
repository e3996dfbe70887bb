"""Shared fixtures for the wiretap test suite."""

import pytest

from wiretap.models import ChannelParams, OptimizerConfig, QuadratureConfig, ShellPmf


@pytest.fixture
def quad_cfg():
    """Looser than the library default; keeps nested integrals quick."""
    return QuadratureConfig(rel_tol=1e-8, abs_tol=1e-11)


@pytest.fixture
def fast_opt_cfg():
    """Coarse KKT grid and tolerance for optimizer runs inside tests."""
    return OptimizerConfig(epsilon=1e-5, kkt_grid=60, ga_max_iters=40, ba_max_iters=200, inner_rounds=10)


@pytest.fixture
def scalar_params():
    """n = 1, (1, 1.5), R = 1: inside the low-amplitude regime (threshold 1.161)."""
    return ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=1, radius=1.0)


@pytest.fixture
def planar_params():
    """n = 2, (1, 1.5), R = 1: inside the low-amplitude regime (threshold 1.687)."""
    return ChannelParams(sigma1_sq=1.0, sigma2_sq=1.5, n=2, radius=1.0)


@pytest.fixture
def two_shells():
    return ShellPmf(radii=(0.3, 1.0), probs=(0.4, 0.6))
