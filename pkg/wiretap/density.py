"""Secrecy-density, its radial derivative, and the G-function.

For an isotropic input on shells rho_k with masses p_k, the density
Xi(t; P) = i_1(t) - i_2(t) where i_j(t) is the relative entropy between the
channel-j output given an input of norm t and the channel-j output law.
Both are one-dimensional noncentral chi-square integrals; the mixture inside
the logarithm is evaluated with log-sum-exp over shells.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .config import get_quadrature_config, map_ordered
from .expect import radial_expect, scale_integral
from .models import ChannelParams, DensityEval, GAudit, GEval, QuadratureConfig, ShellPmf
from .regime import sufficient_radius
from .specfun import bessel_ratio, log_ncx2_density
from .validation import DegenerateNoiseGap, UnsupportedNorm

logger = logging.getLogger("wiretap.density")

# Gaps sigma2_sq - sigma1_sq below this are treated as zero
NOISE_GAP_FLOOR = 1e-12


# =============================================================================
# Shell Mixtures
# =============================================================================

def _log_probs(pmf: ShellPmf) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(pmf.probs, dtype=float))


def mixture_log_terms(pmf: ShellPmf, n: int, sigma_sq: float, q: np.ndarray) -> np.ndarray:
    """log p_k + log f_{chi2_n(rho_k^2 / sigma_sq)}(q), shape (K, len(q))."""
    radii = np.asarray(pmf.radii, dtype=float)
    ncp = (radii * radii / sigma_sq)[:, None]
    return _log_probs(pmf)[:, None] + log_ncx2_density(n, ncp, np.asarray(q, dtype=float)[None, :])


def scaled_ratio(order: float, radius: np.ndarray, u: np.ndarray, s: float) -> np.ndarray:
    """(rho / u) h_order(rho u / s), continued by rho^2 / (2 order s) at u = 0."""
    radius, u = np.broadcast_arrays(np.asarray(radius, dtype=float), np.asarray(u, dtype=float))
    safe_u = np.where(u > 0, u, 1.0)
    ratio = bessel_ratio(order, np.asarray(radius * u / s))
    return np.where(u > 0, radius / safe_u * ratio, radius * radius / (2.0 * order * s))


# =============================================================================
# Secrecy Density
# =============================================================================

@dataclass
class SecrecyDensity:
    """Xi(.; P) and Xi'(.; P) for one pmf and one parameter set."""
    pmf: ShellPmf
    params: ChannelParams
    cfg: QuadratureConfig = field(default_factory=get_quadrature_config)

    @property
    def trivial(self) -> bool:
        """Equal noise: both divergences coincide and Xi vanishes."""
        return self.params.sigma1_sq == self.params.sigma2_sq

    def divergence(self, t: float, sigma_sq: float) -> float:
        """i(t): D(P_{Y | ||X|| = t} || P_Y) for a channel with noise variance sigma_sq."""
        n = self.params.n
        half = n / 2.0

        def integrand(u: np.ndarray) -> np.ndarray:
            q = u * u / sigma_sq
            log_mix = special.logsumexp(mixture_log_terms(self.pmf, n, sigma_sq, q), axis=0)
            if half == 1.0:
                return log_mix
            return log_mix - (half - 1.0) * np.log(q)

        mean_log = radial_expect(n, t, sigma_sq, integrand, self.cfg)
        return float(-mean_log - special.gammaln(half) - half * math.log(2.0 * math.e))

    def divergence_prime(self, t: float, sigma_sq: float) -> float:
        """d i / dt via the (n+2)-dimensional representation; 0 at t = 0."""
        if t == 0.0:
            return 0.0
        n = self.params.n
        order = n / 2.0
        radii = np.asarray(self.pmf.radii, dtype=float)

        def integrand(u: np.ndarray) -> np.ndarray:
            q = u * u / sigma_sq
            log_terms = mixture_log_terms(self.pmf, n, sigma_sq, q)
            weights = np.exp(log_terms - special.logsumexp(log_terms, axis=0, keepdims=True))
            gains = scaled_ratio(order, radii[:, None], u[None, :], sigma_sq) - 1.0
            return np.sum(weights * gains, axis=0)

        return float(-(t / sigma_sq) * radial_expect(n + 2, t, sigma_sq, integrand, self.cfg))

    def xi(self, t: float) -> float:
        if self.trivial:
            return 0.0
        return self.divergence(t, self.params.sigma1_sq) - self.divergence(t, self.params.sigma2_sq)

    def xi_prime(self, t: float) -> float:
        if self.trivial or t == 0.0:
            return 0.0
        return self.divergence_prime(t, self.params.sigma1_sq) - self.divergence_prime(t, self.params.sigma2_sq)

    def evaluate(self, t: float, with_derivative: bool = False) -> DensityEval:
        return DensityEval(t=t, value=self.xi(t), derivative=self.xi_prime(t) if with_derivative else None)


def xi(t: float, pmf: ShellPmf, params: ChannelParams, cfg: Optional[QuadratureConfig] = None) -> float:
    """Secrecy-density Xi(t; P) in nats."""
    return SecrecyDensity(pmf, params, cfg or get_quadrature_config()).xi(t)


def xi_prime(t: float, pmf: ShellPmf, params: ChannelParams, cfg: Optional[QuadratureConfig] = None) -> float:
    """Radial derivative of the secrecy-density."""
    return SecrecyDensity(pmf, params, cfg or get_quadrature_config()).xi_prime(t)


def divergence(t: float, pmf: ShellPmf, sigma_sq: float, n: int, cfg: Optional[QuadratureConfig] = None) -> float:
    """Single-channel term i(t) for noise variance sigma_sq."""
    params = ChannelParams(sigma1_sq=sigma_sq, sigma2_sq=sigma_sq, n=n, radius=pmf.max_radius)
    return SecrecyDensity(pmf, params, cfg or get_quadrature_config()).divergence(t, sigma_sq)


def mutual_information(pmf: ShellPmf, sigma_sq: float, n: int, cfg: Optional[QuadratureConfig] = None) -> float:
    """I(X; Y) = sum_k p_k i(rho_k) for Y = X + sqrt(sigma_sq) Z."""
    params = ChannelParams(sigma1_sq=sigma_sq, sigma2_sq=sigma_sq, n=n, radius=pmf.max_radius)
    density = SecrecyDensity(pmf, params, cfg or get_quadrature_config())
    return math.fsum(p * density.divergence(r, sigma_sq) for r, p in zip(pmf.radii, pmf.probs) if p > 0)


def xi_series(
    ts: Sequence[float],
    pmf: ShellPmf,
    params: ChannelParams,
    cfg: Optional[QuadratureConfig] = None,
    threads: Optional[int] = None,
) -> list[DensityEval]:
    """(t, Xi, Xi') rows over a grid, in grid order."""
    density = SecrecyDensity(pmf, params, cfg or get_quadrature_config())
    return map_ordered(lambda t: density.evaluate(float(t), with_derivative=True), ts, threads)


# =============================================================================
# Single-Shell Divergences
# =============================================================================

def kl_point_vs_shell(
    x_norm: float,
    radius: float,
    sigma_sq: float,
    params: ChannelParams,
    cfg: Optional[QuadratureConfig] = None,
) -> float:
    """D(P_{x + sqrt(sigma_sq) Z} || P_{X_R + sqrt(sigma_sq) Z}) for ||x|| in {0, R}.

    X_R is uniform on the sphere of radius R. Integrated over s in
    [sigma_sq, inf) as t = 1/s in [0, 1/sigma_sq].
    """
    cfg = cfg or get_quadrature_config()
    at_zero = x_norm == 0.0
    at_radius = abs(x_norm - radius) <= 1e-12 * max(radius, 1.0)
    if not (at_zero or at_radius):
        raise UnsupportedNorm(f"closed form exists only for ||x|| in {{0, R}} (got {x_norm}, R = {radius})")
    if radius == 0.0:
        return 0.0
    n = params.n
    order = n / 2.0
    shift = radius if at_radius else 0.0

    def psi(s: float) -> float:
        phi = lambda u: bessel_ratio(order, u * (radius / s)) ** 2
        mean_h2 = radial_expect(n, shift, s, phi, cfg)
        if at_radius:
            return 0.5 * radius * radius * (1.0 - mean_h2)
        return 0.5 * radius * radius * mean_h2

    return scale_integral(sigma_sq, math.inf, psi, cfg)


# =============================================================================
# G-Function
# =============================================================================

def g_function(y: float, params: ChannelParams, cfg: Optional[QuadratureConfig] = None) -> float:
    """G(y) = E[(R/||y+W||) h(R||y+W||/s2) - 1]/s2 - ((R/y) h(R y/s1) - 1)/s1.

    W ~ N(0, (sigma2_sq - sigma1_sq) I_{n+2}); W is taken as zero when the
    gap is below NOISE_GAP_FLOOR.
    """
    if not y > 0:
        raise ValueError(f"g_function needs y > 0 (got {y})")
    cfg = cfg or get_quadrature_config()
    s1, s2, radius = params.sigma1_sq, params.sigma2_sq, params.radius
    order = params.order
    gap = s2 - s1
    if gap < 0:
        raise DegenerateNoiseGap(f"sigma2_sq - sigma1_sq = {gap} < 0")

    def eve_gain(u: np.ndarray) -> np.ndarray:
        return scaled_ratio(order, radius, u, s2) - 1.0

    if gap < NOISE_GAP_FLOOR:
        eve_term = float(eve_gain(np.array([y]))[0])
    else:
        eve_term = radial_expect(params.n + 2, y, gap, eve_gain, cfg)
    legit_term = float(scaled_ratio(order, radius, np.array([y]), s1)[0]) - 1.0
    return eve_term / s2 - legit_term / s1


def g_function_lower_bound(y: float, params: ChannelParams) -> float:
    """Pointwise lower bound -1/s2 + 1/s1 - (R/(s1 y)) h(R y/s1)."""
    s1, s2 = params.sigma1_sq, params.sigma2_sq
    legit = float(scaled_ratio(params.order, params.radius, np.array([y]), s1)[0])
    return -1.0 / s2 + 1.0 / s1 - legit / s1


def g_function_floor(params: ChannelParams) -> float:
    """Uniform lower bound -1/s2 + 1/s1 - R^2 / (s1^2 n); nonnegative below sufficient_radius."""
    s1, s2 = params.sigma1_sq, params.sigma2_sq
    return -1.0 / s2 + 1.0 / s1 - params.radius ** 2 / (s1 * s1 * params.n)


def g_series(
    ys: Sequence[float],
    params: ChannelParams,
    cfg: Optional[QuadratureConfig] = None,
    threads: Optional[int] = None,
) -> list[GEval]:
    """(y, G, lower bound) rows over a grid, in grid order."""
    cfg = cfg or get_quadrature_config()
    return map_ordered(
        lambda y: GEval(y=float(y), value=g_function(float(y), params, cfg),
                        lower_bound=g_function_lower_bound(float(y), params)),
        ys,
        threads,
    )


# =============================================================================
# Sign Changes
# =============================================================================

def _sign_changes(values: Sequence[float], abs_tol: float) -> list[tuple[int, int]]:
    """(previous significant index, index) pairs across which the sign flips."""
    flips = []
    last, last_index = 0, -1
    for i, v in enumerate(values):
        if abs(v) < abs_tol or not math.isfinite(v):
            continue
        sign = 1 if v > 0 else -1
        if last and sign != last:
            flips.append((last_index, i))
        last, last_index = sign, i
    return flips


def count_sign_changes(
    f: Callable[[float], float],
    interval: tuple[float, float],
    grid_points: int = 2000,
    abs_tol: float = 1e-12,
    refine_points: int = 8,
    threads: Optional[int] = None,
) -> int:
    """Strict sign alternations of f on a uniform grid, ignoring |f| < abs_tol.

    Each detected change is refined once with ``refine_points`` interior
    samples so that a close pair of zeros between grid points is not missed.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    lo, hi = interval
    xs = np.linspace(lo, hi, grid_points)
    values = map_ordered(lambda x: float(f(float(x))), xs, threads)
    return refined_sign_changes(f, xs, values, abs_tol, refine_points, threads)


def refined_sign_changes(
    f: Callable[[float], float],
    xs: np.ndarray,
    values: Sequence[float],
    abs_tol: float = 1e-12,
    refine_points: int = 8,
    threads: Optional[int] = None,
) -> int:
    """Sign-change count from grid samples, refined between each flipping pair."""
    xs = np.asarray(xs, dtype=float)
    flips = _sign_changes(values, abs_tol)
    if not flips or refine_points < 1:
        return len(flips)

    points = dict(zip(xs.tolist(), values))
    extra = []
    for i, j in flips:
        extra.extend(np.linspace(xs[i], xs[j], refine_points + 2)[1:-1].tolist())
    for x, v in zip(extra, map_ordered(lambda x: float(f(x)), extra, threads)):
        points[x] = v
    merged = [points[x] for x in sorted(points)]
    return len(_sign_changes(merged, abs_tol))


def audit_interval(params: ChannelParams) -> tuple[float, float]:
    """Search range [1e-3, 50 (R + sigma2 sqrt(n))] for the G sign audit."""
    return 1e-3, 50.0 * (params.radius + params.sigma2 * math.sqrt(params.n))


def audit_g_function(
    params: ChannelParams,
    cfg: Optional[QuadratureConfig] = None,
    grid_points: int = 2000,
    threads: Optional[int] = None,
) -> GAudit:
    """Count G's sign changes and check its lower bound for one parameter set."""
    cfg = cfg or get_quadrature_config()
    lo, hi = audit_interval(params)
    ys = np.linspace(lo, hi, grid_points)
    rows = g_series(ys, params, cfg, threads)
    values = [r.value for r in rows]
    changes = refined_sign_changes(lambda y: g_function(y, params, cfg), ys, values, threads=threads)
    slack = 1e-8
    lower_ok = all(r.value >= r.lower_bound - slack for r in rows)
    expected_nonnegative = params.radius < sufficient_radius(params.sigma1_sq, params.sigma2_sq, params.n)
    holds = changes <= 1 and (not expected_nonnegative or min(values) >= -slack)
    if not holds:
        logger.warning(
            f"[Density] G audit violation n={params.n} R={params.radius:g}: "
            f"{changes} sign changes, min {min(values):.3e}"
        )
    return GAudit(
        params=params,
        sign_changes=changes,
        min_value=min(values),
        conjecture_holds=holds,
        lower_bound_holds=lower_ok,
        nonnegative_expected=expected_nonnegative,
    )
