"""Low-amplitude regime.

The threshold condition f(R), its root (the largest radius at which the
uniform law on the sphere of radius R is optimal), the closed-form secrecy
capacity below it, the large-n slope c and the limit benchmarks.
"""

import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .config import get_quadrature_config
from .expect import radial_expect, scale_integral
from .models import AsymptoteResult, ChannelParams, QuadratureConfig, SolverReport, ThresholdResult
from .specfun import bessel_ratio
from .validation import (
    BracketFailure,
    DomainError,
    OutsideLowAmplitudeRegime,
    ParamsValidationError,
    ParamViolation,
    require_degraded,
)

logger = logging.getLogger("wiretap.regime")

# Upper brackets are doubled until they pass this
BRACKET_LIMIT = 1e6


# =============================================================================
# Root Finding Helpers
# =============================================================================

def _memoized(fn: Callable[[float], float]) -> Callable[[float], float]:
    cache: dict[float, float] = {}

    def wrapped(x: float) -> float:
        if x not in cache:
            cache[x] = fn(x)
        return cache[x]

    return wrapped


def _bisect_increasing(fn: Callable[[float], float], start: float, tol: float, label: str) -> SolverReport:
    """Root of an increasing function with fn(0) < 0.

    The upper end starts at ``start`` and doubles until fn turns positive.
    ``tol`` bounds x: the residual is the width of a bracket around the
    root on which fn is checked to change sign.
    """
    fn = _memoized(fn)
    lo, hi = 0.0, max(start, tol)
    while fn(hi) <= 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > BRACKET_LIMIT:
            raise BracketFailure(f"{label}: no sign change below {BRACKET_LIMIT:g}")
    rtol = 4 * np.finfo(float).eps
    root, info = optimize.bisect(fn, lo, hi, xtol=tol / 4, rtol=rtol,
                                 maxiter=200, full_output=True, disp=False)
    half = tol / 4 + rtol * abs(root)
    left, right = max(root - half, 0.0), root + half
    bracketed = fn(left) <= 0.0 <= fn(right)
    if not bracketed:
        logger.warning(f"[Threshold] {label}: no sign change on [{left:.9g}, {right:.9g}]")
    return SolverReport(
        value=float(root),
        residual=float(right - left),
        iterations=int(info.iterations),
        converged=bool(info.converged and bracketed),
        tolerance=tol,
    )


def _check_radius(radius: float) -> None:
    if not (radius >= 0 and math.isfinite(radius)):
        raise ParamsValidationError([ParamViolation.NEGATIVE_RADIUS], f"R = {radius}")


# =============================================================================
# Threshold Condition
# =============================================================================

def _h_squared(n: int, radius: float, s: float) -> Callable[[np.ndarray], np.ndarray]:
    order = n / 2.0
    return lambda u: bessel_ratio(order, u * (radius / s)) ** 2


def threshold_bracket(n: int, radius: float, s: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """E[h^2(||sqrt(s) Z|| R/s)] + E[h^2(||R + sqrt(s) Z|| R/s)] - 1 at one noise scale."""
    cfg = cfg or get_quadrature_config()
    if radius == 0.0:
        return -1.0
    phi = _h_squared(n, radius, s)
    return radial_expect(n, 0.0, s, phi, cfg) + radial_expect(n, radius, s, phi, cfg) - 1.0


def condition_f(
    sigma1_sq: float,
    sigma2_sq: float,
    n: int,
    radius: float,
    cfg: Optional[QuadratureConfig] = None,
) -> float:
    """f(R): integral of the bracket against ds / s^2 over [sigma1_sq, sigma2_sq].

    Increasing in R with f(0) = 1/sigma2_sq - 1/sigma1_sq; sigma2_sq may be inf.
    """
    require_degraded(sigma1_sq, sigma2_sq)
    _check_radius(radius)
    cfg = cfg or get_quadrature_config()
    if radius == 0.0:
        return 1.0 / sigma2_sq - 1.0 / sigma1_sq
    return scale_integral(sigma1_sq, sigma2_sq, lambda s: threshold_bracket(n, radius, s, cfg), cfg)


def threshold(
    sigma1_sq: float,
    sigma2_sq: float,
    n: int,
    tol: float = 1e-4,
    cfg: Optional[QuadratureConfig] = None,
) -> ThresholdResult:
    """Largest R with the single shell optimal, by bisection on condition_f."""
    require_degraded(sigma1_sq, sigma2_sq)
    if n < 1:
        raise ParamsValidationError([ParamViolation.NON_POSITIVE_DIMENSION])
    cfg = cfg or get_quadrature_config()
    report = _bisect_increasing(
        lambda r: condition_f(sigma1_sq, sigma2_sq, n, r, cfg),
        math.sqrt(n * sigma1_sq),
        tol,
        "threshold",
    )
    logger.info(
        f"[Threshold] n={n} sigma1_sq={sigma1_sq:g} sigma2_sq={sigma2_sq:g} "
        f"r_bar={report.value:.6f} ({report.iterations} bisections)"
    )
    return ThresholdResult(r_bar=report.value, report=report)


def threshold_ptp(sigma_sq: float, n: int, tol: float = 1e-4, cfg: Optional[QuadratureConfig] = None) -> ThresholdResult:
    """Point-to-point threshold: the eavesdropper sees pure noise (sigma2_sq = inf)."""
    return threshold(sigma_sq, math.inf, n, tol, cfg)


def threshold_mmse(sigma_sq: float, n: int, tol: float = 1e-4, cfg: Optional[QuadratureConfig] = None) -> ThresholdResult:
    """Threshold in the limit sigma2_sq -> sigma_sq: root of the bracket at s = sigma_sq."""
    if not sigma_sq > 0:
        raise ParamsValidationError([ParamViolation.NON_POSITIVE_VARIANCE])
    if n < 1:
        raise ParamsValidationError([ParamViolation.NON_POSITIVE_DIMENSION])
    cfg = cfg or get_quadrature_config()
    report = _bisect_increasing(
        lambda r: threshold_bracket(n, r, sigma_sq, cfg),
        math.sqrt(n * sigma_sq),
        tol,
        "threshold_mmse",
    )
    logger.info(f"[Threshold] MMSE limit n={n} sigma_sq={sigma_sq:g} r_bar={report.value:.6f}")
    return ThresholdResult(r_bar=report.value, report=report)


# =============================================================================
# Capacity Below the Threshold
# =============================================================================

def capacity_low_amplitude(
    params: ChannelParams,
    cfg: Optional[QuadratureConfig] = None,
    check_regime: bool = True,
    tol: float = 1e-4,
) -> float:
    """Secrecy capacity in nats when the single shell at R is optimal.

    C_s = 1/2 int (R^2 - R^2 E[h^2(||R + sqrt(s) Z|| R/s)]) / s^2 ds.
    Raises OutsideLowAmplitudeRegime when R exceeds the threshold by more
    than ``tol`` (checked through the sign of f, which is increasing).
    """
    cfg = cfg or get_quadrature_config()
    radius = params.radius
    if params.degraded_direction or radius == 0.0:
        return 0.0
    s1, s2, n = params.sigma1_sq, params.sigma2_sq, params.n

    if check_regime and radius > sufficient_radius(s1, s2, n):
        if condition_f(s1, s2, n, radius, cfg) > 0 and condition_f(s1, s2, n, max(radius - tol, 0.0), cfg) > 0:
            raise OutsideLowAmplitudeRegime(
                f"R = {radius} is above the low-amplitude threshold for n={n}, ({s1}, {s2})"
            )

    def psi(s: float) -> float:
        mean_h2 = radial_expect(n, radius, s, _h_squared(n, radius, s), cfg)
        return 0.5 * radius * radius * (1.0 - mean_h2)

    return scale_integral(s1, s2, psi, cfg)


# =============================================================================
# Large-Dimension Asymptotics
# =============================================================================

def asymptote_integrand(c: float, s: np.ndarray) -> np.ndarray:
    """Bracket of the large-n threshold condition at slope c (no 1/s^2 factor)."""
    c2 = c * c
    first = c2 / (np.sqrt(s) / 2.0 + np.sqrt(s / 4.0 + c2)) ** 2
    second = c2 * (c2 + s) / (s / 2.0 + np.sqrt(s * s / 4.0 + c2 * (c2 + s))) ** 2
    return first + second - 1.0


def asymptote_c(
    sigma1_sq: float,
    sigma2_sq: float,
    tol: float = 1e-6,
    cfg: Optional[QuadratureConfig] = None,
) -> AsymptoteResult:
    """Slope c with threshold ~ c sqrt(n) as n grows."""
    require_degraded(sigma1_sq, sigma2_sq)
    cfg = cfg or get_quadrature_config()

    def condition(c: float) -> float:
        if c == 0.0:
            return 1.0 / sigma2_sq - 1.0 / sigma1_sq
        return scale_integral(sigma1_sq, sigma2_sq, lambda s: asymptote_integrand(c, s), cfg, vectorized=True)

    report = _bisect_increasing(condition, math.sqrt(sigma1_sq), tol, "asymptote_c")
    logger.info(f"[Threshold] asymptote sigma1_sq={sigma1_sq:g} sigma2_sq={sigma2_sq:g} c={report.value:.6f}")
    return AsymptoteResult(c_value=report.value, report=report)


def capacity_limit_fixed_R(params: ChannelParams) -> float:
    """Limit of the secrecy capacity as n grows with R fixed."""
    if params.degraded_direction:
        return 0.0
    r2 = params.radius ** 2
    return r2 / (2.0 * params.sigma1_sq) - r2 / (2.0 * params.sigma2_sq)


def capacity_limit_coupled(sigma1_sq: float, sigma2_sq: float, c: float) -> float:
    """Per-dimension limit with R = c sqrt(n), valid for c up to asymptote_c."""
    if not c >= 0:
        raise DomainError(f"capacity_limit_coupled needs c >= 0 (got {c})")
    if sigma1_sq >= sigma2_sq:
        return 0.0
    c2 = c * c
    return 0.5 * math.log((1.0 + c2 / sigma1_sq) / (1.0 + c2 / sigma2_sq))


def capacity_avg_power(sigma1_sq: float, sigma2_sq: float, power: float, n: int) -> float:
    """Secrecy capacity under the average-power constraint E||X||^2 <= P."""
    if not power >= 0:
        raise DomainError(f"capacity_avg_power needs P >= 0 (got {power})")
    if sigma1_sq >= sigma2_sq:
        return 0.0
    return 0.5 * n * math.log((1.0 + power / sigma1_sq) / (1.0 + power / sigma2_sq))


def sufficient_radius(sigma1_sq: float, sigma2_sq: float, n: int) -> float:
    """Radius below which G is nonnegative, a sufficient condition for the single shell."""
    if sigma1_sq >= sigma2_sq:
        return 0.0
    return sigma1_sq * math.sqrt(n * (1.0 / sigma1_sq - 1.0 / sigma2_sq))
