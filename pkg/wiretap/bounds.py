"""Mass-point count bounds for the scalar channel (n = 1).

Standard deviations sigma1 < sigma2 are used throughout this module, not
variances. A scalar shell at radius r > 0 stands for mass 1/2 at -r and +r.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import special, stats

from .density import refined_sign_changes
from .models import ChannelParams, ScalarBoundReport, ShellPmf
from .regime import capacity_avg_power
from .validation import DegenerateGap, DomainError, NotScalar

logger = logging.getLogger("wiretap.bounds")

# sigma2 - sigma1 below this makes d1 blow up
MIN_SIGMA_GAP = 1e-9

# Gauss-Hermite nodes for E over N ~ N(0, sigma2^2 - sigma1^2)
HERMITE_NODES = 64

# Zero-count grid on [-L, L]
ZERO_COUNT_GRID = 4000

TWO_E_PLUS_ONE_SQ = (2.0 * math.e + 1.0) ** 2


# =============================================================================
# Window and Coefficients
# =============================================================================

def _require_gap(sigma1: float, sigma2: float) -> None:
    if not (sigma1 > 0 and sigma2 > 0):
        raise DomainError("standard deviations must be positive")
    if sigma2 - sigma1 < MIN_SIGMA_GAP:
        raise DegenerateGap(f"sigma2 - sigma1 = {sigma2 - sigma1:.3e} is below {MIN_SIGMA_GAP:g}")


def window_d1(sigma1: float, sigma2: float) -> float:
    _require_gap(sigma1, sigma2)
    return (sigma2 + sigma1) / (sigma2 - sigma1)


def window_d2(sigma1: float, sigma2: float, cs: float) -> float:
    _require_gap(sigma1, sigma2)
    if not cs >= 0:
        raise DomainError(f"secrecy capacity must be nonnegative (got {cs})")
    s1, s2 = sigma1 * sigma1, sigma2 * sigma2
    return math.sqrt(((s2 - s1) / s2 + 2.0 * cs) / (1.0 / s1 - 1.0 / s2))


def window_L(sigma1: float, sigma2: float, radius: float, cs: float) -> float:
    """Half-width L = R d1 + d2 of the interval holding every zero of g + kappa1."""
    return radius * window_d1(sigma1, sigma2) + window_d2(sigma1, sigma2, cs)


def kappa1(sigma1: float, sigma2: float, cs: float) -> float:
    return math.log(sigma2 / sigma1) - cs


def rho_coefficient(sigma1: float, sigma2: float) -> float:
    """Leading coefficient rho of the explicit bound rho R^2 / sigma1^2."""
    d1 = window_d1(sigma1, sigma2)
    return TWO_E_PLUS_ONE_SQ * d1 * d1 + (d1 + 1.0) ** 2


def explicit_upper_bound(
    sigma1: float,
    sigma2: float,
    radius: float,
    cs: float,
    i_eve: float = 0.0,
    capacity_source: str = "given",
) -> ScalarBoundReport:
    """All coefficients and the full bound 1 + b1 R^2/s1 + b2 + log((b3 R^2 + b4 R + b5)/(b6 R + b7)).

    The leading 1 is the zero lost when bounding the zeros of g + kappa1
    by those of g'.
    """
    if not radius >= 0:
        raise DomainError(f"radius must be nonnegative (got {radius})")
    d1 = window_d1(sigma1, sigma2)
    d2 = window_d2(sigma1, sigma2, cs)
    s1, s2 = sigma1 * sigma1, sigma2 * sigma2
    gap = s2 - s1
    root_gap = math.sqrt(gap)

    a1 = 3.0 * s1 / (s2 * root_gap)
    a2 = math.sqrt(2.0) * s1 / (sigma2 * root_gap) + 2.0
    a3 = s1 / root_gap * math.sqrt(math.log(2.0 * math.pi * s2) ** 2 + 24.0 * gap * gap / (s2 * s2) + math.pi ** 2)
    c1 = 1.0 - s1 / s2
    c2 = 1.0 + s1 / s2

    k = 2.0 * math.e + 1.0
    b1 = TWO_E_PLUS_ONE_SQ * d1 * d1 + (d1 + 1.0) ** 2
    b2 = (TWO_E_PLUS_ONE_SQ + 1.0) * d2 * d2 / s1
    b3 = 2.0 * TWO_E_PLUS_ONE_SQ * a1 * d1 * d1
    b4 = k * d1 * a2
    b5 = 2.0 * TWO_E_PLUS_ONE_SQ * a1 * d2 * d2 + k * a2 * d2 + a3
    b6 = c1 * d1 - c2
    b7 = c1 * d2

    r2 = radius * radius
    explicit = 1.0 + b1 * r2 / s1 + b2 + math.log((b3 * r2 + b4 * radius + b5) / (b6 * radius + b7))
    report = ScalarBoundReport(
        L=radius * d1 + d2,
        kappa1=kappa1(sigma1, sigma2, cs),
        d1=d1, d2=d2,
        a1=a1, a2=a2, a3=a3,
        c1=c1, c2=c2,
        b1=b1, b2=b2, b3=b3, b4=b4, b5=b5, b6=b6, b7=b7,
        rho_coeff=b1,
        leading_term=b1 * r2 / s1,
        explicit_upper=explicit,
        lower=lower_bound_points(sigma1, sigma2, radius, i_eve),
        capacity_used=cs,
        capacity_source=capacity_source,
    )
    logger.debug(f"[Bounds] sigma=({sigma1:g}, {sigma2:g}) R={radius:g}: upper {explicit:.6g}")
    return report


# =============================================================================
# Lower Bounds
# =============================================================================

def _snr_term(sigma1: float, sigma2: float, radius: float) -> float:
    r2 = radius * radius
    return (2.0 * r2 / (math.pi * math.e * sigma1 * sigma1)) / (1.0 + r2 / (sigma2 * sigma2))


def lower_bound_points(sigma1: float, sigma2: float, radius: float, i_eve: float = 0.0) -> float:
    """sqrt(1 + (2R^2/(pi e s1))/(1 + R^2/s2)) * exp(I(X*; Y2))."""
    if not i_eve >= 0:
        raise DomainError(f"I_eve must be nonnegative (got {i_eve})")
    return math.sqrt(1.0 + _snr_term(sigma1, sigma2, radius)) * math.exp(i_eve)


def capacity_lower_bound_epi(sigma1: float, sigma2: float, radius: float) -> float:
    """Entropy-power lower bound on the scalar secrecy capacity, in nats."""
    return 0.5 * math.log1p(_snr_term(sigma1, sigma2, radius))


# =============================================================================
# Output Densities and the Zero Count
# =============================================================================

@dataclass(frozen=True)
class ScalarOutputDensities:
    """Gaussian-mixture outputs of both channels for a folded scalar pmf."""
    points: np.ndarray
    weights: np.ndarray
    sigma1_sq: float
    sigma2_sq: float

    @classmethod
    def from_pmf(cls, pmf: ShellPmf, sigma1_sq: float, sigma2_sq: float) -> "ScalarOutputDensities":
        points, weights = [], []
        for r, p in zip(pmf.radii, pmf.probs):
            if r == 0.0:
                points.append(0.0)
                weights.append(p)
            else:
                points.extend([-r, r])
                weights.extend([0.5 * p, 0.5 * p])
        return cls(np.array(points), np.array(weights), sigma1_sq, sigma2_sq)

    def output_logpdf(self, channel: int, y: np.ndarray) -> np.ndarray:
        """log f_{Y_channel}(y) for channel 1 (legitimate) or 2 (eavesdropper)."""
        sigma_sq = self.sigma1_sq if channel == 1 else self.sigma2_sq
        y = np.asarray(y, dtype=float)
        terms = stats.norm.logpdf(y[..., None], loc=self.points, scale=math.sqrt(sigma_sq))
        with np.errstate(divide="ignore"):
            return special.logsumexp(terms + np.log(self.weights), axis=-1)

    def g(self, y: np.ndarray) -> np.ndarray:
        """E[log f_{Y2}(y + N)] - log f_{Y1}(y) with N ~ N(0, sigma2_sq - sigma1_sq)."""
        y = np.asarray(y, dtype=float)
        nodes, weights = hermgauss(HERMITE_NODES)
        spread = math.sqrt(2.0 * (self.sigma2_sq - self.sigma1_sq))
        shifted = y[..., None] + spread * nodes
        smoothed = self.output_logpdf(2, shifted) @ weights / math.sqrt(math.pi)
        return smoothed - self.output_logpdf(1, y)


def _scalar_inputs(params: ChannelParams, cs: Optional[float]) -> tuple[float, str]:
    if params.n != 1:
        raise NotScalar(f"scalar bounds need n = 1 (got n = {params.n})")
    if cs is not None:
        return cs, "given"
    return capacity_avg_power(params.sigma1_sq, params.sigma2_sq, params.radius ** 2, 1), "avg_power"


def scalar_g_series(
    ys: Sequence[float],
    pmf: ShellPmf,
    params: ChannelParams,
    cs: Optional[float] = None,
) -> list[tuple[float, float]]:
    """(y, g(y) + kappa1) rows for inspection."""
    cs, _ = _scalar_inputs(params, cs)
    shift = kappa1(params.sigma1, params.sigma2, cs)
    densities = ScalarOutputDensities.from_pmf(pmf, params.sigma1_sq, params.sigma2_sq)
    ys = np.asarray(ys, dtype=float)
    return list(zip(ys.tolist(), (densities.g(ys) + shift).tolist()))


def implicit_zero_count(
    pmf: ShellPmf,
    params: ChannelParams,
    cs: Optional[float] = None,
    grid_points: int = ZERO_COUNT_GRID,
    abs_tol: float = 1e-12,
) -> int:
    """Sign changes of g + kappa1 on [-L, L]; bounds the folded support size from above.

    C_s defaults to the average-power capacity at P = R^2, which can only
    widen the window.
    """
    cs, _ = _scalar_inputs(params, cs)
    sigma1, sigma2 = params.sigma1, params.sigma2
    half_width = window_L(sigma1, sigma2, params.radius, cs)
    shift = kappa1(sigma1, sigma2, cs)
    densities = ScalarOutputDensities.from_pmf(pmf, params.sigma1_sq, params.sigma2_sq)

    ys = np.linspace(-half_width, half_width, grid_points)
    values = densities.g(ys) + shift
    count = refined_sign_changes(lambda y: float(densities.g(np.array([y]))[0] + shift), ys, values.tolist(), abs_tol)
    if np.any(np.abs(values) < 10.0 * abs_tol):
        logger.warning(f"[Bounds] g + kappa1 grazes zero on [-{half_width:.4g}, {half_width:.4g}]; count may be low")
    logger.info(f"[Bounds] implicit zero count {count} on L={half_width:.6g}")
    return count


def scalar_bound_report(
    params: ChannelParams,
    cs: Optional[float] = None,
    pmf: Optional[ShellPmf] = None,
    i_eve: float = 0.0,
) -> ScalarBoundReport:
    """Explicit bound report, with the implicit count when a converged pmf is supplied."""
    cs, source = _scalar_inputs(params, cs)
    report = explicit_upper_bound(params.sigma1, params.sigma2, params.radius, cs, i_eve, source)
    if pmf is None:
        return report
    return report.model_copy(update={"implicit_zero_count": implicit_zero_count(pmf, params, cs)})
