"""Quadrature engine.

All integrals in the library reduce to nested one-dimensional integrals:
expectations of radial functions of ||x + sqrt(s) Z|| become integrals against a
noncentral chi-square density, and outer integrals over the noise scale s are
carried out in t = 1/s. Both use the same adaptive Gauss-Kronrod (7, 15) rule.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import QuadratureConfig, RadialExpectation
from .specfun import log_ncx2_density
from .validation import NotDegradedError, QuadratureNonConvergence

logger = logging.getLogger("wiretap.expect")

# Tolerance ratio between an outer integral and the quadratures inside it
OUTER_TOL_FACTOR = 100.0


# =============================================================================
# Gauss-Kronrod (7, 15) Rule
# =============================================================================

# Kronrod abscissae on [0, 1]; odd indices are the 7-point Gauss nodes
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Ascending 15-point layout on [-1, 1]
NODES = np.concatenate([-_XGK[:7], _XGK[7:], _XGK[6::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:7], _WGK[7:], _WGK[6::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[[9, 11, 13]] = _WG[2::-1]


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    subdivisions: int


def _apply_rule(func: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray):
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = centre[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(func(x.ravel()), dtype=float).reshape(x.shape)
    kronrod = half * (fx @ KRONROD_WEIGHTS)
    gauss = half * (fx @ GAUSS_WEIGHTS)
    absolute = half * (np.abs(fx) @ KRONROD_WEIGHTS)
    return kronrod, np.abs(kronrod - gauss), absolute


def gauss_kronrod(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    cfg: QuadratureConfig,
) -> QuadResult:
    """Adaptive G7/K15 quadrature of a vectorized integrand on [a, b].

    Stops once sum |K15 - G7| <= max(abs_tol, rel_tol * integral of |f|).
    Each pass bisects every interval whose error exceeds its length-share of
    the tolerance (worst first when the subdivision cap would be crossed).
    Intervals are kept in left-endpoint order and summed with fsum, so the
    result does not depend on evaluation order.
    """
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    width = b - a

    lo = np.array([a])
    hi = np.array([b])
    values, errors, absolutes = _apply_rule(func, lo, hi)

    while True:
        total = math.fsum(values)
        error = math.fsum(errors)
        tol = max(cfg.abs_tol, cfg.rel_tol * math.fsum(absolutes))
        if not (math.isfinite(total) and math.isfinite(error)):
            raise QuadratureNonConvergence(total, float("nan"), tol, lo.size)
        if error <= tol:
            return QuadResult(sign * total, error, lo.size)
        room = cfg.max_subdivisions - lo.size
        if room <= 0:
            raise QuadratureNonConvergence(sign * total, error, tol, lo.size)

        share = tol * (hi - lo) / width
        split = errors > share
        candidates = np.flatnonzero(split)
        if candidates.size > room:
            worst = candidates[np.argsort(-errors[candidates], kind="stable")[:room]]
            split = np.zeros_like(split)
            split[worst] = True

        keep = ~split
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_values, new_errors, new_absolutes = _apply_rule(func, new_lo, new_hi)

        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        values = np.concatenate([values[keep], new_values])
        errors = np.concatenate([errors[keep], new_errors])
        absolutes = np.concatenate([absolutes[keep], new_absolutes])

        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
        values, errors, absolutes = values[order], errors[order], absolutes[order]
        if lo.size > 0.8 * cfg.max_subdivisions:
            logger.debug(f"[Quadrature] {lo.size} subintervals on [{a:.6g}, {b:.6g}]")


def integrate(func: Callable[[np.ndarray], np.ndarray], a: float, b: float, cfg: QuadratureConfig) -> float:
    """Value of a vectorized integrand's integral over [a, b]."""
    return gauss_kronrod(func, a, b, cfg).value


def integrate_scalar(func: Callable[[float], float], a: float, b: float, cfg: QuadratureConfig) -> float:
    """Same as :func:`integrate` for an integrand that only takes floats."""
    return integrate(lambda xs: np.array([func(float(x)) for x in xs]), a, b, cfg)


# =============================================================================
# Radial Expectations
# =============================================================================

def radial_window(dof: int, ncp: float, tail_sigmas: float) -> tuple[float, float]:
    """Integration window in the norm variable u = sqrt(y).

    Union of the chi-square window mean +- tail_sigmas * sd (mapped to u) and
    the Gaussian-concentration window sqrt(mean) +- (tail_sigmas + 1); the
    norm of a shifted Gaussian is 1-Lipschitz in the noise.
    """
    mean = dof + ncp
    sd = math.sqrt(2.0 * (dof + 2.0 * ncp))
    centre = math.sqrt(mean)
    u_lo = min(math.sqrt(max(0.0, mean - tail_sigmas * sd)), max(0.0, centre - 1.0 - tail_sigmas))
    u_hi = max(math.sqrt(mean + tail_sigmas * sd), centre + tail_sigmas)
    return u_lo, u_hi


def expect_radial(spec: RadialExpectation, phi: Callable[[np.ndarray], np.ndarray], cfg: QuadratureConfig) -> float:
    """E[phi(||x + sqrt(s) Z||)] for the given dof, shift = ||x|| and scale = s.

    ||x + sqrt(s) Z||^2 / s ~ chi2_n(||x||^2 / s); with y = u^2 the integral is
    int phi(sqrt(s) u) f(u^2) 2u du, finite at u = 0 for every dof.
    """
    ncp = spec.ncp
    root_s = math.sqrt(spec.scale)
    u_lo, u_hi = radial_window(spec.dof, ncp, cfg.tail_sigmas)

    def integrand(u: np.ndarray) -> np.ndarray:
        weight = 2.0 * u * np.exp(log_ncx2_density(spec.dof, ncp, u * u))
        return np.asarray(phi(root_s * u), dtype=float) * weight

    return integrate(integrand, u_lo, u_hi, cfg)


def radial_expect(
    n: int,
    shift: float,
    s: float,
    phi: Callable[[np.ndarray], np.ndarray],
    cfg: QuadratureConfig,
) -> float:
    """E[phi(||x + sqrt(s) Z||)] with ||x|| = shift, Z ~ N(0, I_n); phi vectorized."""
    return expect_radial(RadialExpectation(dof=n, shift=shift, scale=s), phi, cfg)


# =============================================================================
# Noise-Scale Integrals
# =============================================================================

def scale_integral(
    sigma1_sq: float,
    sigma2_sq: float,
    psi: Callable[[float], float],
    cfg: QuadratureConfig,
    vectorized: bool = False,
) -> float:
    """int_{sigma1_sq}^{sigma2_sq} psi(s) / s^2 ds, evaluated as int psi(1/t) dt.

    sigma2_sq may be +inf (the t-interval then starts at 0). With
    ``vectorized`` psi receives numpy arrays of s.
    """
    if not (0.0 < sigma1_sq < sigma2_sq):
        raise NotDegradedError(f"scale_integral needs 0 < sigma1_sq < sigma2_sq (got {sigma1_sq}, {sigma2_sq})")
    t_lo = 0.0 if math.isinf(sigma2_sq) else 1.0 / sigma2_sq
    t_hi = 1.0 / sigma1_sq
    if vectorized:
        return integrate(lambda t: psi(1.0 / t), t_lo, t_hi, cfg)
    return integrate_scalar(lambda t: psi(1.0 / t), t_lo, t_hi, outer_config(cfg))


def outer_config(cfg: QuadratureConfig) -> QuadratureConfig:
    """Tolerances for an integral whose integrand is itself a quadrature.

    Loosened by OUTER_TOL_FACTOR so inner error noise cannot stall subdivision.
    """
    return cfg.model_copy(update={
        "rel_tol": cfg.rel_tol * OUTER_TOL_FACTOR,
        "abs_tol": cfg.abs_tol * OUTER_TOL_FACTOR,
    })
