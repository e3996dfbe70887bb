"""Special functions: the Bessel ratio h_v and the noncentral chi-square family.

Every routine accepts scalars or numpy arrays and returns the same shape.
Densities are computed in log space so that high dimensions and large
noncentralities never underflow before the final exponentiation.
"""

import math
from typing import Union

import numpy as np
from scipy import special, stats

from .models import BesselRatioEval, NoncentralChiSq
from .validation import DomainError

ArrayLike = Union[float, np.ndarray]

LOG2 = math.log(2.0)

# Lentz settings for the Gauss continued fraction
_CF_TINY = 1e-300
_CF_TOL = 1e-15
_CF_MAX_TERMS = 1000


# =============================================================================
# Bessel Ratio
# =============================================================================

def _ratio_continued_fraction(v: float, x: np.ndarray) -> np.ndarray:
    """h_v(x) = x / (2v + x^2 / (2(v+1) + x^2 / (2(v+2) + ...))), modified Lentz.

    Converges in a handful of terms while x < v, which is exactly where the
    scaled-Bessel quotient risks underflow.
    """
    x2 = x * x
    f = np.full_like(x, _CF_TINY)
    c = f.copy()
    d = np.zeros_like(x)
    for j in range(1, _CF_MAX_TERMS + 1):
        a = x if j == 1 else x2
        b = 2.0 * (v + j - 1)
        d = b + a * d
        d = np.where(d == 0.0, _CF_TINY, d)
        c = b + a / c
        c = np.where(c == 0.0, _CF_TINY, c)
        d = 1.0 / d
        delta = c * d
        f = f * delta
        if np.all(np.abs(delta - 1.0) < _CF_TOL):
            break
    return f


def bessel_ratio(v: float, x: ArrayLike) -> ArrayLike:
    """h_v(x) = I_v(x) / I_{v-1}(x) for v >= 1/2, x >= 0.

    Continued fraction below x = v, exponentially scaled Bessel quotient
    above; never overflows.
    """
    if not v >= 0.5:
        raise DomainError(f"bessel_ratio needs v >= 1/2 (got {v})")
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or np.any(xa < 0):
        raise DomainError("bessel_ratio needs x >= 0")
    flat = np.atleast_1d(xa).ravel()
    out = np.zeros_like(flat)

    small = (flat > 0.0) & (flat < v)
    if small.any():
        out[small] = _ratio_continued_fraction(v, flat[small])
    large = (flat >= v) & np.isfinite(flat)
    if large.any():
        xl = flat[large]
        with np.errstate(all="ignore"):
            out[large] = special.ive(v, xl) / special.ive(v - 1.0, xl)
    out[np.isinf(flat)] = 1.0

    out = out.reshape(np.shape(xa))
    return float(out) if np.ndim(xa) == 0 else out


def bessel_ratio_bounds(v: float, x: ArrayLike) -> tuple[ArrayLike, ArrayLike]:
    """Closed-form sandwich lower <= h_v(x) <= upper.

    upper = x / ((2v-1)/2 + sqrt((2v-1)^2/4 + x^2))
    lower = x / (v + sqrt(v^2 + x^2))
    """
    if not v >= 0.5:
        raise DomainError(f"bessel_ratio_bounds needs v >= 1/2 (got {v})")
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or np.any(xa < 0):
        raise DomainError("bessel_ratio_bounds needs x >= 0")
    half = (2.0 * v - 1.0) / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        upper = np.where(xa > 0, xa / (half + np.sqrt(half * half + xa * xa)), 0.0)
        lower = np.where(xa > 0, xa / (v + np.sqrt(v * v + xa * xa)), 0.0)
    if np.ndim(xa) == 0:
        return float(lower), float(upper)
    return lower, upper


def bessel_ratio_report(v: float, x: float) -> BesselRatioEval:
    lower, upper = bessel_ratio_bounds(v, x)
    return BesselRatioEval(order=v, argument=x, value=bessel_ratio(v, x), lower=lower, upper=upper)


# =============================================================================
# Noncentral Chi-Square
# =============================================================================

def _log_bessel_i_series(nu: float, z: np.ndarray, terms: int = 60) -> np.ndarray:
    """log I_nu(z) from the ascending series; used where ive underflows (z << nu)."""
    q = 0.25 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, terms + 1):
        term = term * q / (k * (nu + k))
        total = total + term
    return nu * np.log(0.5 * z) - special.gammaln(nu + 1.0) + np.log(total)


def _log_bessel_i(nu: float, z: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        scaled = special.ive(nu, z)
        out = np.log(scaled) + z
    bad = ~(scaled > 0.0) | ~np.isfinite(out)
    if bad.any():
        out[bad] = _log_bessel_i_series(nu, z[bad])
    return out


def log_ncx2_density(dof: int, ncp: ArrayLike, y: ArrayLike) -> np.ndarray:
    """log f_{chi2_dof(ncp)}(y), broadcasting ncp against y; y > 0 assumed."""
    ya, la = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(ncp, dtype=float))
    out = np.empty(ya.shape)
    z = np.sqrt(la * ya)
    central = (la == 0.0) | (z == 0.0)
    if central.any():
        out[central] = stats.chi2.logpdf(ya[central], dof)
    noncentral = ~central
    if noncentral.any():
        yy, ll, zz = ya[noncentral], la[noncentral], z[noncentral]
        nu = dof / 2.0 - 1.0
        out[noncentral] = (
            -LOG2 - 0.5 * (yy + ll)
            + 0.5 * nu * (np.log(yy) - np.log(ll))
            + _log_bessel_i(nu, zz)
        )
    return out


def _check_positive(y: ArrayLike) -> np.ndarray:
    ya = np.asarray(y, dtype=float)
    if np.any(np.isnan(ya)) or np.any(ya <= 0):
        raise DomainError("noncentral chi-square evaluation needs y > 0")
    return ya


def _shape_like(values: np.ndarray, y: ArrayLike) -> ArrayLike:
    return float(values) if np.ndim(y) == 0 else values


def ncx2_logpdf(d: NoncentralChiSq, y: ArrayLike) -> ArrayLike:
    ya = _check_positive(y)
    return _shape_like(log_ncx2_density(d.dof, d.ncp, ya), y)


def ncx2_pdf(d: NoncentralChiSq, y: ArrayLike) -> ArrayLike:
    ya = _check_positive(y)
    return _shape_like(np.exp(log_ncx2_density(d.dof, d.ncp, ya)), y)


def ncx2_cdf(d: NoncentralChiSq, y: ArrayLike) -> ArrayLike:
    ya = _check_positive(y)
    if d.ncp == 0.0:
        values = stats.chi2.cdf(ya, d.dof)
    else:
        values = stats.ncx2.cdf(ya, d.dof, d.ncp)
    return _shape_like(np.clip(values, 0.0, 1.0), y)


def ncx2_pdf_derivative(d: NoncentralChiSq, y: ArrayLike) -> ArrayLike:
    """d/dy f_{chi2_n(l)}(y) = (f_{chi2_{n-2}(l)}(y) - f_{chi2_n(l)}(y)) / 2."""
    if d.dof < 3:
        raise DomainError(f"ncx2_pdf_derivative needs dof >= 3 (got {d.dof})")
    ya = _check_positive(y)
    lower = np.exp(log_ncx2_density(d.dof - 2, d.ncp, ya))
    same = np.exp(log_ncx2_density(d.dof, d.ncp, ya))
    return _shape_like(0.5 * (lower - same), y)


def ncx2_pdf_series(d: NoncentralChiSq, y: float, rel_cut: float = 1e-16) -> float:
    """Poisson-mixture evaluation sum_i Pois(i; l/2) f_{chi2_{n+2i}}(y).

    Starts at i = floor(l/2) and walks both ways until a term drops below
    ``rel_cut`` times the partial sum past the peak of the summand.
    """
    if not y > 0:
        raise DomainError("ncx2_pdf_series needs y > 0")
    if d.ncp == 0.0:
        return float(stats.chi2.pdf(y, d.dof))
    mu = 0.5 * d.ncp
    peak = max(mu, 0.5 * (y - d.dof))
    trough = min(mu, 0.5 * (y - d.dof))

    def term(i: int) -> float:
        return math.exp(stats.poisson.logpmf(i, mu) + stats.chi2.logpdf(y, d.dof + 2 * i))

    start = int(math.floor(mu))
    total = term(start)
    i = start + 1
    while i < start + 100_000:
        t = term(i)
        total += t
        if i > peak and t < rel_cut * total:
            break
        i += 1
    i = start - 1
    while i >= 0:
        t = term(i)
        total += t
        if i < trough and t < rel_cut * total:
            break
        i -= 1
    return total
