"""Parameter validation and the library's error types.

Validates:
1. Channel parameters (variances, dimension, radius) before any numerics run
2. Shell pmfs against the amplitude constraint of a parameter set
3. Reports every violated invariant at once, not just the first
"""

import logging
import math
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field, ValidationError

logger = logging.getLogger("wiretap.validation")


# =============================================================================
# Violation Kinds
# =============================================================================

class ParamViolation(str, Enum):
    """Invariants a problem instance can break."""
    NON_POSITIVE_VARIANCE = "non_positive_variance"
    NON_POSITIVE_DIMENSION = "non_positive_dimension"
    NEGATIVE_RADIUS = "negative_radius"
    RADIUS_EXCEEDS_CONSTRAINT = "radius_exceeds_constraint"
    INVALID_PMF = "invalid_pmf"


class ParamsValidationResult(BaseModel):
    """Result of a parameter validation check."""
    is_valid: bool = Field(description="Whether every invariant holds")
    violations: list[ParamViolation] = Field(default_factory=list, description="Every violated invariant")
    degraded_direction: bool = Field(default=False, description="sigma1_sq >= sigma2_sq: capacity is zero")
    detail: Optional[str] = Field(default=None, description="Human-readable summary")


# =============================================================================
# Error Types
# =============================================================================

class WiretapError(Exception):
    """Base class for every error raised by the library."""


class ParamsValidationError(WiretapError, ValueError):
    """One or more invariants of a problem instance are violated."""

    def __init__(self, violations: list[ParamViolation], detail: str = ""):
        self.violations = list(violations)
        names = ", ".join(v.value for v in self.violations)
        super().__init__(f"invalid parameters: {names}" + (f" ({detail})" if detail else ""))


class DomainError(WiretapError, ValueError):
    """Argument outside the domain of a special function."""


class QuadratureNonConvergence(WiretapError):
    """Subdivision limit reached with the error estimate above tolerance."""

    def __init__(self, value: float, error: float, tolerance: float, subdivisions: int):
        self.value = value
        self.error = error
        self.tolerance = tolerance
        self.subdivisions = subdivisions
        super().__init__(
            f"quadrature did not converge: error {error:.3e} > tol {tolerance:.3e} "
            f"after {subdivisions} subintervals"
        )


class BracketFailure(WiretapError):
    """No sign change found while expanding a root bracket."""


class NotDegradedError(WiretapError, ValueError):
    """The operation needs sigma1_sq < sigma2_sq."""


class OutsideLowAmplitudeRegime(WiretapError):
    """Radius above the low-amplitude threshold."""


class UnsupportedNorm(WiretapError, ValueError):
    """Closed-form divergence requested at a norm other than 0 or R."""


class DegenerateNoiseGap(WiretapError, ValueError):
    """Negative noise gap sigma2_sq - sigma1_sq where a covariance is needed."""


class DegenerateGap(WiretapError, ValueError):
    """sigma2 - sigma1 too small for the scalar bound coefficients."""


class NotScalar(WiretapError, ValueError):
    """Scalar-only operation called with n != 1."""


class TooManyPoints(WiretapError):
    """Adding a mass point would exceed max_points."""

    def __init__(self, message: str, partial: Any = None):
        self.partial = partial
        super().__init__(message)


class NonConvergence(WiretapError):
    """Optimizer escalation cap reached without a valid KKT certificate."""

    def __init__(self, message: str, partial: Any = None):
        self.partial = partial
        super().__init__(message)


# =============================================================================
# Validation Functions
# =============================================================================

def collect_violations(sigma1_sq: float, sigma2_sq: float, n: int, radius: float) -> list[ParamViolation]:
    """Every invariant the raw fields break, in a fixed order."""
    violations: list[ParamViolation] = []
    if not (_positive(sigma1_sq) and _positive(sigma2_sq)):
        violations.append(ParamViolation.NON_POSITIVE_VARIANCE)
    if not (isinstance(n, int) and n >= 1):
        violations.append(ParamViolation.NON_POSITIVE_DIMENSION)
    if not (radius is not None and radius >= 0 and math.isfinite(radius)):
        violations.append(ParamViolation.NEGATIVE_RADIUS)
    return violations


def _positive(x: float) -> bool:
    return x is not None and not math.isnan(x) and x > 0


def check_params(raw: Any) -> ParamsValidationResult:
    """Validate raw fields (dict or ChannelParams) without raising."""
    fields = raw.model_dump() if isinstance(raw, BaseModel) else dict(raw)
    violations = collect_violations(
        fields.get("sigma1_sq", float("nan")),
        fields.get("sigma2_sq", float("nan")),
        fields.get("n", 0),
        fields.get("radius", 0.0),
    )
    if violations:
        names = ", ".join(v.value for v in violations)
        logger.info(f"[Validation] Parameters rejected: {names}")
        return ParamsValidationResult(is_valid=False, violations=violations, detail=names)
    degraded = fields["sigma1_sq"] >= fields["sigma2_sq"]
    return ParamsValidationResult(
        is_valid=True,
        degraded_direction=degraded,
        detail="sigma1_sq >= sigma2_sq, secrecy capacity is zero" if degraded else None,
    )


def validate_params(raw: Any):
    """Return a ChannelParams or raise ParamsValidationError listing every violation."""
    from .models import ChannelParams

    result = check_params(raw)
    if not result.is_valid:
        raise ParamsValidationError(result.violations, result.detail or "")
    if result.degraded_direction:
        logger.info("[Validation] Degraded-direction flag set: capacity routines return 0")
    if isinstance(raw, ChannelParams):
        return raw
    try:
        return ChannelParams(**dict(raw))
    except ValidationError as e:
        raise ParamsValidationError([], str(e)) from e


def validate_pmf(pmf, params) -> None:
    """Raise when the pmf reaches past the amplitude constraint."""
    if not pmf.fits(params):
        raise ParamsValidationError(
            [ParamViolation.RADIUS_EXCEEDS_CONSTRAINT],
            f"max radius {pmf.max_radius} > R = {params.radius}",
        )


def require_degraded(sigma1_sq: float, sigma2_sq: float) -> None:
    """Raise NotDegradedError unless 0 < sigma1_sq < sigma2_sq."""
    if not (_positive(sigma1_sq) and _positive(sigma2_sq)):
        raise ParamsValidationError([ParamViolation.NON_POSITIVE_VARIANCE])
    if sigma1_sq >= sigma2_sq:
        raise NotDegradedError(
            f"need sigma1_sq < sigma2_sq (got {sigma1_sq} >= {sigma2_sq})"
        )
