"""Value types for the wiretap-capacity library.

Every type here is an immutable pydantic model; JSON field names are the
lower_snake_case attribute names, so ``model_dump_json`` / ``model_validate_json``
round-trip without translation.
"""

import math
from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing_extensions import Self

from .validation import ParamViolation, collect_violations


# =============================================================================
# Units
# =============================================================================


class UnitMode(str, Enum):
    """Information units. Everything is computed in nats."""
    NATS = "nats"
    BITS = "bits"

    def convert(self, value_nats: float) -> float:
        """Convert a nats value for output."""
        if self is UnitMode.BITS:
            return value_nats / math.log(2.0)
        return value_nats


# =============================================================================
# Problem Instance
# =============================================================================


class ChannelParams(BaseModel):
    """Noise variances, dimension and amplitude of one wiretap instance.

    sigma1_sq >= sigma2_sq is accepted: the eavesdropper is then no noisier
    than the legitimate receiver and every capacity routine returns 0.
    """

    model_config = ConfigDict(frozen=True)

    sigma1_sq: float = Field(description="Legitimate-channel noise variance")
    sigma2_sq: float = Field(description="Eavesdropper noise variance")
    n: int = Field(description="Dimension")
    radius: float = Field(default=0.0, description="Amplitude constraint R")

    @model_validator(mode='after')
    def invariants_hold(self) -> Self:
        violations = collect_violations(self.sigma1_sq, self.sigma2_sq, self.n, self.radius)
        if violations:
            raise ValueError("; ".join(v.value for v in violations))
        return self

    @property
    def degraded_direction(self) -> bool:
        """True when sigma1_sq >= sigma2_sq (zero secrecy capacity)."""
        return self.sigma1_sq >= self.sigma2_sq

    @property
    def sigma1(self) -> float:
        return math.sqrt(self.sigma1_sq)

    @property
    def sigma2(self) -> float:
        return math.sqrt(self.sigma2_sq)

    @property
    def order(self) -> float:
        """Bessel-ratio order n/2 used throughout."""
        return self.n / 2.0

    def with_radius(self, radius: float) -> "ChannelParams":
        return ChannelParams(
            sigma1_sq=self.sigma1_sq, sigma2_sq=self.sigma2_sq, n=self.n, radius=radius
        )


class ShellPmf(BaseModel):
    """Isotropic input law on finitely many co-centric shells."""

    model_config = ConfigDict(frozen=True)

    radii: tuple[float, ...]
    probs: tuple[float, ...]

    @model_validator(mode='after')
    def shells_are_valid(self) -> Self:
        if len(self.radii) == 0 or len(self.radii) != len(self.probs):
            raise ValueError("radii and probs must be non-empty and of equal length")
        if any(not math.isfinite(r) or r < 0 for r in self.radii):
            raise ValueError("radii must be finite and nonnegative")
        if any(not math.isfinite(p) or p < 0 for p in self.probs):
            raise ValueError("probs must be finite and nonnegative")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"probs must sum to 1 (got {math.fsum(self.probs)!r})")
        gap = 1e-9 * max(self.radii[-1], 1e-300)
        for lo, hi in zip(self.radii, self.radii[1:]):
            if hi - lo <= gap:
                raise ValueError("radii must be strictly increasing and distinct")
        return self

    @classmethod
    def single_shell(cls, radius: float) -> "ShellPmf":
        return cls(radii=(float(radius),), probs=(1.0,))

    @classmethod
    def from_points(
        cls,
        radii,
        probs,
        radius: Optional[float] = None,
        merge_tol: float = 1e-9,
    ) -> "ShellPmf":
        """Canonicalize arbitrary (radius, prob) pairs.

        Sorts by radius, merges radii closer than ``merge_tol * scale``
        (scale is ``radius`` when given, else the largest radius), drops
        zero-mass shells and renormalizes.
        """
        pairs = sorted((float(r), float(p)) for r, p in zip(radii, probs))
        if not pairs:
            raise ValueError("at least one shell is required")
        scale = radius if radius else max(r for r, _ in pairs)
        tol = merge_tol * max(scale, 1e-300)
        merged: list[list[float]] = []
        for r, p in pairs:
            if merged and r - merged[-1][0] <= tol:
                merged[-1][1] += p
            else:
                merged.append([r, p])
        kept = [(r, p) for r, p in merged if p > 0.0] or merged[-1:]
        total = math.fsum(p for _, p in kept)
        out_probs = [p / total for _, p in kept]
        # absorb the rounding residue into the heaviest shell
        residue = 1.0 - math.fsum(out_probs)
        heaviest = max(range(len(out_probs)), key=out_probs.__getitem__)
        out_probs[heaviest] += residue
        return cls(radii=tuple(r for r, _ in kept), probs=tuple(out_probs))

    @property
    def size(self) -> int:
        return len(self.radii)

    @property
    def max_radius(self) -> float:
        return self.radii[-1]

    def fits(self, params: ChannelParams) -> bool:
        """Whether every shell lies inside the amplitude constraint."""
        return self.max_radius <= params.radius * (1.0 + 1e-12) + 1e-300

    def folded_support_size(self) -> int:
        """Number of scalar points when n = 1 (r > 0 counts as the pair +-r)."""
        return sum(1 if r == 0.0 else 2 for r in self.radii)


# =============================================================================
# Numerical Configuration and Reports
# =============================================================================


class QuadratureConfig(BaseModel):
    """Tolerances and truncation for every integral in the library."""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    tail_sigmas: float = 12.0

    @model_validator(mode='after')
    def limits_are_sane(self) -> Self:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be at least 10")
        if self.tail_sigmas < 6:
            raise ValueError("tail_sigmas must be at least 6")
        return self


class SolverReport(BaseModel):
    """Outcome of a scalar root or optimum search."""

    model_config = ConfigDict(frozen=True)

    value: float
    residual: float
    iterations: int
    converged: bool
    tolerance: float = Field(default=0.0, description="Declared bound on |residual|; for roots, a tolerance on x")

    @model_validator(mode='after')
    def converged_within_tolerance(self) -> Self:
        if self.converged and self.tolerance > 0 and abs(self.residual) > self.tolerance:
            raise ValueError("converged report must have |residual| <= tolerance")
        return self


class NoncentralChiSq(BaseModel):
    """Law of ||mu + Z||^2 with n degrees of freedom and ||mu||^2 = ncp."""

    model_config = ConfigDict(frozen=True)

    dof: int
    ncp: float = 0.0

    @field_validator('dof')
    @classmethod
    def dof_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("dof must be a positive integer")
        return v

    @field_validator('ncp')
    @classmethod
    def ncp_nonnegative(cls, v: float) -> float:
        if not (v >= 0 and math.isfinite(v)):
            raise ValueError("ncp must be finite and nonnegative")
        return v

    @property
    def mean(self) -> float:
        return self.dof + self.ncp

    @property
    def variance(self) -> float:
        return 2.0 * (self.dof + 2.0 * self.ncp)


class BesselRatioEval(BaseModel):
    """h_v(x) together with its closed-form sandwich."""

    model_config = ConfigDict(frozen=True)

    order: float
    argument: float
    value: float
    lower: float
    upper: float


class RadialExpectation(BaseModel):
    """E[phi(||x + sqrt(s) Z||)] with ||x|| = shift, Z standard in n dimensions."""

    model_config = ConfigDict(frozen=True)

    dof: int
    shift: float
    scale: float

    @model_validator(mode='after')
    def well_posed(self) -> Self:
        if self.dof < 1 or self.shift < 0 or not self.scale > 0:
            raise ValueError("need dof >= 1, shift >= 0, scale > 0")
        return self

    @property
    def ncp(self) -> float:
        return self.shift * self.shift / self.scale


# =============================================================================
# Low-Amplitude Regime
# =============================================================================


class ThresholdResult(BaseModel):
    """Largest radius for which the single shell at R is optimal."""

    model_config = ConfigDict(frozen=True)

    r_bar: float
    report: SolverReport


class AsymptoteResult(BaseModel):
    """Large-n slope c with threshold ~ c * sqrt(n)."""

    model_config = ConfigDict(frozen=True)

    c_value: float
    report: SolverReport


# =============================================================================
# Secrecy Density
# =============================================================================


class DensityEval(BaseModel):
    t: float
    value: float
    derivative: Optional[float] = None


class GEval(BaseModel):
    y: float
    value: float
    lower_bound: float


class GAudit(BaseModel):
    """Sign-change audit of G for one parameter set."""
    params: ChannelParams
    sign_changes: int
    min_value: float
    conjecture_holds: bool
    lower_bound_holds: bool
    nonnegative_expected: bool = Field(
        default=False, description="R below the sufficient radius, so G >= 0 is expected"
    )


# =============================================================================
# Optimizer
# =============================================================================


class OptimizerConfig(BaseModel):
    """Controls for the alternating radii / probabilities optimizer."""

    model_config = ConfigDict(frozen=True)

    epsilon: float = 1e-6
    inner_rounds: int = 30
    ga_max_iters: int = 200
    ba_max_iters: int = 500
    ga_tol: float = 1e-9
    ba_tol: float = 1e-9
    kkt_grid: int = 4000
    backtrack_alpha: float = 0.25
    backtrack_beta: float = 0.5
    max_points: int = 64
    max_escalations: int = 20

    @model_validator(mode='after')
    def caps_are_positive(self) -> Self:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        caps = (self.inner_rounds, self.ga_max_iters, self.ba_max_iters,
                self.kkt_grid, self.max_points, self.max_escalations)
        if min(caps) < 1:
            raise ValueError("iteration caps must be >= 1")
        if not (0 < self.backtrack_alpha < 1 and 0 < self.backtrack_beta < 1):
            raise ValueError("backtracking constants must lie in (0, 1)")
        return self


TracePhase = Literal["ascent", "probabilities"]


class KktReport(BaseModel):
    """epsilon-KKT verdict for a candidate pmf."""

    model_config = ConfigDict(frozen=True)

    valid: bool
    worst_support_violation: float
    worst_interior_violation: float
    argmax_t: float
    xi_at_radius: float
    epsilon: float

    @model_validator(mode='after')
    def verdict_matches_violations(self) -> Self:
        expected = (self.worst_support_violation <= self.epsilon
                    and self.worst_interior_violation <= self.epsilon)
        if expected != self.valid:
            raise ValueError("valid must equal (both violations <= epsilon)")
        return self


class AscentStep(BaseModel):
    """One projected gradient-ascent update of the radii."""
    pmf: ShellPmf
    objective_before: float
    objective_after: float
    step_size: float
    stalled: bool = False


class TracePoint(BaseModel):
    """Objective and pmf after one accepted update.

    ``round`` counts alternations within an escalation. Ascent points
    sharing (escalation, round) belong to one gradient-ascent phase.
    """

    model_config = ConfigDict(frozen=True)

    escalation: int
    round: int
    phase: TracePhase
    objective: float
    pmf: ShellPmf


class OptimizeResult(BaseModel):
    """Optimizer output: certified pmf and capacity estimate."""
    pmf: ShellPmf
    capacity: float
    kkt: KktReport
    objective_trace: list[float] = Field(default_factory=list)
    trace: list[TracePoint] = Field(default_factory=list)
    points_added: int = 0
    partial: bool = False

    def capacity_in(self, units: UnitMode) -> float:
        return units.convert(self.capacity)


# =============================================================================
# Scalar Bounds
# =============================================================================


class ScalarBoundReport(BaseModel):
    """Coefficients and values of the scalar support-size bounds."""
    L: float
    kappa1: float
    d1: float
    d2: float
    a1: float
    a2: float
    a3: float
    c1: float
    c2: float
    b1: float
    b2: float
    b3: float
    b4: float
    b5: float
    b6: float
    b7: float
    rho_coeff: float
    leading_term: float
    explicit_upper: float
    lower: float
    capacity_used: float
    capacity_source: str = "given"
    implicit_zero_count: Optional[int] = None

    @model_validator(mode='after')
    def lower_below_upper(self) -> Self:
        if self.explicit_upper < self.lower:
            raise ValueError("explicit upper bound below lower bound")
        return self


# =============================================================================
# Monte Carlo
# =============================================================================


class McEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    std_error: float
    samples: int
    seed: int

    def agrees_with(self, value: float, n_sigma: float = 4.0) -> bool:
        """Whether ``value`` lies within ``n_sigma`` standard errors."""
        return abs(self.mean - value) <= n_sigma * self.std_error + 1e-15


# =============================================================================
# Run Manifest
# =============================================================================


class RunManifest(BaseModel):
    """Everything needed to re-run a CLI command exactly."""
    command: str
    params: dict = Field(default_factory=dict)
    configs: dict = Field(default_factory=dict)
    seed: Optional[int] = None
    tool_version: str
    wall_time: float
    output_paths: list[str] = Field(default_factory=list)
    csv_schema: Optional[str] = None


# =============================================================================
# Service Requests
# =============================================================================


class ThresholdRequest(BaseModel):
    sigma1_sq: float = Field(description="Legitimate-channel noise variance")
    sigma2_sq: float = Field(description="Eavesdropper noise variance")
    n: int = Field(description="Dimension")
    tol: float = Field(default=1e-4, gt=0, description="Bracket width")


class AsymptoteRequest(BaseModel):
    sigma1_sq: float
    sigma2_sq: float
    tol: float = Field(default=1e-6, gt=0)


class OptimizeRequest(BaseModel):
    params: ChannelParams
    epsilon: Optional[float] = Field(default=None, gt=0, description="KKT tolerance")
    kkt_grid: Optional[int] = Field(default=None, ge=2)
    units: UnitMode = UnitMode.NATS
    initial: Optional[ShellPmf] = None


class ScalarBoundsRequest(BaseModel):
    sigma1_sq: float
    sigma2_sq: float
    radius: float
    cs: Optional[float] = Field(default=None, ge=0, description="Secrecy capacity; average-power capacity when omitted")
    i_eve: float = Field(default=0.0, ge=0)


__all__ = [
    "AscentStep", "AsymptoteRequest", "AsymptoteResult", "BesselRatioEval", "ChannelParams",
    "DensityEval", "GAudit", "GEval", "KktReport", "McEstimate", "NoncentralChiSq",
    "OptimizeRequest", "OptimizeResult", "OptimizerConfig", "ParamViolation", "QuadratureConfig",
    "RadialExpectation", "RunManifest", "ScalarBoundReport", "ScalarBoundsRequest", "ShellPmf",
    "SolverReport", "ThresholdRequest", "ThresholdResult", "TracePhase", "TracePoint", "UnitMode",
]
