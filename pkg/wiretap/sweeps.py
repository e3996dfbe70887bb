"""Grid evaluations shared by the CLI and the HTTP service.

Every sweep returns rows in grid order. A grid point that raises becomes a
NaN row and is logged; the caller decides whether enough points succeeded.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np
from scipy import special, stats

from .config import (
    MMSE_SURROGATE_RATIO,
    PTP_SURROGATE_RATIO,
    TABLE1_SIGMA2_SQ,
    get_quadrature_config,
    map_ordered,
)
from .density import SecrecyDensity, g_function, g_function_lower_bound, mixture_log_terms
from .models import ChannelParams, OptimizerConfig, QuadratureConfig, ShellPmf
from .optimizer import optimize
from .regime import (
    asymptote_c,
    capacity_avg_power,
    capacity_low_amplitude,
    threshold,
    threshold_mmse,
    threshold_ptp,
)
from .validation import NonConvergence, TooManyPoints, WiretapError

logger = logging.getLogger("wiretap.sweeps")

# Fraction of grid points that must succeed for a sweep to count as done
SUCCESS_FRACTION = 0.9

LimitMode = Literal["exact", "surrogate"]


@dataclass
class SweepResult:
    """Ordered CSV-ready rows of one sweep."""
    name: str
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)
    failures: int = 0

    @property
    def success_ratio(self) -> float:
        return 1.0 - self.failures / len(self.rows) if self.rows else 1.0

    def succeeded(self) -> bool:
        return self.success_ratio >= SUCCESS_FRACTION


def parse_grid(spec: str) -> np.ndarray:
    """'start:stop:points' -> evenly spaced grid including both ends."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like start:stop:points (got {spec!r})")
    start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
    if points < 1 or not (math.isfinite(start) and math.isfinite(stop)):
        raise ValueError(f"invalid grid {spec!r}")
    return np.linspace(start, stop, points)


def run_grid(
    name: str,
    columns: list[str],
    grid: Sequence[float],
    evaluate: Callable[[float], list[float]],
    threads: Optional[int] = None,
) -> SweepResult:
    """Evaluate one row per grid point; failed points become NaN rows."""
    def guarded(x: float) -> tuple[list[float], bool]:
        try:
            return evaluate(x), True
        except (WiretapError, ValueError) as e:
            logger.warning(f"[Sweep] {name} failed at {x:g}: {e}")
            return [x] + [math.nan] * (len(columns) - 1), False

    outcomes = map_ordered(guarded, [float(x) for x in grid], threads)
    result = SweepResult(name=name, columns=columns)
    for row, ok in outcomes:
        result.rows.append(row)
        result.failures += 0 if ok else 1
    logger.info(f"[Sweep] {name}: {len(result.rows) - result.failures}/{len(result.rows)} points")
    return result


# =============================================================================
# Threshold Table
# =============================================================================

TABLE1_COLUMNS = ["n", "mmse"] + [f"{v:g}" for v in TABLE1_SIGMA2_SQ] + ["ptp"]


def table1_rows(
    n_values: Sequence[int],
    sigma1_sq: float = 1.0,
    limits: LimitMode = "exact",
    tol: float = 1e-4,
    cfg: Optional[QuadratureConfig] = None,
    threads: Optional[int] = None,
) -> SweepResult:
    """Thresholds for every (n, column) cell of the reference table.

    ``exact`` evaluates the MMSE and point-to-point columns as limits,
    ``surrogate`` with sigma2_sq = 1.001 sigma1_sq and 1000 sigma1_sq.
    """
    def cell(task: tuple[int, str]) -> float:
        n, column = task
        if column == "mmse":
            if limits == "exact":
                return threshold_mmse(sigma1_sq, n, tol, cfg).r_bar
            return threshold(sigma1_sq, MMSE_SURROGATE_RATIO * sigma1_sq, n, tol, cfg).r_bar
        if column == "ptp":
            if limits == "exact":
                return threshold_ptp(sigma1_sq, n, tol, cfg).r_bar
            return threshold(sigma1_sq, PTP_SURROGATE_RATIO * sigma1_sq, n, tol, cfg).r_bar
        return threshold(sigma1_sq, float(column) * sigma1_sq, n, tol, cfg).r_bar

    tasks = [(n, column) for n in n_values for column in TABLE1_COLUMNS[1:]]
    values = map_ordered(cell, tasks, threads)
    width = len(TABLE1_COLUMNS) - 1
    result = SweepResult(name="table1", columns=TABLE1_COLUMNS)
    for i, n in enumerate(n_values):
        result.rows.append([float(n)] + values[i * width:(i + 1) * width])
    return result


# =============================================================================
# Quantity Sweeps
# =============================================================================

def sweep_capacity(
    params: ChannelParams,
    radii: Sequence[float],
    opt_cfg: Optional[OptimizerConfig] = None,
    cfg: Optional[QuadratureConfig] = None,
    threads: Optional[int] = None,
) -> SweepResult:
    """Optimizer capacity against R, overlaid with the low-amplitude and average-power curves."""
    r_bar = threshold(params.sigma1_sq, params.sigma2_sq, params.n, cfg=cfg).r_bar

    def row(radius: float) -> list[float]:
        at = params.with_radius(radius)
        try:
            result = optimize(at, opt_cfg, cfg, threads=1)
        except (NonConvergence, TooManyPoints) as e:
            logger.warning(f"[Sweep] capacity at R={radius:g} is partial: {e}")
            result = e.partial
        low = capacity_low_amplitude(at, cfg, check_regime=False) if radius <= r_bar else math.nan
        return [
            radius,
            result.capacity,
            low,
            capacity_avg_power(params.sigma1_sq, params.sigma2_sq, radius * radius, params.n),
            float(result.pmf.size),
        ]

    columns = ["radius", "capacity", "capacity_low_amplitude", "capacity_avg_power", "support_size"]
    return run_grid("capacity", columns, radii, row, threads)


def sweep_threshold(
    sigma1_sq: float,
    sigma2_sq: float,
    n_values: Sequence[float],
    cfg: Optional[QuadratureConfig] = None,
    threads: Optional[int] = None,
) -> SweepResult:
    """Threshold and threshold / sqrt(n) against n, with the large-n slope."""
    c_value = asymptote_c(sigma1_sq, sigma2_sq, cfg=cfg).c_value

    def row(n: float) -> list[float]:
        r_bar = threshold(sigma1_sq, sigma2_sq, int(round(n)), cfg=cfg).r_bar
        return [n, r_bar, r_bar / math.sqrt(n), c_value]

    return run_grid("threshold", ["n", "r_bar", "r_bar_over_sqrt_n", "asymptote_c"], n_values, row, threads)


def sweep_gfunction(
    params: ChannelParams,
    ys: Sequence[float],
    cfg: Optional[QuadratureConfig] = None,
    threads: Optional[int] = None,
) -> SweepResult:
    def row(y: float) -> list[float]:
        return [y, g_function(y, params, cfg), g_function_lower_bound(y, params)]

    return run_grid("gfunction", ["y", "g", "g_lower_bound"], ys, row, threads)


def sweep_density(
    params: ChannelParams,
    pmf: ShellPmf,
    ts: Sequence[float],
    cfg: Optional[QuadratureConfig] = None,
    threads: Optional[int] = None,
) -> SweepResult:
    density = SecrecyDensity(pmf, params, cfg or get_quadrature_config())

    def row(t: float) -> list[float]:
        return [t, density.xi(t), density.xi_prime(t)]

    return run_grid("density", ["t", "xi", "xi_prime"], ts, row, threads)


def output_norm_pdf(pmf: ShellPmf, n: int, sigma_sq: float, r: np.ndarray) -> np.ndarray:
    """Density of ||Y|| for Y = X + sqrt(sigma_sq) Z: f_Q(r^2/sigma_sq) 2r/sigma_sq.

    For n = 1 this is the folded Gaussian mixture, finite at r = 0.
    """
    r = np.asarray(r, dtype=float)
    if n == 1:
        sigma = np.sqrt(sigma_sq)
        radii = np.asarray(pmf.radii)[:, None]
        folded = stats.norm.pdf(r, loc=radii, scale=sigma) + stats.norm.pdf(r, loc=-radii, scale=sigma)
        return np.asarray(pmf.probs) @ folded
    q = r * r / sigma_sq
    log_f = special.logsumexp(mixture_log_terms(pmf, n, sigma_sq, q), axis=0)
    return np.exp(log_f) * 2.0 * r / sigma_sq


def sweep_output_density(
    params: ChannelParams,
    pmf: ShellPmf,
    rs: Sequence[float],
    threads: Optional[int] = None,
) -> SweepResult:
    def row(r: float) -> list[float]:
        if r <= 0 and params.n > 1:
            return [r, 0.0, 0.0]
        point = np.array([r])
        return [
            r,
            float(output_norm_pdf(pmf, params.n, params.sigma1_sq, point)[0]),
            float(output_norm_pdf(pmf, params.n, params.sigma2_sq, point)[0]),
        ]

    return run_grid("output-density", ["r", "pdf_y1", "pdf_y2"], rs, row, threads)
