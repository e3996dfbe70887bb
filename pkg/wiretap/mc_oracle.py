"""Monte Carlo cross-checks for the quadrature path.

Samples are drawn in fixed-size blocks, each with its own Philox stream
spawned from the root seed, so an estimate depends only on (seed, samples)
and not on how blocks are scheduled across threads.
"""

import logging
import math
from typing import Callable, Literal, Optional

import numpy as np
from scipy import special

from .config import map_ordered
from .density import mixture_log_terms
from .models import ChannelParams, McEstimate, ShellPmf
from .validation import DomainError

logger = logging.getLogger("wiretap.mc_oracle")

MIN_SAMPLES = 10_000
BLOCK_SIZE = 100_000

SamplingRoute = Literal["gaussian", "poisson"]


def _blocks(samples: int, block_size: int, seed: int) -> list[tuple[int, np.random.SeedSequence]]:
    sizes = [block_size] * (samples // block_size)
    if samples % block_size:
        sizes.append(samples % block_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return list(zip(sizes, children))


def _generator(child: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(child))


def _estimate(values: list[np.ndarray], seed: int) -> McEstimate:
    pooled = np.concatenate(values)
    std = float(np.std(pooled, ddof=1)) if pooled.size > 1 else 0.0
    return McEstimate(
        mean=float(np.mean(pooled)),
        std_error=std / math.sqrt(pooled.size),
        samples=int(pooled.size),
        seed=seed,
    )


def _check_samples(samples: int) -> None:
    if samples < MIN_SAMPLES:
        raise DomainError(f"Monte Carlo estimates need at least {MIN_SAMPLES} samples (got {samples})")


# =============================================================================
# Secrecy Information
# =============================================================================

def _log_ratio(pmf: ShellPmf, n: int, sigma_sq: float, shell_radius: np.ndarray,
               along: np.ndarray, across: np.ndarray) -> np.ndarray:
    """log f(y | x) - log f(y) per sample for one channel.

    The noise is split into its coordinate along x (standard normal) and the
    squared norm of the orthogonal part (chi-square with n - 1 dof).
    """
    sigma = math.sqrt(sigma_sq)
    norm_sq = (shell_radius + sigma * along) ** 2 + sigma_sq * across
    q = norm_sq / sigma_sq
    log_mix = special.logsumexp(mixture_log_terms(pmf, n, sigma_sq, q), axis=0)
    half = n / 2.0
    return (
        -half * math.log(2.0)
        - 0.5 * (along * along + across)
        - log_mix
        + (half - 1.0) * np.log(q)
        - special.gammaln(half)
    )


def mc_secrecy_information(
    pmf: ShellPmf,
    params: ChannelParams,
    samples: int = 1_000_000,
    seed: int = 0,
    threads: Optional[int] = None,
) -> McEstimate:
    """Sampling estimate of I(X;Y1) - I(X;Y2) in nats.

    Both channels share the standardized noise of each sample; the
    difference of the per-sample log ratios is averaged.
    """
    _check_samples(samples)
    n = params.n
    radii = np.asarray(pmf.radii)
    probs = np.asarray(pmf.probs)

    def run_block(block: tuple[int, np.random.SeedSequence]) -> np.ndarray:
        size, child = block
        rng = _generator(child)
        shells = radii[rng.choice(radii.size, size=size, p=probs)]
        along = rng.standard_normal(size)
        across = rng.chisquare(n - 1, size) if n > 1 else np.zeros(size)
        legit = _log_ratio(pmf, n, params.sigma1_sq, shells, along, across)
        eve = _log_ratio(pmf, n, params.sigma2_sq, shells, along, across)
        return legit - eve

    estimate = _estimate(map_ordered(run_block, _blocks(samples, BLOCK_SIZE, seed), threads), seed)
    logger.info(
        f"[Oracle] secrecy information {estimate.mean:.6f} +- {estimate.std_error:.2e} "
        f"({samples} samples, seed {seed})"
    )
    return estimate


# =============================================================================
# Radial Expectations
# =============================================================================

def mc_radial_expect(
    n: int,
    shift: float,
    s: float,
    phi: Callable[[np.ndarray], np.ndarray],
    samples: int = 1_000_000,
    seed: int = 0,
    route: SamplingRoute = "gaussian",
    threads: Optional[int] = None,
) -> McEstimate:
    """Sampling estimate of E[phi(||x + sqrt(s) Z||)] with ||x|| = shift.

    ``gaussian`` draws Z in n dimensions directly; ``poisson`` draws the
    squared norm from the Poisson mixture of central chi-squares.
    """
    _check_samples(samples)
    root_s = math.sqrt(s)
    offset = shift / root_s
    block_size = BLOCK_SIZE if route == "poisson" else max(1000, 2_000_000 // n)

    def run_block(block: tuple[int, np.random.SeedSequence]) -> np.ndarray:
        size, child = block
        rng = _generator(child)
        if route == "gaussian":
            z = rng.standard_normal((size, n))
            z[:, 0] += offset
            norm_sq = np.einsum("ij,ij->i", z, z)
        elif route == "poisson":
            mixing = rng.poisson(0.5 * offset * offset, size)
            norm_sq = rng.chisquare(n + 2 * mixing)
        else:
            raise ValueError(f"unknown sampling route {route!r}")
        return np.asarray(phi(root_s * np.sqrt(norm_sq)), dtype=float)

    return _estimate(map_ordered(run_block, _blocks(samples, block_size, seed), threads), seed)
