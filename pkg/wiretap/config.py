"""
Wiretap configuration - environment-driven defaults and reference constants.

Quadrature and optimizer defaults are built lazily once per process; the
worker pool size comes from WIRETAP_THREADS.
"""

import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

from .models import OptimizerConfig, QuadratureConfig

T = TypeVar("T")
R = TypeVar("R")

# Worker pool cap for sweeps and grid scans
WIRETAP_THREADS = os.environ.get("WIRETAP_THREADS", "")

# Logging level name for the `wiretap` logger
WIRETAP_LOG_LEVEL = os.environ.get("WIRETAP_LOG_LEVEL", "INFO")

# Optional quadrature overrides
WIRETAP_REL_TOL = os.environ.get("WIRETAP_REL_TOL", "")
WIRETAP_ABS_TOL = os.environ.get("WIRETAP_ABS_TOL", "")

# Eavesdropper variances of the reference threshold table (sigma1_sq = 1)
TABLE1_SIGMA2_SQ = [1.001, 1.5, 10.0, 1000.0]

# Stand-in ratios sigma2_sq / sigma1_sq for the MMSE and point-to-point columns
MMSE_SURROGATE_RATIO = 1.001
PTP_SURROGATE_RATIO = 1000.0

# (n, sigma1, sigma2) sets for the G-function sign-change audit (std devs, not variances)
G_AUDIT_SETS = [
    (3, 1.0, 2.0),
    (11, 1.0, 2.0),
    (4, 3.0, 3.1),
    (11, 3.0, 3.1),
]

# Version tag of every CSV layout the CLI writes
CSV_SCHEMA_VERSION = "v1"


def worker_count(threads: Optional[int] = None) -> int:
    """Resolve the worker pool size: explicit value, then WIRETAP_THREADS, then cpu count."""
    if threads is not None:
        return max(1, int(threads))
    if WIRETAP_THREADS.strip():
        try:
            return max(1, int(WIRETAP_THREADS))
        except ValueError:
            logging.getLogger("wiretap.config").warning(
                f"[Config] Ignoring malformed WIRETAP_THREADS={WIRETAP_THREADS!r}"
            )
    return max(1, os.cpu_count() or 1)


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> list[R]:
    """Apply ``fn`` over ``items`` in a thread pool, results in input order."""
    items = list(items)
    workers = min(worker_count(threads), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def configure_logging(level: Optional[str] = None) -> None:
    """Send `wiretap` diagnostics to stderr; stdout stays clean for JSON."""
    root = logging.getLogger("wiretap")
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        root.addHandler(handler)
    root.setLevel((level or WIRETAP_LOG_LEVEL).upper())


def create_quadrature_config() -> QuadratureConfig:
    overrides = {}
    if WIRETAP_REL_TOL.strip():
        overrides["rel_tol"] = float(WIRETAP_REL_TOL)
    if WIRETAP_ABS_TOL.strip():
        overrides["abs_tol"] = float(WIRETAP_ABS_TOL)
    return QuadratureConfig(**overrides)


# Lazy-loaded defaults
_quadrature_config: Optional[QuadratureConfig] = None
_optimizer_config: Optional[OptimizerConfig] = None


def get_quadrature_config() -> QuadratureConfig:
    """Get or create the default quadrature config singleton."""
    global _quadrature_config
    if _quadrature_config is None:
        _quadrature_config = create_quadrature_config()
    return _quadrature_config


def get_optimizer_config() -> OptimizerConfig:
    """Get or create the default optimizer config singleton."""
    global _optimizer_config
    if _optimizer_config is None:
        _optimizer_config = OptimizerConfig()
    return _optimizer_config
