"""
Wiretap Capacity Server - HTTP access to the capacity library.

Request bodies are the pydantic models from wiretap.models. Numerics run in
a worker thread so the event loop keeps serving /health during long solves.
"""

import asyncio
import logging
from contextlib import asynccontextmanager
from typing import Callable, TypeVar

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import __version__
from .bounds import scalar_bound_report
from .config import configure_logging, get_optimizer_config, get_quadrature_config
from .models import (
    AsymptoteRequest,
    AsymptoteResult,
    ChannelParams,
    OptimizeRequest,
    OptimizerConfig,
    ScalarBoundReport,
    ScalarBoundsRequest,
    ThresholdRequest,
    ThresholdResult,
)
from .optimizer import optimize
from .regime import asymptote_c, capacity_low_amplitude, threshold
from .validation import (
    DomainError,
    NonConvergence,
    NotDegradedError,
    OutsideLowAmplitudeRegime,
    ParamsValidationError,
    TooManyPoints,
    WiretapError,
    validate_params,
)

logger = logging.getLogger("wiretap.index")

T = TypeVar("T")


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Configure logging and warm the config singletons."""
    configure_logging()
    get_quadrature_config()
    get_optimizer_config()
    logger.info(f"[Server] wiretap-capacity {__version__} ready")
    yield
    logger.info("[Server] shutting down")


app = FastAPI(
    title="Wiretap Capacity",
    description="Secrecy capacity of the amplitude-constrained Gaussian wiretap channel",
    version=__version__,
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


async def run_numerics(fn: Callable[..., T], *args, **kwargs) -> T:
    """Run a library call off the event loop, mapping its errors to HTTP codes."""
    try:
        return await asyncio.to_thread(fn, *args, **kwargs)
    except (ParamsValidationError, DomainError, NotDegradedError, OutsideLowAmplitudeRegime) as e:
        raise HTTPException(status_code=422, detail=str(e))
    except (NonConvergence, TooManyPoints) as e:
        detail = {"error": str(e)}
        if e.partial is not None:
            detail["partial"] = e.partial.model_dump()
        raise HTTPException(status_code=500, detail=detail)
    except WiretapError as e:
        logger.error(f"[Server] solver failure in {getattr(fn, '__name__', fn)}: {e}")
        raise HTTPException(status_code=500, detail=str(e))


@app.post("/threshold", response_model=ThresholdResult)
async def post_threshold(request: ThresholdRequest):
    """Low-amplitude threshold R_bar for the given noise variances and dimension."""
    return await run_numerics(threshold, request.sigma1_sq, request.sigma2_sq, request.n, request.tol)


@app.post("/capacity/low-amplitude")
async def post_capacity_low_amplitude(params: ChannelParams):
    capacity = await run_numerics(capacity_low_amplitude, params)
    return {"params": params.model_dump(), "capacity": capacity, "units": "nats"}


@app.post("/optimize")
async def post_optimize(request: OptimizeRequest):
    """Run the optimizer; 500 with the partial result when no certificate is found."""
    overrides = {k: v for k, v in {"epsilon": request.epsilon, "kkt_grid": request.kkt_grid}.items() if v is not None}
    opt_cfg = OptimizerConfig(**{**get_optimizer_config().model_dump(), **overrides})
    result = await run_numerics(optimize, request.params, opt_cfg, None, request.initial)
    payload = result.model_dump()
    payload["capacity"] = result.capacity_in(request.units)
    payload["units"] = request.units.value
    return payload


@app.post("/scalar-bounds", response_model=ScalarBoundReport)
async def post_scalar_bounds(request: ScalarBoundsRequest):
    try:
        params = validate_params({
            "sigma1_sq": request.sigma1_sq, "sigma2_sq": request.sigma2_sq, "n": 1, "radius": request.radius,
        })
    except ParamsValidationError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return await run_numerics(scalar_bound_report, params, request.cs, None, request.i_eve)


@app.post("/asymptote", response_model=AsymptoteResult)
async def post_asymptote(request: AsymptoteRequest):
    return await run_numerics(asymptote_c, request.sigma1_sq, request.sigma2_sq, request.tol)


@app.get("/")
async def root():
    """Service info."""
    return {
        "status": "ok",
        "service": "Wiretap Capacity",
        "version": __version__,
        "endpoints": ["/threshold", "/capacity/low-amplitude", "/optimize", "/scalar-bounds", "/asymptote"],
    }


@app.get("/health")
async def health():
    """Health check for monitoring."""
    return {"status": "healthy"}
