"""FastAPI endpoint implementations"""
import logging
from typing import Dict

import numpy as np
import scipy
from fastapi import APIRouter, HTTPException, Query, status

from app.core import exponents as ex
from app.core.config import get_settings
from app.core.errors import GenerationBudgetError, InsufficientDataError, ResourceLimitError
from app.models.schemas import (
    BoundProfile,
    BoundsRequest,
    BoundsResponse,
    ChannelParam,
    ExperimentConfig,
    SimulateRequest,
    SimulateResponse,
    SystemInfo,
)
from app.services.montecarlo import entropy_seed, estimate_exponent, get_montecarlo_service


logger = logging.getLogger(__name__)

router = APIRouter()


@router.get(
    "/profile",
    response_model=BoundProfile,
    summary="Channel constants",
    description="""
    Every constant that shapes the bounds for BSC(p): alpha_p, R0, R1,
    the two entropy minimizers, R_cr, R_TRC, R_hat and lambda_p.
    """
)
async def get_profile(p: float = Query(..., gt=0.0, lt=0.5, description="Crossover probability")) -> BoundProfile:
    """
    Compute the bound profile of a channel

    Args:
        p: Crossover probability

    Returns:
        BoundProfile
    """
    return ex.bound_profile(ChannelParam(p=p))


@router.post(
    "/bounds",
    response_model=BoundsResponse,
    summary="Bound table",
    description="""
    Evaluate the five exponent bounds on a uniform rate grid.

    Parameters:
    - **p**: Crossover probability, 0 < p < 0.5
    - **r_min**, **r_max**: Rate range in bits (default 0 to 0.6)
    - **steps**: Number of grid points (default 200)

    TRC entries are null at and above R_TRC(p).
    """
)
async def compute_bounds(request: BoundsRequest) -> BoundsResponse:
    """
    Compute the bound curve for one channel

    Args:
        request: Channel and rate grid

    Returns:
        Profile constants plus the curve
    """
    ch = ChannelParam(p=request.p)
    try:
        curve = ex.bound_curve(ch, request.r_min, request.r_max, request.steps)
    except ValueError as e:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=str(e)
        )
    return BoundsResponse(success=True, profile=ex.bound_profile(ch), curve=curve)


@router.post(
    "/simulate",
    response_model=SimulateResponse,
    summary="Monte Carlo simulation",
    description="""
    Estimate the bee-identification error probability for each blocklength.

    The response echoes the base seed; resubmitting with that seed reproduces
    every count. Trial counts above the configured cap are rejected.
    """
)
def simulate(request: SimulateRequest) -> SimulateResponse:
    """
    Run a simulation sweep

    Args:
        request: Experiment parameters

    Returns:
        One cell per blocklength and the fitted exponent when available
    """
    settings = get_settings()
    if request.trials > settings.api_max_trials:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"trials is capped at {settings.api_max_trials} per request"
        )
    seed = request.seed if request.seed is not None else entropy_seed()

    try:
        cfg = ExperimentConfig(
            n_list=request.n_list,
            rate=request.rate,
            p=request.p,
            ensemble=request.ensemble,
            epsilon=request.epsilon,
            decoder=request.decoder,
            trials=request.trials,
            base_seed=seed,
            fresh_codebook_per_trial=request.fresh_codebook_per_trial,
            gmd_threshold=request.gmd_threshold,
            tolerance=request.tolerance,
            workers=settings.workers,
        )
        cells = list(get_montecarlo_service().run(cfg))
    except GenerationBudgetError as e:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=str(e)
        )
    except (ValueError, ResourceLimitError) as e:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=str(e)
        )
    except Exception as e:
        logger.exception("simulation failed")
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"Simulation failed: {str(e)}"
        )

    try:
        fit = estimate_exponent(cells)
    except InsufficientDataError:
        fit = None
    return SimulateResponse(success=True, seed=seed, cells=cells, fit=fit)


@router.get(
    "/info",
    response_model=SystemInfo,
    summary="Get system information",
    description="Library versions and the active configuration"
)
async def get_system_info() -> SystemInfo:
    """
    Get system information

    Returns:
        System information including settings
    """
    settings = get_settings()
    return SystemInfo(
        status="operational",
        versions={"numpy": np.__version__, "scipy": scipy.__version__},
        configuration={
            "default_p": settings.default_p,
            "default_trials": settings.default_trials,
            "api_max_trials": settings.api_max_trials,
            "workers": settings.workers,
            "max_codebook_bits": settings.max_codebook_bits,
            "trc_max_attempts": settings.trc_max_attempts,
            "bruteforce_max_m": settings.bruteforce_max_m,
            "exhaustive_max_n": settings.exhaustive_max_n,
        }
    )


@router.get(
    "/health",
    summary="Health check",
    description="Check if the API is running"
)
async def health_check() -> Dict[str, str]:
    """
    Health check endpoint

    Returns:
        Status message
    """
    return {"status": "healthy", "message": "Bee-identification API is operational"}
