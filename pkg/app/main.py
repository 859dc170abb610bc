"""Main FastAPI application"""
import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from app.api.endpoints import router
from app.core.config import configure_logging, get_settings


logger = logging.getLogger(__name__)


def create_application() -> FastAPI:
    """
    Create and configure the FastAPI application

    Returns:
        Configured FastAPI application
    """
    settings = get_settings()
    configure_logging()

    app = FastAPI(
        title=settings.api_title,
        version=settings.api_version,
        description="""
        # Bee-Identification Exponents API

        Error exponents for recovering which noisy barcode belongs to which bee
        when m codewords cross a binary symmetric channel in unknown order.

        ## Features

        - **Profile**: Channel constants alpha_p, R0, R1, R_cr, R_TRC, lambda_p
        - **Bounds**: Random-code and typical-random-code lower bounds with the
          universal upper bound, tabulated against rate
        - **Simulation**: Seeded Monte Carlo runs of the independent, joint,
          GMD and brute-force decoders with Wilson intervals and a fitted exponent

        ## Getting Started

        1. GET `/profile?p=0.01` for the channel constants
        2. POST to `/bounds` for a bound table
        3. POST to `/simulate` for empirical error probabilities
        """,
        docs_url="/docs",
        redoc_url="/redoc",
        openapi_url="/openapi.json"
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    app.include_router(router, prefix="/api/v1", tags=["Bee identification"])

    @app.on_event("startup")
    async def startup_event():
        """Log the active limits on startup"""
        logger.info("Starting %s v%s", settings.api_title, settings.api_version)
        logger.info("Trials capped at %d per request, %d worker(s)", settings.api_max_trials, settings.workers)
        logger.info("Codebook cap %d bits, brute force up to m=%d", settings.max_codebook_bits, settings.bruteforce_max_m)

    @app.on_event("shutdown")
    async def shutdown_event():
        logger.info("Shutting down %s", settings.api_title)

    return app


# Create app instance
app = create_application()


if __name__ == "__main__":
    import uvicorn
    settings = get_settings()

    uvicorn.run(
        "app.main:app",
        host=settings.api_host,
        port=settings.api_port,
        reload=True
    )
