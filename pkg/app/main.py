"""Main FastAPI application for RCS Verify."""

from contextlib import asynccontextmanager
from typing import Any, AsyncGenerator, Dict

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
import structlog
from prometheus_fastapi_instrumentator import Instrumentator

from app.core.config import settings
from app.core.dependencies import get_worker_pool, shutdown_worker_pool
from app.core.logging import setup_logging
from app.routers import verify

# Setup structured logging
setup_logging()
logger = structlog.get_logger()


@asynccontextmanager
async def lifespan(app: FastAPI) -> AsyncGenerator[None, None]:
    """Application lifecycle manager."""
    logger.info("Starting RCS Verify", version=settings.APP_VERSION)

    app.state.worker_pool = get_worker_pool()

    logger.info("RCS Verify initialized successfully", workers=settings.WORKER_THREADS)

    yield

    logger.info("Shutting down RCS Verify")
    shutdown_worker_pool()


app = FastAPI(
    title=settings.APP_NAME,
    description="Statistical verification of random circuit sampling output",
    version=settings.APP_VERSION,
    lifespan=lifespan,
    docs_url="/docs" if not settings.is_production() else None,
    redoc_url="/redoc" if not settings.is_production() else None,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=False,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Setup Prometheus metrics (must be done before including routers)
if settings.ENABLE_METRICS:
    instrumentator = Instrumentator()
    instrumentator.instrument(app).expose(app, endpoint="/metrics")

app.include_router(verify.router, prefix="/api", tags=["verify"])


@app.get("/", tags=["root"])
async def root() -> Dict[str, Any]:
    """Root endpoint."""
    return {
        "service": settings.APP_NAME,
        "version": settings.APP_VERSION,
        "environment": settings.ENVIRONMENT,
        "status": "operational",
    }


@app.get("/health", tags=["health"])
async def health_check() -> JSONResponse:
    """Health check endpoint."""
    health_status: Dict[str, Any] = {
        "status": "healthy",
        "service": settings.SERVICE_NAME,
        "version": settings.APP_VERSION,
        "checks": {},
    }

    try:
        import numpy as np
        import scipy

        health_status["checks"]["numerics"] = {
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        }
    except Exception as e:
        health_status["checks"]["numerics"] = f"unhealthy: {str(e)}"
        health_status["status"] = "degraded"

    status_code = 200 if health_status["status"] == "healthy" else 503
    return JSONResponse(content=health_status, status_code=status_code)


@app.get("/config", tags=["debug"], response_model=None)
async def get_config() -> Any:
    """Get current configuration (development only)."""
    if settings.is_production():
        return JSONResponse(
            content={"error": "Not available in production"}, status_code=403
        )

    return {
        "environment": settings.ENVIRONMENT,
        "workers": settings.WORKER_THREADS,
        "limits": {
            "max_sample_bytes": settings.MAX_SAMPLE_BYTES,
            "simulator_max_qubits": settings.SIMULATOR_MAX_QUBITS,
            "haar_max_dim": settings.HAAR_MAX_DIM,
        },
        "circuit": {
            "topology": settings.DEFAULT_TOPOLOGY,
            "pattern": settings.DEFAULT_PATTERN,
            "fsim_theta": settings.FSIM_THETA,
            "fsim_phi": settings.FSIM_PHI,
            "no_repeat": settings.ENFORCE_NO_REPEAT,
        },
        "nist": {
            "alpha": settings.NIST_ALPHA,
            "min_stream_bits": settings.NIST_MIN_STREAM_BITS,
            "block_size": settings.NIST_BLOCK_SIZE,
            "apen_m": settings.NIST_APEN_M,
        },
        "spectrum": {
            "slice_factor": settings.SLICE_FACTOR,
            "estimator": settings.OUTLIER_ESTIMATOR,
            "histogram_bins": settings.HISTOGRAM_BINS,
            "mp_edge_tolerance": settings.MP_EDGE_TOLERANCE,
        },
        "wasserstein": {
            "backend": settings.WASSERSTEIN_BACKEND,
            "length_policy": settings.WASSERSTEIN_LENGTH_POLICY,
        },
    }


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host="0.0.0.0",
        port=settings.SERVICE_PORT,
        reload=settings.is_development(),
        log_config=None,  # Use structlog instead
    )
