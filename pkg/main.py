"""annsynth - FastAPI application entry point."""

import logging
from contextlib import asynccontextmanager
from importlib.metadata import PackageNotFoundError, version

from fastapi import FastAPI

from app.config import settings
from app.routers import synthesis

logger = logging.getLogger(__name__)

try:
    __version__ = version("ann-hdl-synth")
except PackageNotFoundError:
    __version__ = "0.1.0"


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Startup / shutdown lifecycle."""
    settings.OUT_DIR.mkdir(parents=True, exist_ok=True)
    logger.info("annsynth %s (%s)", __version__, settings.APP_ENV)
    yield


app = FastAPI(title="annsynth", version=__version__, lifespan=lifespan)


@app.get("/health")
async def health():
    return {"status": "ok", "version": __version__}


# Routers
app.include_router(synthesis.router)
