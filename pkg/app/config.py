"""Application configuration - reads from .env file."""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load .env from project root
env_path = Path(__file__).resolve().parent.parent / ".env"
load_dotenv(env_path)


class Settings:
    # App
    APP_ENV: str = os.getenv("APP_ENV", "development")
    APP_DEBUG: bool = os.getenv("APP_DEBUG", "false").lower() == "true"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()

    # Post-training
    SEED: int = int(os.getenv("ANNSYNTH_SEED", "0"))
    MAX_Q: int = int(os.getenv("ANNSYNTH_MAX_Q", "16"))
    VALIDATION_FRACTION: float = float(
        os.getenv("ANNSYNTH_VALIDATION_FRACTION", "0.30")
    )
    INPUT_BITS: int = int(os.getenv("ANNSYNTH_INPUT_BITS", "8"))

    # Shift-adds synthesis
    TRIALS: int = int(os.getenv("ANNSYNTH_TRIALS", "1000"))
    SEARCH_BUDGET: int = int(os.getenv("ANNSYNTH_SEARCH_BUDGET", "20000"))

    # HDL generation
    CLOCK_PERIOD: float = float(os.getenv("ANNSYNTH_CLOCK_PERIOD", "1.0"))
    TB_VECTORS: int = int(os.getenv("ANNSYNTH_TB_VECTORS", "10"))

    # Paths
    BASE_DIR: Path = Path(__file__).resolve().parent.parent
    DATA_DIR: Path = BASE_DIR / "data"
    OUT_DIR: Path = Path(os.getenv("ANNSYNTH_OUT_DIR", "out"))
    TEMPLATES_DIR: Path = BASE_DIR / "app" / "templates"


settings = Settings()
