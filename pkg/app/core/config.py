"""Configuration management for the bee-identification toolkit"""
import logging
from typing import Optional
from pydantic_settings import BaseSettings
from pydantic import Field


class Settings(BaseSettings):
    """Application settings"""

    # API Configuration
    api_title: str = Field(default="Bee-Identification Exponents API", env="BEEID_API_TITLE")
    api_version: str = Field(default="1.0.0", env="BEEID_API_VERSION")
    api_host: str = Field(default="0.0.0.0", env="BEEID_API_HOST")
    api_port: int = Field(default=8000, env="BEEID_API_PORT")

    # Channel / experiment defaults
    default_p: float = Field(default=0.01, env="BEEID_DEFAULT_P")
    default_trials: int = Field(default=10_000, env="BEEID_DEFAULT_TRIALS")
    default_seed: Optional[int] = Field(default=None, env="BEEID_DEFAULT_SEED")
    api_max_trials: int = Field(default=200_000, env="BEEID_API_MAX_TRIALS")
    workers: int = Field(default=1, env="BEEID_WORKERS")

    # Codebook generation limits
    max_codebook_bits: int = Field(default=2**26, env="BEEID_MAX_CODEBOOK_BITS")
    trc_max_attempts: int = Field(default=1_000_000, env="BEEID_TRC_MAX_ATTEMPTS")
    trc_default_epsilon: float = Field(default=0.02, env="BEEID_TRC_DEFAULT_EPSILON")

    # Decoder guards
    bruteforce_max_m: int = Field(default=8, env="BEEID_BRUTEFORCE_MAX_M")
    exhaustive_max_n: int = Field(default=20, env="BEEID_EXHAUSTIVE_MAX_N")

    # Verification grid
    verify_grid_points: int = Field(default=500, env="BEEID_VERIFY_GRID_POINTS")
    verify_rates_per_p: int = Field(default=100, env="BEEID_VERIFY_RATES_PER_P")
    verify_oracle_instances: int = Field(default=1000, env="BEEID_VERIFY_ORACLE_INSTANCES")

    # Output
    csv_significant_digits: int = Field(default=10, env="BEEID_CSV_SIGNIFICANT_DIGITS")
    log_level: str = Field(default="INFO", env="BEEID_LOG_LEVEL")

    class Config:
        env_file = ".env"
        case_sensitive = False
        env_prefix = "BEEID_"


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get application settings"""
    return settings


def configure_logging(level: Optional[str] = None) -> None:
    """
    Configure root logging once for CLI and server entry points

    Args:
        level: Log level name; falls back to the configured default
    """
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
