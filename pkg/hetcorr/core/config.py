from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import AliasChoices, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    output_dir: Path = Field(
        default=Path("runs"),
        alias="HETCORR_OUTPUT_DIR",
        validation_alias=AliasChoices("HETCORR_OUTPUT_DIR", "HETCORR_OUT"),
    )
    workers: int = Field(default=1, ge=1, alias="HETCORR_WORKERS")
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO", alias="HETCORR_LOG_LEVEL"
    )
    log_format: Literal["json", "text"] = Field(default="json", alias="HETCORR_LOG_FORMAT")

    poisson_gauss_threshold: float = Field(default=1e4, gt=0, alias="HETCORR_POISSON_GAUSS_THRESHOLD")
    binomial_gauss_threshold: float = Field(
        default=1e4, gt=0, alias="HETCORR_BINOMIAL_GAUSS_THRESHOLD"
    )
    write_waveforms: bool = Field(default=False, alias="HETCORR_WRITE_WAVEFORMS")
    clip_warn_fraction: float = Field(default=0.01, ge=0, le=1, alias="HETCORR_CLIP_WARN_FRACTION")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
