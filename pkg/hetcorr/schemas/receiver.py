from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hetcorr.core.constants import DEFAULT_OPTICAL_FREQUENCY_HZ, responsivity
from hetcorr.core.errors import ArgumentError


class LoMode(str, Enum):
    balanced_pair = "balanced_pair"
    single_pd_pair = "single_pd_pair"


class ClipPolicy(str, Enum):
    saturate = "saturate"


@dataclass(frozen=True, slots=True)
class WaveformSegment:
    samples: np.ndarray
    sample_rate: float
    label: str = ""

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if not self.sample_rate > 0:
            raise ArgumentError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.ndim != 1:
            raise ArgumentError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ArgumentError(f"segment {self.label!r} contains non-finite samples")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


class ReceiverSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    eta: float = Field(default=0.75, ge=0.0, le=1.0)
    optical_frequency_hz: float = Field(default=DEFAULT_OPTICAL_FREQUENCY_HZ, gt=0)
    z_load_ohms: float = Field(default=50.0, gt=0)
    p_lo_watts: float = Field(default=1e-3, gt=0)
    fano_lo: float = Field(default=1.0, ge=1.0)
    splitter_r: float = Field(default=0.5, ge=0.0, le=1.0)
    amp_gain_db: float | None = None
    amp_temp_k: float = Field(default=300.0, ge=0.0)
    dark_current_a: float = Field(default=0.0, ge=0.0)

    @property
    def responsivity_a_per_w(self) -> float:
        return responsivity(self.eta, self.optical_frequency_hz)


class SourceSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    psd_w_per_hz: float = Field(default=0.0, ge=0.0)
    band_hz: float | None = Field(default=None, gt=0)
    gamma_re: float = 1.0
    gamma_im: float = 0.0
    phase_jitter_rad_per_sqrt_s: float = Field(default=0.0, ge=0.0)
    lo_mode: LoMode = LoMode.balanced_pair

    @model_validator(mode="after")
    def _visibility_bounded(self) -> SourceSpec:
        if abs(self.gamma) > 1.0 + 1e-12:
            raise ValueError("|gamma| must not exceed 1")
        return self

    @property
    def gamma(self) -> complex:
        return complex(self.gamma_re, self.gamma_im)


class AdcSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    bits: int = Field(default=8, ge=1, le=24)
    full_scale_volts: float = Field(default=0.8, gt=0)
    clip_policy: ClipPolicy = ClipPolicy.saturate

    @property
    def step_volts(self) -> float:
        return self.full_scale_volts / 2**self.bits
