from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from hetcorr.core.errors import ArgumentError


@dataclass(frozen=True, slots=True)
class PhotonCountStream:
    counts: np.ndarray
    bin_duration: float
    label: str = ""
    non_negative: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 1:
            raise ArgumentError("counts must be one-dimensional")
        if not self.bin_duration > 0:
            raise ArgumentError(f"bin_duration must be positive, got {self.bin_duration}")
        if self.non_negative and counts.size and counts.min() < 0:
            raise ArgumentError(f"stream {self.label!r} must have non-negative counts")

    def __len__(self) -> int:
        return int(self.counts.size)

    @property
    def mean(self) -> float:
        return float(self.counts.mean())


class SplitterSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: float = Field(default=0.5, ge=0.0, le=1.0)

    @property
    def t(self) -> float:
        return 1.0 - self.r


class DetectorSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    eta: float = Field(default=1.0, ge=0.0, le=1.0)
    dark_rate: float = Field(default=0.0, ge=0.0)


class FanoEstimate(BaseModel):
    fano: float = Field(ge=0.0)
    std_err: float = Field(ge=0.0)
    mean_ref: float
    n_bins: int
