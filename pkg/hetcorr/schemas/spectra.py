from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from hetcorr.core.errors import ArgumentError


class Window(str, Enum):
    rectangular = "rectangular"


class ChunkSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    fft_length: int = Field(default=512, ge=2)
    window: Window = Window.rectangular
    # Chunks per synthesis block; part of the random-stream layout, so it is echoed with the config.
    block_chunks: int = Field(default=256, ge=1)

    @field_validator("fft_length")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError("fft_length must be a power of two")
        return value

    @property
    def n_channels(self) -> int:
        return self.fft_length // 2

    def channel_width(self, sample_rate: float) -> float:
        return sample_rate / self.fft_length


@dataclass(frozen=True, slots=True)
class SpectrumAccumulator:
    auto_a: np.ndarray
    auto_b: np.ndarray
    cross: np.ndarray
    chunk_count: int = 0

    def __post_init__(self) -> None:
        shapes = {self.auto_a.shape, self.auto_b.shape, self.cross.shape}
        if len(shapes) != 1 or self.auto_a.ndim != 1:
            raise ArgumentError(f"accumulator arrays must share one 1-D shape, got {shapes}")
        if self.chunk_count < 0:
            raise ArgumentError("chunk_count must be non-negative")

    @classmethod
    def empty(cls, n_channels: int) -> SpectrumAccumulator:
        return cls(
            auto_a=np.zeros(n_channels),
            auto_b=np.zeros(n_channels),
            cross=np.zeros(n_channels, dtype=np.complex128),
            chunk_count=0,
        )

    @property
    def n_channels(self) -> int:
        return int(self.auto_a.size)


@dataclass(frozen=True, slots=True)
class DickeAccumulator:
    on: SpectrumAccumulator
    off: SpectrumAccumulator
    switch_rate: float

    @classmethod
    def empty(cls, n_channels: int, switch_rate: float) -> DickeAccumulator:
        return cls(
            on=SpectrumAccumulator.empty(n_channels),
            off=SpectrumAccumulator.empty(n_channels),
            switch_rate=switch_rate,
        )


@dataclass(frozen=True, slots=True)
class SpectraDifference:
    auto_a: np.ndarray
    auto_b: np.ndarray
    cross: np.ndarray
