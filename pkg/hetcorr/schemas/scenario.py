from __future__ import annotations

from datetime import datetime
from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from hetcorr.schemas.receiver import AdcSpec, ReceiverSpec, SourceSpec
from hetcorr.schemas.spectra import ChunkSpec


class Experiment(str, Enum):
    power_sweep = "power_sweep"
    gain_study = "gain_study"
    allan = "allan"
    gain_opt = "gain_opt"
    oracles = "oracles"
    dicke = "dicke"
    fano_grid = "fano_grid"


class SwitchingSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["none", "dicke"] = "none"
    rate_hz: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _rate_for_dicke(self) -> SwitchingSpec:
        if self.mode == "dicke" and self.rate_hz is None:
            raise ValueError("dicke switching needs rate_hz")
        return self


class DriftConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    ramp_per_s: float = 0.0
    walk_per_sqrt_s: float = Field(default=0.0, ge=0.0)


class OracleParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    lo_linewidth_hz: float = Field(default=1e6, gt=0)
    signal_variance: Literal["thermal", "poisson"] = "thermal"


class FanoGridSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mean_per_bin: float = Field(default=2000.0, gt=0)
    n_bins: int = Field(default=200_000, ge=16)
    etas: list[float] = Field(default_factory=lambda: [0.5, 0.75, 1.0])
    reflectances: list[float] = Field(default_factory=lambda: [0.4, 0.5, 0.6])
    fanos: list[float] = Field(default_factory=lambda: [1.0, 10.0])

    @field_validator("etas", "reflectances")
    @classmethod
    def _unit_interval(cls, values: list[float]) -> list[float]:
        if not values or any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError("values must be non-empty and lie in [0, 1]")
        return values

    @field_validator("fanos")
    @classmethod
    def _super_poissonian(cls, values: list[float]) -> list[float]:
        if not values or any(v < 1.0 for v in values):
            raise ValueError("fano values must be non-empty and >= 1")
        return values


class ScenarioConfig(BaseModel):
    """Everything a run depends on; echoed verbatim into the run directory."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "scenario"
    experiment: Experiment = Experiment.power_sweep
    seed: int = Field(default=0, ge=0, lt=2**64)
    source: SourceSpec = Field(default_factory=SourceSpec)
    rx_a: ReceiverSpec = Field(default_factory=ReceiverSpec)
    rx_b: ReceiverSpec = Field(default_factory=ReceiverSpec)
    adc: AdcSpec = Field(default_factory=AdcSpec)
    chunk: ChunkSpec = Field(default_factory=ChunkSpec)
    sample_rate_hz: float = Field(default=16e6, gt=0)
    duration_s: float = Field(default=3.2768, gt=0)
    quantize: bool = True
    switching: SwitchingSpec = Field(default_factory=SwitchingSpec)
    drift: DriftConfig = Field(default_factory=DriftConfig)
    sweep_psd_w_per_hz: list[float] | None = None
    injected_c_lo: float | None = Field(default=None, ge=0.0, le=1.0)
    c_lo_from_splitters: bool = False
    gain_study_db: list[float] | None = None
    allan_readout_chunks: int = Field(default=64, ge=1)
    allan_overlapping: bool = False
    fit_channel: int | Literal["band"] = "band"
    fit_weighted: bool = False
    oracle: OracleParams = Field(default_factory=OracleParams)
    fano_grid: FanoGridSpec = Field(default_factory=FanoGridSpec)
    write_waveforms: bool | None = None

    @field_validator("sweep_psd_w_per_hz")
    @classmethod
    def _sweep_increasing(cls, values: list[float] | None) -> list[float] | None:
        if values is None:
            return values
        if any(v < 0 for v in values):
            raise ValueError("sweep values must be non-negative")
        if any(b <= a for a, b in zip(values, values[1:], strict=False)):
            raise ValueError("sweep values must be strictly increasing")
        return values

    @model_validator(mode="after")
    def _experiment_inputs(self) -> ScenarioConfig:
        n_samples = round(self.duration_s * self.sample_rate_hz)
        if n_samples < self.chunk.fft_length:
            raise ValueError("duration_s must cover at least one FFT chunk")
        if self.injected_c_lo is not None and self.c_lo_from_splitters:
            raise ValueError("set either injected_c_lo or c_lo_from_splitters, not both")
        if isinstance(self.fit_channel, int) and not 0 <= self.fit_channel < self.chunk.n_channels:
            raise ValueError(f"fit_channel must lie in [0, {self.chunk.n_channels})")
        if self.fit_weighted and self.fit_channel != "band":
            raise ValueError("weighted fits need per-chunk errors, only kept for fit_channel='band'")
        if self.experiment == Experiment.power_sweep and (
            self.sweep_psd_w_per_hz is None or len(self.sweep_psd_w_per_hz) < 2
        ):
            raise ValueError("power_sweep needs sweep_psd_w_per_hz with at least 2 values")
        if self.experiment == Experiment.gain_study and not self.gain_study_db:
            raise ValueError("gain_study needs gain_study_db")
        if self.experiment == Experiment.dicke and self.switching.mode != "dicke":
            raise ValueError("the dicke experiment needs switching.mode = 'dicke'")
        return self

    @property
    def n_samples(self) -> int:
        return round(self.duration_s * self.sample_rate_hz)

    @property
    def channel_width_hz(self) -> float:
        return self.chunk.channel_width(self.sample_rate_hz)


class ManifestFile(BaseModel):
    path: str
    sha256: str
    bytes: int


class RunManifest(BaseModel):
    config: ScenarioConfig
    version: str
    started_at: datetime
    wall_clock_s: float = Field(ge=0.0)
    poisson_gauss_threshold: float
    binomial_gauss_threshold: float
    files: list[ManifestFile] = Field(default_factory=list)
    summary: dict[str, float | str | None] = Field(default_factory=dict)
