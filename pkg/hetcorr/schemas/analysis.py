from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator


class ResponsePoint(BaseModel):
    source_psd: float = Field(ge=0.0)
    output_power: float = Field(ge=0.0)
    std_err: float | None = Field(default=None, gt=0.0)


class ResponseCurve(BaseModel):
    points: list[ResponsePoint]
    channel: int | Literal["band"] = "band"
    label: str = ""

    @field_validator("points")
    @classmethod
    def _increasing(cls, points: list[ResponsePoint]) -> list[ResponsePoint]:
        if len(points) < 2:
            raise ValueError("a response curve needs at least 2 points")
        psds = [p.source_psd for p in points]
        if any(b <= a for a, b in zip(psds, psds[1:], strict=False)):
            raise ValueError("source_psd values must be strictly increasing")
        return points


class NoiseTempResult(BaseModel):
    t_rec: float
    intercept: float
    slope: float = Field(gt=0.0)
    quantum_ratio: float
    fit_residual: float = Field(ge=0.0)
    channel_bw_hz: float = Field(gt=0.0)
    label: str = ""

    @model_validator(mode="after")
    def _identity(self) -> NoiseTempResult:
        expected = self.intercept / self.slope
        if abs(self.t_rec - expected) > 1e-12 * max(abs(expected), 1e-300):
            raise ValueError("t_rec must equal intercept/slope")
        return self


class AllanResult(BaseModel):
    taus: list[float]
    variances: list[float]
    minimum_tau: float
    counts: list[int] = Field(default_factory=list)
    overlapping: bool = False

    @model_validator(mode="after")
    def _shape(self) -> AllanResult:
        if len(self.taus) != len(self.variances) or not self.taus:
            raise ValueError("taus and variances must be non-empty and of equal length")
        if any(b <= a for a, b in zip(self.taus, self.taus[1:], strict=False)):
            raise ValueError("taus must be strictly increasing")
        if any(v < 0 for v in self.variances):
            raise ValueError("variances must be non-negative")
        return self


class YFactorResult(BaseModel):
    y: float
    t_rec: float


class OracleReport(BaseModel):
    snr_het_pre: float
    snr_het_pre_limit: float
    snr_cc_pre: float
    snr_cc_pre_limit: float
    nr_het: float
    nr_het_limit: float
    snr_post: float
    nespd: float
    snr_het_el: float
    snr_het_el_limit: float
    snr_cc_el: float | None
    signal_variance: Literal["thermal", "poisson"] = "thermal"
