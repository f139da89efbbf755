from __future__ import annotations

import logging
import math

import allantools
import numpy as np

from hetcorr.core.constants import K_B, dsb_quantum_temperature
from hetcorr.core.errors import (
    ArgumentError,
    FitFailureError,
    InconsistentDataError,
    UndefinedValueError,
)
from hetcorr.schemas.analysis import (
    AllanResult,
    NoiseTempResult,
    ResponseCurve,
    ResponsePoint,
    YFactorResult,
)

logger = logging.getLogger(__name__)

MIN_ALLAN_READOUTS = 16


def y_factor(p_hot: float, p_cold: float, t_hot: float, t_cold: float) -> YFactorResult:
    if p_cold <= 0:
        raise ArgumentError("cold-load output power must be positive")
    if t_hot <= t_cold:
        raise ArgumentError("hot load must be hotter than the cold load")
    y = p_hot / p_cold
    if y <= 1:
        raise InconsistentDataError(f"Y={y:.6g} <= 1 although t_hot > t_cold")
    return YFactorResult(y=y, t_rec=(t_hot - y * t_cold) / (y - 1.0))


def source_temperature(psd: float) -> float:
    return psd / K_B


def fit_response(
    curve: ResponseCurve,
    channel_bw: float,
    *,
    frequency: float,
    weighted: bool = False,
) -> NoiseTempResult:
    """Straight-line fit of output power against source temperature.

    T_rec = intercept/slope. `weighted` uses 1/std_err weights and needs them on every point.
    """
    temps = np.array([source_temperature(p.source_psd) for p in curve.points])
    powers = np.array([p.output_power for p in curve.points])
    if np.any(powers <= 0):
        raise ArgumentError("response outputs must be positive")
    weights = None
    if weighted:
        errs = [p.std_err for p in curve.points]
        if any(e is None for e in errs):
            raise ArgumentError("weighted fit needs std_err on every point")
        weights = 1.0 / np.asarray(errs, dtype=np.float64)

    slope, intercept = np.polyfit(temps, powers, 1, w=weights)
    if not slope > 0:
        raise FitFailureError(f"non-positive slope {slope:.6g} in {curve.label or 'response'} fit")
    model = intercept + slope * temps
    residual = float(np.sqrt(np.mean(((powers - model) / model) ** 2)))
    t_rec = intercept / slope
    return NoiseTempResult(
        t_rec=t_rec,
        intercept=float(intercept),
        slope=float(slope),
        quantum_ratio=t_rec / dsb_quantum_temperature(frequency),
        fit_residual=residual,
        channel_bw_hz=channel_bw,
        label=curve.label,
    )


def curve_from_arrays(
    psds: list[float] | np.ndarray,
    powers: list[float] | np.ndarray,
    *,
    std_errs: list[float] | np.ndarray | None = None,
    channel: int | str = "band",
    label: str = "",
) -> ResponseCurve:
    errs = [None] * len(psds) if std_errs is None else list(std_errs)
    points = [
        ResponsePoint(source_psd=float(p), output_power=float(o), std_err=e)
        for p, o, e in zip(psds, powers, errs, strict=True)
    ]
    return ResponseCurve(points=points, channel=channel, label=label)


def allan_variance(
    series: list[float] | np.ndarray,
    readout_interval: float,
    *,
    overlapping: bool = False,
) -> AllanResult:
    data = np.asarray(series, dtype=np.float64)
    if data.ndim != 1 or data.size < MIN_ALLAN_READOUTS:
        raise ArgumentError(
            f"Allan variance needs at least {MIN_ALLAN_READOUTS} readouts, got {data.size}"
        )
    if readout_interval <= 0:
        raise ArgumentError("readout interval must be positive")
    estimator = allantools.oadev if overlapping else allantools.adev
    taus, devs, _errs, counts = estimator(
        data, rate=1.0 / readout_interval, data_type="freq", taus="octave"
    )
    keep = np.isfinite(devs) & (np.asarray(counts) > 0)
    taus = np.asarray(taus)[keep]
    variances = np.asarray(devs)[keep] ** 2
    counts = np.asarray(counts)[keep]
    if taus.size == 0:
        raise ArgumentError("series too short for any Allan estimate")
    return AllanResult(
        taus=taus.tolist(),
        variances=variances.tolist(),
        minimum_tau=float(taus[int(np.argmin(variances))]),
        counts=[int(c) for c in counts],
        overlapping=overlapping,
    )


def allan_slope(
    result: AllanResult, tau_min: float | None = None, tau_max: float | None = None
) -> float:
    taus = np.asarray(result.taus)
    variances = np.asarray(result.variances)
    mask = np.ones(taus.size, dtype=bool)
    if tau_min is not None:
        mask &= taus >= tau_min
    if tau_max is not None:
        mask &= taus <= tau_max
    mask &= variances > 0
    if np.count_nonzero(mask) < 2:
        raise FitFailureError("fewer than two Allan points in the requested window")
    slope, _ = np.polyfit(np.log10(taus[mask]), np.log10(variances[mask]), 1)
    return float(slope)


def scatter_temperature(readouts: np.ndarray, t_rec: float) -> float:
    readouts = np.asarray(readouts, dtype=np.float64)
    if readouts.size < 2:
        raise ArgumentError("need at least two readouts")
    mean = readouts.mean()
    if mean <= 0:
        raise ArgumentError("readouts must have a positive mean")
    return float(readouts.std(ddof=1) / mean * t_rec)


def to_db(value: float) -> float:
    if value <= 0:
        return -math.inf
    return 10.0 * math.log10(value)


RECEIVER_COLUMNS = ("receiver", "t_rec_k", "quantum_ratio", "channel_bw_hz", "fit_residual")
GAIN_STUDY_COLUMNS = ("gain_db", "p_ac_db", "p_cc_db", "c_lo", "clip_fraction")


def receiver_table_rows(results: list[NoiseTempResult]) -> list[dict[str, object]]:
    return [
        {
            "receiver": r.label,
            "t_rec_k": r.t_rec,
            "quantum_ratio": r.quantum_ratio,
            "channel_bw_hz": r.channel_bw_hz,
            "fit_residual": r.fit_residual,
        }
        for r in results
    ]


def suppression_table_row(
    *, gain_db: float, p_ac: float, p_cc: float, clip_fraction: float
) -> dict[str, object]:
    if p_ac <= 0:
        raise UndefinedValueError("auto-correlation floor must be positive")
    return {
        "gain_db": gain_db,
        "p_ac_db": to_db(p_ac),
        "p_cc_db": to_db(p_cc),
        "c_lo": p_cc / p_ac,
        "clip_fraction": clip_fraction,
    }
