from __future__ import annotations

import logging
from typing import Literal

import numpy as np

from hetcorr.core.errors import ArgumentError, UndefinedValueError
from hetcorr.schemas.receiver import WaveformSegment
from hetcorr.schemas.spectra import (
    ChunkSpec,
    DickeAccumulator,
    SpectraDifference,
    SpectrumAccumulator,
)

logger = logging.getLogger(__name__)


def _chunks(samples: np.ndarray, fft_length: int) -> np.ndarray:
    n_chunks = samples.size // fft_length
    if n_chunks < 1:
        raise ArgumentError(f"segment of {samples.size} samples is shorter than one chunk")
    return samples[: n_chunks * fft_length].reshape(n_chunks, fft_length)


def channelize_array(samples: np.ndarray, fft_length: int) -> np.ndarray:
    """Positive-frequency spectra of non-overlapping chunks, shape (n_chunks, fft_length/2).

    Scaled by sqrt(2)/N so that |X_k|² is the one-sided power in channel k.
    """
    chunks = _chunks(np.asarray(samples, dtype=np.float64), fft_length)
    spectra = np.fft.rfft(chunks, axis=1)[:, : fft_length // 2]
    return spectra * (np.sqrt(2.0) / fft_length)


def channelize(seg: WaveformSegment, spec: ChunkSpec) -> np.ndarray:
    return channelize_array(seg.samples, spec.fft_length)


def accumulate(
    spectra_a: np.ndarray, spectra_b: np.ndarray, acc: SpectrumAccumulator
) -> SpectrumAccumulator:
    if spectra_a.shape != spectra_b.shape or spectra_a.ndim != 2:
        raise ArgumentError(f"spectra shapes differ: {spectra_a.shape} vs {spectra_b.shape}")
    if spectra_a.shape[1] != acc.n_channels:
        raise ArgumentError(
            f"spectra have {spectra_a.shape[1]} channels, accumulator has {acc.n_channels}"
        )
    return SpectrumAccumulator(
        auto_a=acc.auto_a + np.sum(np.abs(spectra_a) ** 2, axis=0),
        auto_b=acc.auto_b + np.sum(np.abs(spectra_b) ** 2, axis=0),
        cross=acc.cross + np.sum(spectra_a * np.conj(spectra_b), axis=0),
        chunk_count=acc.chunk_count + spectra_a.shape[0],
    )


def merge(first: SpectrumAccumulator, second: SpectrumAccumulator) -> SpectrumAccumulator:
    if first.n_channels != second.n_channels:
        raise ArgumentError("cannot merge accumulators with different channel counts")
    return SpectrumAccumulator(
        auto_a=first.auto_a + second.auto_a,
        auto_b=first.auto_b + second.auto_b,
        cross=first.cross + second.cross,
        chunk_count=first.chunk_count + second.chunk_count,
    )


def normalized(acc: SpectrumAccumulator) -> SpectraDifference:
    if acc.chunk_count < 1:
        raise ArgumentError("accumulator holds no chunks")
    n = float(acc.chunk_count)
    return SpectraDifference(auto_a=acc.auto_a / n, auto_b=acc.auto_b / n, cross=acc.cross / n)


def xf_correlate(seg_a: WaveformSegment, seg_b: WaveformSegment, spec: ChunkSpec) -> np.ndarray:
    """Lag-domain correlation per chunk, transformed to channels and averaged over chunks.

    Same segmentation and normalization as the FX path; the lag sum runs over |tau| < N.
    """
    if len(seg_a) != len(seg_b):
        raise ArgumentError(f"segment lengths differ ({len(seg_a)} vs {len(seg_b)})")
    n = spec.fft_length
    chunks_a = _chunks(seg_a.samples, n)
    chunks_b = _chunks(seg_b.samples, n)
    lags = np.arange(-(n - 1), n)
    out = np.zeros(n // 2, dtype=np.complex128)
    k = np.arange(n // 2)
    # phases[k, j] = exp(-2*pi*i*k*tau_j/N)
    phases = np.exp(-2j * np.pi * np.outer(k, lags) / n)
    for a, b in zip(chunks_a, chunks_b, strict=True):
        # C(tau) = sum_t a[t + tau] * b[t]
        corr = np.correlate(a, b, mode="full")
        out += phases @ corr
    return out * (2.0 / n**2) / chunks_a.shape[0]


def fx_cross_spectrum(seg_a: WaveformSegment, seg_b: WaveformSegment, spec: ChunkSpec) -> np.ndarray:
    if len(seg_a) != len(seg_b):
        raise ArgumentError(f"segment lengths differ ({len(seg_a)} vs {len(seg_b)})")
    spectra_a = channelize(seg_a, spec)
    spectra_b = channelize(seg_b, spec)
    return np.mean(spectra_a * np.conj(spectra_b), axis=0)


def dicke_accumulate(
    spectra_a: np.ndarray,
    spectra_b: np.ndarray,
    on_mask: np.ndarray,
    acc: DickeAccumulator,
) -> DickeAccumulator:
    on_mask = np.asarray(on_mask, dtype=bool)
    if on_mask.shape != (spectra_a.shape[0],):
        raise ArgumentError("switch mask must hold one entry per chunk")
    return DickeAccumulator(
        on=accumulate(spectra_a[on_mask], spectra_b[on_mask], acc.on),
        off=accumulate(spectra_a[~on_mask], spectra_b[~on_mask], acc.off),
        switch_rate=acc.switch_rate,
    )


def dicke_difference(acc: DickeAccumulator) -> SpectraDifference:
    if acc.on.chunk_count < 1 or acc.off.chunk_count < 1:
        raise ArgumentError("both switch phases need at least one chunk")
    on = normalized(acc.on)
    off = normalized(acc.off)
    return SpectraDifference(
        auto_a=on.auto_a - off.auto_a,
        auto_b=on.auto_b - off.auto_b,
        cross=on.cross - off.cross,
    )


def correlation_coefficient(
    acc: SpectrumAccumulator,
    mode: Literal["power_ratio", "normalized_amplitude"] = "power_ratio",
) -> np.ndarray:
    if acc.chunk_count < 1:
        raise ArgumentError("accumulator holds no chunks")
    if np.any(acc.auto_a <= 0) or np.any(acc.auto_b <= 0):
        raise UndefinedValueError("correlation coefficient needs non-zero auto power in every channel")
    magnitude = np.abs(acc.cross)
    if mode == "power_ratio":
        return magnitude / (0.5 * (acc.auto_a + acc.auto_b))
    if mode == "normalized_amplitude":
        return magnitude / np.sqrt(acc.auto_a * acc.auto_b)
    raise ArgumentError(f"unknown correlation mode {mode!r}")


def band_average(values: np.ndarray, *, skip_dc: bool = True) -> complex | float:
    values = np.asarray(values)
    selected = values[1:] if skip_dc and values.size > 1 else values
    result = selected.mean()
    return complex(result) if np.iscomplexobj(result) else float(result)
