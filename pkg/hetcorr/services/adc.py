from __future__ import annotations

import logging
import math

import numpy as np
from scipy.stats import norm

from hetcorr.core.constants import H
from hetcorr.core.errors import ArgumentError
from hetcorr.schemas.receiver import AdcSpec, ReceiverSpec, WaveformSegment

logger = logging.getLogger(__name__)


def adc_quantize(
    seg: WaveformSegment, adc: AdcSpec
) -> tuple[WaveformSegment, float, float]:
    """Mid-rise uniform quantizer over [-full_scale/2, +full_scale/2] with saturation.

    Returns the reconstructed voltages, the fraction of samples that hit the rails and the
    quantization step.
    """
    codes, clipped = quantize_codes(seg.samples, adc)
    step = adc.step_volts
    quantized = (codes + 0.5) * step
    clip_fraction = clipped / max(len(seg), 1)
    return WaveformSegment(quantized, seg.sample_rate, seg.label), clip_fraction, step


def quantize_codes(samples: np.ndarray, adc: AdcSpec) -> tuple[np.ndarray, int]:
    half = adc.full_scale_volts / 2.0
    step = adc.step_volts
    lo_code = -(2 ** (adc.bits - 1))
    hi_code = 2 ** (adc.bits - 1) - 1
    clipped = int(np.count_nonzero((samples >= half) | (samples < -half)))
    codes = np.clip(np.floor(samples / step), lo_code, hi_code)
    return codes, clipped


def clip_probability(ratio: float) -> float:
    """Probability that a Rayleigh envelope exceeds `ratio` times its per-quadrature rms."""
    if ratio < 0:
        raise ArgumentError(f"ratio must be non-negative, got {ratio}")
    return math.exp(-0.5 * ratio**2)


def clip_ratio_for_probability(probability: float) -> float:
    if not 0.0 < probability <= 1.0:
        raise ArgumentError(f"probability must lie in (0, 1], got {probability}")
    return math.sqrt(-2.0 * math.log(probability))


def gaussian_clip_fraction(rms: float, full_scale: float) -> float:
    if rms <= 0:
        return 0.0
    return float(2.0 * norm.sf(full_scale / (2.0 * rms)))


def quantization_snr_ceiling_db(bits: int) -> float:
    if bits < 2:
        raise ArgumentError("the two-bit noise convention needs at least 2 bits")
    return 20.0 * math.log10(2 ** (bits - 2))


def optimum_gain(
    rx: ReceiverSpec,
    adc: AdcSpec,
    bandwidth: float,
    target_rms: float | None = None,
) -> float:
    target = adc.full_scale_volts / 2.0 if target_rms is None else target_rms
    if bandwidth <= 0 or target <= 0:
        raise ArgumentError("bandwidth and target rms must be positive")
    z_resp = rx.z_load_ohms * rx.responsivity_a_per_w
    h_nu = H * rx.optical_frequency_hz
    gain = target**2 / (z_resp**2 * h_nu * bandwidth * rx.p_lo_watts)
    return 10.0 * math.log10(gain)


def auto_gain_db(peak_psd: float, adc: AdcSpec, sample_rate: float, *, headroom: float = 8.0) -> float:
    if peak_psd <= 0:
        raise ArgumentError("peak PSD must be positive")
    rms = math.sqrt(peak_psd * sample_rate / 2.0)
    return 20.0 * math.log10(adc.full_scale_volts / headroom / rms)
