from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import hilbert

from hetcorr.core.constants import E_CHARGE, K_B, responsivity
from hetcorr.core.errors import ArgumentError
from hetcorr.schemas.receiver import LoMode, ReceiverSpec, SourceSpec, WaveformSegment
from hetcorr.services.rng import RngStream, wiener_block_offsets, wiener_bridge

logger = logging.getLogger(__name__)

DEFAULT_FFT_LENGTH = 512

# Stream slots under the scenario stream; per-block draws live one level further down.
_SIGNAL, _SIGNAL_B, _SHOT_A, _SHOT_B, _SHOT_COMMON = 0, 1, 2, 3, 4
_THERMAL_A, _THERMAL_B, _RESIDUAL, _PHASE, _PHASE_TOTALS, _DRIFT, _DRIFT_TOTALS = range(5, 12)


def heterodyne_pd_currents(
    p_s: float,
    p_lo: float,
    f_if: float,
    phase: float,
    spec_r: float,
    eta: float,
    duration: float,
    sample_rate: float,
    *,
    optical_frequency: float = 1.927e14,
) -> tuple[WaveformSegment, WaveformSegment]:
    if f_if >= sample_rate / 2:
        raise ArgumentError(f"f_if={f_if} Hz aliases at sample_rate={sample_rate} Hz")
    if not 0.0 <= spec_r <= 1.0:
        raise ArgumentError(f"splitter reflectance must lie in [0, 1], got {spec_r}")
    r, t = spec_r, 1.0 - spec_r
    resp = responsivity(eta, optical_frequency)
    n = int(round(duration * sample_rate))
    time = np.arange(n) / sample_rate
    beat = 2.0 * math.sqrt(r * t * p_s * p_lo)
    arg = 2.0 * math.pi * f_if * time + phase
    i1 = resp * (r * p_s + t * p_lo + beat * np.cos(arg - math.pi / 2))
    i2 = resp * (t * p_s + r * p_lo + beat * np.cos(arg + math.pi / 2))
    return (
        WaveformSegment(i1, sample_rate, "pd1 current"),
        WaveformSegment(i2, sample_rate, "pd2 current"),
    )


def signal_psd(rx: ReceiverSpec, psd: float) -> float:
    """One-sided voltage PSD of the heterodyne signal at the load, 2·Z²·R²·P~_S·P_LO."""
    resp = rx.responsivity_a_per_w
    return 2.0 * rx.z_load_ohms**2 * resp**2 * psd * rx.p_lo_watts


def shot_psd(rx: ReceiverSpec, lo_mode: LoMode = LoMode.balanced_pair) -> float:
    f_eff = 1.0 if lo_mode == LoMode.balanced_pair else rx.fano_lo
    resp = rx.responsivity_a_per_w
    return rx.z_load_ohms**2 * f_eff * 2.0 * E_CHARGE * resp * rx.p_lo_watts


def thermal_psd(rx: ReceiverSpec) -> float:
    # Open-circuit 4kTZ into a matched load; a quarter of it reaches the load.
    return K_B * rx.amp_temp_k * rx.z_load_ohms


def dark_psd(rx: ReceiverSpec) -> float:
    return 2.0 * E_CHARGE * rx.dark_current_a * rx.z_load_ohms**2


def expected_floor_psd(rx: ReceiverSpec, lo_mode: LoMode = LoMode.balanced_pair) -> float:
    return shot_psd(rx, lo_mode) + thermal_psd(rx) + dark_psd(rx)


def expected_signal_psd(rx: ReceiverSpec, psd: float) -> float:
    return signal_psd(rx, psd)


def white_sigma(psd: float, sample_rate: float) -> float:
    return math.sqrt(psd * sample_rate / 2.0)


@dataclass(frozen=True, slots=True)
class DriftSpec:
    ramp_per_s: float = 0.0
    walk_per_sqrt_s: float = 0.0

    @property
    def active(self) -> bool:
        return self.ramp_per_s != 0.0 or self.walk_per_sqrt_s != 0.0


@dataclass(frozen=True, slots=True)
class SynthPlan:
    rng: RngStream
    sample_rate: float
    n_samples: int
    block_len: int
    fft_length: int
    sigma_sig_a: float
    sigma_sig_b: float
    gamma: complex
    shot_a: float
    shot_b: float
    shot_common: bool
    thermal_a: float
    thermal_b: float
    c_lo: float
    resid_a: float
    resid_b: float
    phase_rate: float
    phase_starts: np.ndarray
    phase_totals: np.ndarray
    drift: DriftSpec
    drift_starts: np.ndarray
    drift_totals: np.ndarray
    dicke_chunks_per_phase: int | None = None

    @property
    def n_blocks(self) -> int:
        return -(-self.n_samples // self.block_len)

    def block_bounds(self, index: int) -> tuple[int, int]:
        start = index * self.block_len
        return start, min(start + self.block_len, self.n_samples)


def plan_pair(
    source: SourceSpec,
    rx_a: ReceiverSpec,
    rx_b: ReceiverSpec,
    *,
    sample_rate: float,
    n_samples: int,
    rng: RngStream,
    block_len: int,
    fft_length: int = DEFAULT_FFT_LENGTH,
    c_lo: float | None = None,
    drift: DriftSpec | None = None,
    dicke_chunks_per_phase: int | None = None,
) -> SynthPlan:
    if n_samples < fft_length:
        raise ArgumentError(f"{n_samples} samples do not fill one {fft_length}-sample chunk")
    if block_len % fft_length:
        raise ArgumentError("block length must be a whole number of chunks")
    c = 0.0 if c_lo is None else float(c_lo)
    if not 0.0 <= c <= 1.0:
        raise ArgumentError(f"injected c_lo must lie in [0, 1], got {c}")
    drift = drift or DriftSpec()

    mode = source.lo_mode
    floor_a = expected_floor_psd(rx_a, mode)
    floor_b = expected_floor_psd(rx_b, mode)
    keep = math.sqrt(1.0 - c)

    n_blocks = -(-n_samples // block_len)
    durations = np.full(n_blocks, block_len / sample_rate)
    durations[-1] = (n_samples - (n_blocks - 1) * block_len) / sample_rate
    phase_starts, phase_totals = wiener_block_offsets(
        rng.child(_PHASE_TOTALS), durations, source.phase_jitter_rad_per_sqrt_s
    )
    drift_starts, drift_totals = wiener_block_offsets(
        rng.child(_DRIFT_TOTALS), durations, drift.walk_per_sqrt_s
    )

    return SynthPlan(
        rng=rng,
        sample_rate=sample_rate,
        n_samples=n_samples,
        block_len=block_len,
        fft_length=fft_length,
        sigma_sig_a=white_sigma(signal_psd(rx_a, source.psd_w_per_hz), sample_rate),
        sigma_sig_b=white_sigma(signal_psd(rx_b, source.psd_w_per_hz), sample_rate),
        gamma=source.gamma,
        shot_a=keep * white_sigma(shot_psd(rx_a, mode), sample_rate),
        shot_b=keep * white_sigma(shot_psd(rx_b, mode), sample_rate),
        shot_common=mode == LoMode.single_pd_pair,
        thermal_a=keep * white_sigma(thermal_psd(rx_a) + dark_psd(rx_a), sample_rate),
        thermal_b=keep * white_sigma(thermal_psd(rx_b) + dark_psd(rx_b), sample_rate),
        c_lo=c,
        resid_a=white_sigma(c * floor_a, sample_rate),
        resid_b=white_sigma(c * floor_b, sample_rate),
        phase_rate=source.phase_jitter_rad_per_sqrt_s,
        phase_starts=phase_starts,
        phase_totals=phase_totals,
        drift=drift,
        drift_starts=drift_starts,
        drift_totals=drift_totals,
        dicke_chunks_per_phase=dicke_chunks_per_phase,
    )


def chunk_gate(plan: SynthPlan, index: int) -> np.ndarray | None:
    if plan.dicke_chunks_per_phase is None:
        return None
    start, stop = plan.block_bounds(index)
    first = start // plan.fft_length
    n_chunks = -(-(stop - start) // plan.fft_length)
    chunk_ids = np.arange(first, first + n_chunks)
    return (chunk_ids // plan.dicke_chunks_per_phase) % 2 == 0


def synth_block(plan: SynthPlan, index: int) -> tuple[np.ndarray, np.ndarray]:
    start, stop = plan.block_bounds(index)
    n = stop - start
    dt = 1.0 / plan.sample_rate

    def normal(slot: int) -> np.ndarray:
        return plan.rng.child(slot, index).generator().standard_normal(n)

    va = np.zeros(n)
    vb = np.zeros(n)

    if plan.sigma_sig_a > 0 or plan.sigma_sig_b > 0:
        s = normal(_SIGNAL)
        mag = abs(plan.gamma)
        if plan.gamma == 1 and plan.phase_rate == 0.0:
            s_b = s
        else:
            theta = math.atan2(plan.gamma.imag, plan.gamma.real) + plan.phase_starts[index]
            theta = theta + wiener_bridge(
                plan.rng.child(_PHASE, index), n, dt, plan.phase_rate, plan.phase_totals[index]
            )
            rotated = np.real(hilbert(s) * np.exp(-1j * theta))
            s_b = mag * rotated
            if mag < 1.0:
                s_b = s_b + math.sqrt(1.0 - mag**2) * normal(_SIGNAL_B)
        gate = chunk_gate(plan, index)
        if gate is not None:
            mask = np.repeat(gate, plan.fft_length)[:n].astype(np.float64)
            s = s * mask
            s_b = s_b * mask
        va += plan.sigma_sig_a * s
        vb += plan.sigma_sig_b * s_b

    if plan.shot_common:
        shot = normal(_SHOT_COMMON)
        va += plan.shot_a * shot
        vb += plan.shot_b * shot
    else:
        va += plan.shot_a * normal(_SHOT_A)
        vb += plan.shot_b * normal(_SHOT_B)

    va += plan.thermal_a * normal(_THERMAL_A)
    vb += plan.thermal_b * normal(_THERMAL_B)

    if plan.c_lo > 0:
        resid = normal(_RESIDUAL)
        va += plan.resid_a * resid
        vb += plan.resid_b * resid
    return va, vb


def gain_profile(plan: SynthPlan, index: int) -> np.ndarray | None:
    if not plan.drift.active:
        return None
    start, stop = plan.block_bounds(index)
    n = stop - start
    dt = 1.0 / plan.sample_rate
    time = (start + np.arange(n)) * dt
    walk = plan.drift_starts[index] + wiener_bridge(
        plan.rng.child(_DRIFT, index), n, dt, plan.drift.walk_per_sqrt_s, plan.drift_totals[index]
    )
    return 1.0 + plan.drift.ramp_per_s * time + walk


def synth_receiver_pair(
    source: SourceSpec,
    rx_a: ReceiverSpec,
    rx_b: ReceiverSpec,
    duration: float,
    sample_rate: float,
    rng: RngStream,
    *,
    fft_length: int = DEFAULT_FFT_LENGTH,
    block_chunks: int = 256,
    c_lo: float | None = None,
) -> tuple[WaveformSegment, WaveformSegment]:
    n_samples = int(round(duration * sample_rate))
    plan = plan_pair(
        source,
        rx_a,
        rx_b,
        sample_rate=sample_rate,
        n_samples=n_samples,
        rng=rng,
        block_len=block_chunks * fft_length,
        fft_length=fft_length,
        c_lo=c_lo,
    )
    parts = [synth_block(plan, i) for i in range(plan.n_blocks)]
    va = np.concatenate([p[0] for p in parts])
    vb = np.concatenate([p[1] for p in parts])
    seg_a = WaveformSegment(va, sample_rate, "rx_a")
    seg_b = WaveformSegment(vb, sample_rate, "rx_b")
    return amplify(seg_a, rx_a.amp_gain_db or 0.0), amplify(seg_b, rx_b.amp_gain_db or 0.0)


def amplify(seg: WaveformSegment, gain_db: float) -> WaveformSegment:
    factor = 10.0 ** (gain_db / 20.0)
    return WaveformSegment(seg.samples * factor, seg.sample_rate, seg.label)
