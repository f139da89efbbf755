from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import reduce
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from hetcorr import __version__
from hetcorr.core.config import settings
from hetcorr.core.constants import H, dsb_quantum_temperature, quantum_temperature
from hetcorr.core.errors import ArgumentError, ConfigValidationError, OutputError
from hetcorr.schemas.analysis import NoiseTempResult
from hetcorr.schemas.photon import DetectorSpec, PhotonCountStream, SplitterSpec
from hetcorr.schemas.receiver import AdcSpec, LoMode, ReceiverSpec, WaveformSegment
from hetcorr.schemas.scenario import Experiment, RunManifest, ScenarioConfig
from hetcorr.schemas.spectra import DickeAccumulator, SpectrumAccumulator
from hetcorr.services import analysis, oracles
from hetcorr.services.adc import (
    adc_quantize,
    auto_gain_db,
    clip_probability,
    clip_ratio_for_probability,
    gaussian_clip_fraction,
    optimum_gain,
    quantization_snr_ceiling_db,
)
from hetcorr.services.correlator import (
    accumulate,
    band_average,
    channelize_array,
    dicke_accumulate,
    dicke_difference,
    merge,
    normalized,
)
from hetcorr.services.photon import (
    balanced_receiver_counts,
    c_lo_from_splitters,
    cross_covariance,
    cross_residual_closed_form,
    fano_balanced_closed_form,
    fano_estimate,
    gen_laser_counts,
    split,
    upstream_common_fano,
)
from hetcorr.services.rng import RngStream
from hetcorr.services.storage import (
    describe_files,
    ensure_run_dir,
    write_accumulator,
    write_counts,
    write_json,
    write_manifest,
    write_table,
    write_waveform,
)
from hetcorr.services.waveform import (
    DriftSpec,
    SynthPlan,
    amplify,
    chunk_gate,
    expected_floor_psd,
    expected_signal_psd,
    gain_profile,
    plan_pair,
    synth_block,
    white_sigma,
)
from hetcorr.workers.pool import ordered_map

logger = logging.getLogger(__name__)

Summary = dict[str, float | str | None]

# Upstream split feeding the two receivers in the cross-residual check.
_UPSTREAM_R = 0.5
_CROSS_PAIRS = ((0.5, 0.5), (0.4, 0.4), (0.4, 0.6), (0.6, 0.6))
_EXAMPLE_COUNT_BINS = 4096


@dataclass(frozen=True, slots=True)
class BlockJob:
    plan: SynthPlan
    index: int
    gain_db_a: float
    gain_db_b: float
    adc: AdcSpec | None
    switch_rate: float = 0.0


@dataclass(frozen=True, slots=True)
class BlockResult:
    acc: SpectrumAccumulator
    dicke: DickeAccumulator | None
    band_auto_a: np.ndarray
    band_auto_b: np.ndarray
    band_cross: np.ndarray
    clipped_a: int
    clipped_b: int
    n_samples: int


@dataclass(frozen=True, slots=True)
class PointResult:
    acc: SpectrumAccumulator
    dicke: DickeAccumulator | None
    band_auto_a: np.ndarray
    band_auto_b: np.ndarray
    band_cross: np.ndarray
    clip_fraction_a: float
    clip_fraction_b: float
    gain_db_a: float
    gain_db_b: float
    files: tuple[Path, ...] = ()

    def output(self, kind: str, channel: int | str = "band") -> float:
        """Mean channel power: band average (DC excluded) or one channel; |.| for the cross term."""
        spectra = normalized(self.acc)
        values = {"auto_a": spectra.auto_a, "auto_b": spectra.auto_b, "cross": spectra.cross}[kind]
        value = band_average(values) if channel == "band" else values[int(channel)]
        return float(abs(value)) if kind == "cross" else float(np.real(value))

    def projected(self, kind: str) -> np.ndarray:
        """Per-chunk band series; the cross term is projected onto its mean phase."""
        if kind == "auto_a":
            return self.band_auto_a
        if kind == "auto_b":
            return self.band_auto_b
        mean = complex(self.band_cross.mean())
        unit = mean / abs(mean) if abs(mean) > 0 else 1.0
        return np.real(self.band_cross * np.conj(unit))

    def std_err(self, kind: str) -> float | None:
        series = self.projected(kind)
        if series.size < 2:
            return None
        err = float(series.std(ddof=1) / math.sqrt(series.size))
        return err if err > 0 else None


def _band(spectra: np.ndarray) -> slice:
    return slice(1, None) if spectra.shape[1] > 1 else slice(None)


def render_block(job: BlockJob) -> tuple[WaveformSegment, WaveformSegment, int, int]:
    va, vb = synth_block(job.plan, job.index)
    rate = job.plan.sample_rate
    seg_a = amplify(WaveformSegment(va, rate, "rx_a"), job.gain_db_a)
    seg_b = amplify(WaveformSegment(vb, rate, "rx_b"), job.gain_db_b)
    profile = gain_profile(job.plan, job.index)
    if profile is not None:
        seg_a = WaveformSegment(seg_a.samples * profile, rate, seg_a.label)
        seg_b = WaveformSegment(seg_b.samples * profile, rate, seg_b.label)
    if job.adc is None:
        return seg_a, seg_b, 0, 0
    q_a, frac_a, _ = adc_quantize(seg_a, job.adc)
    q_b, frac_b, _ = adc_quantize(seg_b, job.adc)
    return q_a, q_b, round(frac_a * len(seg_a)), round(frac_b * len(seg_b))


def process_block(job: BlockJob) -> BlockResult:
    seg_a, seg_b, clipped_a, clipped_b = render_block(job)
    fft_length = job.plan.fft_length
    spectra_a = channelize_array(seg_a.samples, fft_length)
    spectra_b = channelize_array(seg_b.samples, fft_length)
    n_channels = spectra_a.shape[1]
    acc = accumulate(spectra_a, spectra_b, SpectrumAccumulator.empty(n_channels))

    dicke = None
    gate = chunk_gate(job.plan, job.index)
    if gate is not None:
        dicke = dicke_accumulate(
            spectra_a,
            spectra_b,
            gate[: spectra_a.shape[0]],
            DickeAccumulator.empty(n_channels, job.switch_rate),
        )

    band = _band(spectra_a)
    return BlockResult(
        acc=acc,
        dicke=dicke,
        band_auto_a=(np.abs(spectra_a[:, band]) ** 2).mean(axis=1),
        band_auto_b=(np.abs(spectra_b[:, band]) ** 2).mean(axis=1),
        band_cross=(spectra_a[:, band] * np.conj(spectra_b[:, band])).mean(axis=1),
        clipped_a=clipped_a,
        clipped_b=clipped_b,
        n_samples=len(seg_a),
    )


def _merge_dicke(first: DickeAccumulator, second: DickeAccumulator) -> DickeAccumulator:
    return DickeAccumulator(
        on=merge(first.on, second.on),
        off=merge(first.off, second.off),
        switch_rate=first.switch_rate,
    )


def resolve_c_lo(config: ScenarioConfig) -> float | None:
    if config.injected_c_lo is not None:
        return config.injected_c_lo
    if config.c_lo_from_splitters:
        return c_lo_from_splitters(
            config.rx_a.eta, config.rx_a.splitter_r, config.rx_b.splitter_r, config.rx_a.fano_lo
        )
    return None


def _auto_gain(rx: ReceiverSpec, config: ScenarioConfig, peak_psd: float) -> float:
    if rx.amp_gain_db is not None:
        return rx.amp_gain_db
    peak = expected_floor_psd(rx, config.source.lo_mode) + expected_signal_psd(rx, peak_psd)
    return auto_gain_db(peak, config.adc, config.sample_rate_hz)


def resolve_gains(config: ScenarioConfig, peak_psd: float) -> tuple[float, float]:
    return _auto_gain(config.rx_a, config, peak_psd), _auto_gain(config.rx_b, config, peak_psd)


def build_jobs(
    config: ScenarioConfig,
    *,
    psd: float,
    gains: tuple[float, float],
    c_lo: float | None,
    rng: RngStream,
    dicke_chunks_per_phase: int | None = None,
) -> list[BlockJob]:
    fft_length = config.chunk.fft_length
    source = config.source.model_copy(update={"psd_w_per_hz": psd})
    plan = plan_pair(
        source,
        config.rx_a,
        config.rx_b,
        sample_rate=config.sample_rate_hz,
        n_samples=(config.n_samples // fft_length) * fft_length,
        rng=rng,
        block_len=config.chunk.block_chunks * fft_length,
        fft_length=fft_length,
        c_lo=c_lo,
        drift=DriftSpec(config.drift.ramp_per_s, config.drift.walk_per_sqrt_s),
        dicke_chunks_per_phase=dicke_chunks_per_phase,
    )
    adc = config.adc if config.quantize else None
    switch_rate = config.switching.rate_hz or 0.0
    return [
        BlockJob(plan, index, gains[0], gains[1], adc, switch_rate)
        for index in range(plan.n_blocks)
    ]


def _write_waveforms(run_dir: Path, job: BlockJob) -> tuple[Path, ...]:
    seg_a, seg_b, _, _ = render_block(job)
    return (
        *write_waveform(run_dir / "waveform_rx_a.f32", seg_a),
        *write_waveform(run_dir / "waveform_rx_b.f32", seg_b),
    )


def run_point(
    config: ScenarioConfig,
    *,
    psd: float,
    gains: tuple[float, float],
    c_lo: float | None,
    rng: RngStream,
    dicke_chunks_per_phase: int | None = None,
    workers: int | None = None,
    waveform_dir: Path | None = None,
) -> PointResult:
    jobs = build_jobs(
        config,
        psd=psd,
        gains=gains,
        c_lo=c_lo,
        rng=rng,
        dicke_chunks_per_phase=dicke_chunks_per_phase,
    )
    blocks = ordered_map(process_block, jobs, workers=workers)

    acc = reduce(merge, (b.acc for b in blocks))
    dicke = None
    if dicke_chunks_per_phase is not None:
        dicke = reduce(_merge_dicke, (b.dicke for b in blocks))
    total = sum(b.n_samples for b in blocks)
    clip_a = sum(b.clipped_a for b in blocks) / total
    clip_b = sum(b.clipped_b for b in blocks) / total
    for receiver, fraction in (("rx_a", clip_a), ("rx_b", clip_b)):
        if fraction > settings.clip_warn_fraction:
            logger.warning(
                "adc clipping above threshold",
                extra={"scenario": config.name, "receiver": receiver, "clip_fraction": fraction},
            )

    files: tuple[Path, ...] = ()
    if waveform_dir is not None:
        files = _write_waveforms(waveform_dir, jobs[0])

    return PointResult(
        acc=acc,
        dicke=dicke,
        band_auto_a=np.concatenate([b.band_auto_a for b in blocks]),
        band_auto_b=np.concatenate([b.band_auto_b for b in blocks]),
        band_cross=np.concatenate([b.band_cross for b in blocks]),
        clip_fraction_a=clip_a,
        clip_fraction_b=clip_b,
        gain_db_a=gains[0],
        gain_db_b=gains[1],
        files=files,
    )


def _waveform_dir(config: ScenarioConfig, run_dir: Path) -> Path | None:
    wanted = settings.write_waveforms if config.write_waveforms is None else config.write_waveforms
    return run_dir if wanted else None


def _laser_fano(rx: ReceiverSpec, lo_mode: LoMode) -> float:
    return rx.fano_lo if lo_mode == LoMode.single_pd_pair else 1.0


def _t_sys_ac(config: ScenarioConfig, rx: ReceiverSpec) -> float:
    return oracles.t_sys_ac_closed_form(
        fano=_laser_fano(rx, config.source.lo_mode),
        eta=rx.eta,
        amp_temp=rx.amp_temp_k,
        z_load=rx.z_load_ohms,
        responsivity=rx.responsivity_a_per_w,
        p_lo=rx.p_lo_watts,
        frequency=rx.optical_frequency_hz,
    )


def _power_sweep(
    config: ScenarioConfig, run_dir: Path, rng: RngStream, workers: int | None
) -> tuple[list[Path], Summary]:
    psds = list(config.sweep_psd_w_per_hz or [])
    c_lo = resolve_c_lo(config)
    gains = resolve_gains(config, psds[-1])
    channel_bw = config.channel_width_hz
    frequency = config.rx_a.optical_frequency_hz

    files: list[Path] = []
    points: list[PointResult] = []
    for i, psd in enumerate(psds):
        point = run_point(
            config,
            psd=psd,
            gains=gains,
            c_lo=c_lo,
            rng=rng.child(i),
            workers=workers,
            waveform_dir=_waveform_dir(config, run_dir) if i == 0 else None,
        )
        points.append(point)
        files.extend(point.files)
        files.append(write_accumulator(run_dir / f"spectra_{i:02d}.txt", point.acc, channel_bw))
        logger.info(
            "sweep point done",
            extra={
                "scenario": config.name,
                "point": i,
                "psd_w_per_hz": psd,
                "chunks": point.acc.chunk_count,
            },
        )

    fits: dict[str, NoiseTempResult] = {}
    for kind, label in (("auto_a", "AC rx_a"), ("auto_b", "AC rx_b"), ("cross", "CC")):
        errs = [p.std_err(kind) for p in points] if config.fit_channel == "band" else None
        curve = analysis.curve_from_arrays(
            psds,
            [p.output(kind, config.fit_channel) for p in points],
            std_errs=errs,
            channel=config.fit_channel,
            label=label,
        )
        fits[kind] = analysis.fit_response(
            curve, channel_bw, frequency=frequency, weighted=config.fit_weighted
        )

    rows = [
        {
            "source_psd_w_per_hz": psd,
            "t_source_k": analysis.source_temperature(psd),
            "p_ac_a": p.output("auto_a", config.fit_channel),
            "p_ac_b": p.output("auto_b", config.fit_channel),
            "p_cc": p.output("cross", config.fit_channel),
            "se_ac_a": p.std_err("auto_a"),
            "se_ac_b": p.std_err("auto_b"),
            "se_cc": p.std_err("cross"),
            "clip_a": p.clip_fraction_a,
            "clip_b": p.clip_fraction_b,
        }
        for psd, p in zip(psds, points, strict=True)
    ]
    files.append(
        write_table(run_dir / "response.csv", "response", list(rows[0].keys()), rows)
    )
    files.append(
        write_table(
            run_dir / "receivers.csv",
            "receivers",
            analysis.RECEIVER_COLUMNS,
            analysis.receiver_table_rows(list(fits.values())),
        )
    )

    t_ac = 0.5 * (fits["auto_a"].t_rec + fits["auto_b"].t_rec)
    t_cc = fits["cross"].t_rec
    if psds[0] == 0.0:
        first = points[0]
        c_lo_measured = first.output("cross") / (
            0.5 * (first.output("auto_a") + first.output("auto_b"))
        )
    else:
        c_lo_measured = fits["cross"].intercept / fits["auto_a"].intercept
    summary: Summary = {
        "t_rec_ac_a_k": fits["auto_a"].t_rec,
        "t_rec_ac_b_k": fits["auto_b"].t_rec,
        "t_rec_cc_k": t_cc,
        "improvement": t_ac / t_cc if t_cc > 0 else None,
        "slope_ratio_cc_ac": fits["cross"].slope / fits["auto_a"].slope,
        "fit_residual_max": max(f.fit_residual for f in fits.values()),
        "c_lo_configured": c_lo,
        "c_lo_measured": c_lo_measured,
        "t_sys_ac_closed_form_k": _t_sys_ac(config, config.rx_a),
        "gain_db_a": gains[0],
        "gain_db_b": gains[1],
    }
    return files, summary


def _gain_study(
    config: ScenarioConfig, run_dir: Path, rng: RngStream, workers: int | None
) -> tuple[list[Path], Summary]:
    c_lo = resolve_c_lo(config)
    psd = config.source.psd_w_per_hz
    rows = []
    summary: Summary = {"c_lo_configured": c_lo}
    for i, gain in enumerate(config.gain_study_db or []):
        # Same noise realization at every gain, so rows differ only through the amplifier and ADC.
        point = run_point(
            config,
            psd=psd,
            gains=(gain, gain),
            c_lo=c_lo,
            rng=rng.child(0),
            workers=workers,
            waveform_dir=_waveform_dir(config, run_dir) if i == 0 else None,
        )
        row = analysis.suppression_table_row(
            gain_db=gain,
            p_ac=0.5 * (point.output("auto_a") + point.output("auto_b")),
            p_cc=point.output("cross"),
            clip_fraction=max(point.clip_fraction_a, point.clip_fraction_b),
        )
        rows.append(row)
        summary[f"c_lo_at_{gain:g}_db"] = row["c_lo"]
        logger.info(
            "gain setting done",
            extra={"scenario": config.name, "gain_db": gain, "c_lo": row["c_lo"]},
        )
    path = write_table(run_dir / "gain_study.csv", "gain_study", analysis.GAIN_STUDY_COLUMNS, rows)
    return [path], summary


def _allan(
    config: ScenarioConfig, run_dir: Path, rng: RngStream, workers: int | None
) -> tuple[list[Path], Summary]:
    psd = config.source.psd_w_per_hz
    point = run_point(
        config,
        psd=psd,
        gains=resolve_gains(config, psd),
        c_lo=resolve_c_lo(config),
        rng=rng.child(0),
        workers=workers,
        waveform_dir=_waveform_dir(config, run_dir),
    )
    k = config.allan_readout_chunks
    n_readouts = point.band_auto_a.size // k
    if n_readouts < analysis.MIN_ALLAN_READOUTS:
        raise ArgumentError(
            f"{n_readouts} readouts of {k} chunks; need at least {analysis.MIN_ALLAN_READOUTS}"
        )
    ac = point.projected("auto_a")[: n_readouts * k].reshape(n_readouts, k).mean(axis=1)
    cc = point.projected("cross")[: n_readouts * k].reshape(n_readouts, k).mean(axis=1)
    interval = k * config.chunk.fft_length / config.sample_rate_hz

    res_ac = analysis.allan_variance(ac, interval, overlapping=config.allan_overlapping)
    res_cc = analysis.allan_variance(cc, interval, overlapping=config.allan_overlapping)

    files = list(point.files)
    files.append(
        write_table(
            run_dir / "readouts.csv",
            "readouts",
            ("t_s", "p_ac", "p_cc"),
            (
                {"t_s": (i + 0.5) * interval, "p_ac": float(a), "p_cc": float(c)}
                for i, (a, c) in enumerate(zip(ac, cc, strict=True))
            ),
        )
    )
    files.append(
        write_table(
            run_dir / "allan.csv",
            "allan",
            ("tau_s", "avar_ac", "avar_cc", "count"),
            (
                {"tau_s": t, "avar_ac": va, "avar_cc": vc, "count": n}
                for t, va, vc, n in zip(
                    res_ac.taus, res_ac.variances, res_cc.variances, res_ac.counts, strict=False
                )
            ),
        )
    )

    short = res_ac.taus[min(3, len(res_ac.taus) - 1)]
    n_band = max(config.chunk.n_channels - 1, 1)
    t_sys = _t_sys_ac(config, config.rx_a)
    rel_measured = float(np.std(np.diff(ac), ddof=1) / math.sqrt(2.0) / ac.mean())
    sigma_k = oracles.radiometer_sigma(t_sys, n_band * config.channel_width_hz, interval)
    summary: Summary = {
        "readout_interval_s": interval,
        "readouts": n_readouts,
        "slope_ac": analysis.allan_slope(res_ac),
        "slope_cc": analysis.allan_slope(res_cc),
        "slope_ac_short": analysis.allan_slope(res_ac, tau_max=short),
        "slope_cc_short": analysis.allan_slope(res_cc, tau_max=short),
        "minimum_tau_ac_s": res_ac.minimum_tau,
        "minimum_tau_cc_s": res_cc.minimum_tau,
        "avar_ratio_cc_ac_long": res_cc.variances[-1] / res_ac.variances[-1],
        "floor_ratio_squared": float((cc.mean() / ac.mean()) ** 2),
        "radiometer_rel_measured": rel_measured,
        "radiometer_rel_predicted": sigma_k / t_sys,
        "radiometer_sigma_k": sigma_k,
    }
    return files, summary


def gain_opt_rows(config: ScenarioConfig) -> list[dict[str, object]]:
    bandwidth = config.sample_rate_hz / 2.0
    psd = config.source.psd_w_per_hz
    rows: list[dict[str, object]] = []
    for label, rx in (("rx_a", config.rx_a), ("rx_b", config.rx_b)):
        gain = optimum_gain(rx, config.adc, bandwidth)
        load_psd = expected_floor_psd(rx, config.source.lo_mode) + expected_signal_psd(rx, psd)
        rms = white_sigma(load_psd, config.sample_rate_hz) * 10.0 ** (gain / 20.0)
        rows.append(
            {
                "receiver": label,
                "optimum_gain_db": gain,
                "auto_gain_db": auto_gain_db(load_psd, config.adc, config.sample_rate_hz),
                "rms_at_optimum_v": rms,
                "predicted_clip_fraction": gaussian_clip_fraction(rms, config.adc.full_scale_volts),
                "quantization_ceiling_db": quantization_snr_ceiling_db(config.adc.bits),
            }
        )
    return rows


def _gain_opt(
    config: ScenarioConfig, run_dir: Path, rng: RngStream, workers: int | None
) -> tuple[list[Path], Summary]:
    rows = gain_opt_rows(config)
    point = run_point(
        config,
        psd=config.source.psd_w_per_hz,
        gains=(float(rows[0]["optimum_gain_db"]), float(rows[1]["optimum_gain_db"])),
        c_lo=resolve_c_lo(config),
        rng=rng.child(0),
        workers=workers,
        waveform_dir=_waveform_dir(config, run_dir),
    )
    rows[0]["measured_clip_fraction"] = point.clip_fraction_a
    rows[1]["measured_clip_fraction"] = point.clip_fraction_b
    columns = [*rows[0].keys()]
    path = write_table(run_dir / "gain_opt.csv", "gain_opt", columns, rows)
    summary: Summary = {
        f"{row['receiver']}_{key}": float(row[key])
        for row in rows
        for key in ("optimum_gain_db", "predicted_clip_fraction", "measured_clip_fraction")
    }
    return [*point.files, path], summary


def oracle_rows(config: ScenarioConfig) -> list[dict[str, object]]:
    rx = config.rx_a
    frequency = rx.optical_frequency_hz
    h_nu = H * frequency
    n_s = config.source.psd_w_per_hz / h_nu
    dnu_s = config.source.band_hz or config.sample_rate_hz / 2.0
    df = config.channel_width_hz
    n_lo = oracles.lo_occupation(rx.p_lo_watts, frequency, config.oracle.lo_linewidth_hz)
    c_lo = resolve_c_lo(config)
    if c_lo is None:
        c_lo = 1.0 if config.source.lo_mode == LoMode.single_pd_pair else 0.0
    gamma_mag = abs(config.source.gamma)
    # Excess laser noise cancels in a balanced mixer; single diodes see all of it.
    fano = _laser_fano(rx, config.source.lo_mode)

    report = oracles.snr_oracles(
        n_s=n_s,
        n_lo=n_lo,
        dnu_s=dnu_s,
        dnu_lo=config.oracle.lo_linewidth_hz,
        df=df,
        gamma_mag=gamma_mag,
        c_lo=c_lo,
        fano=fano,
        eta=rx.eta,
        frequency=frequency,
        amp_temp=rx.amp_temp_k,
        z_load=rx.z_load_ohms,
        p_lo=rx.p_lo_watts,
        dark_current=rx.dark_current_a,
        signal_variance=config.oracle.signal_variance,
    )
    t_sys_ac = _t_sys_ac(config, rx)
    values: dict[str, object] = {
        "t_q_k": quantum_temperature(frequency),
        "t_q_dsb_k": dsb_quantum_temperature(frequency),
        "n_s": n_s,
        "n_lo": n_lo,
        "c_lo": c_lo,
        "source_brightness_temperature_k": oracles.brightness_temperature(n_s, frequency),
        "source_rayleigh_jeans_temperature_k": oracles.rayleigh_jeans_temperature(n_s, frequency),
        "source_power_w": oracles.source_power(n_s, frequency, dnu_s),
        "t_sys_ac_k": t_sys_ac,
        "t_sys_ac_laser_limited_k": rx.fano_lo / rx.eta * quantum_temperature(frequency),
        "t_sys_cc_k": (
            oracles.t_sys_cc_closed_form(c_lo, gamma_mag, fano, rx.eta, frequency)
            if gamma_mag > 0
            else None
        ),
        "radiometer_sigma_k": oracles.radiometer_sigma(t_sys_ac, df, config.duration_s),
        "clip_probability_at_1p5": clip_probability(1.5),
        "clip_ratio_at_1pct": clip_ratio_for_probability(0.01),
        "quantization_ceiling_db": quantization_snr_ceiling_db(config.adc.bits),
        "optimum_gain_db": optimum_gain(rx, config.adc, config.sample_rate_hz / 2.0),
        "lo_shot_noise_rin_per_hz": oracles.shot_noise_rin(rx.p_lo_watts, frequency),
        **report.model_dump(exclude={"signal_variance"}),
        "signal_variance": report.signal_variance,
    }
    return [{"quantity": key, "value": value} for key, value in values.items()]


def _oracles(
    config: ScenarioConfig, run_dir: Path, rng: RngStream, workers: int | None
) -> tuple[list[Path], Summary]:
    rows = oracle_rows(config)
    path = write_table(run_dir / "oracles.csv", "oracles", ("quantity", "value"), rows)
    summary: Summary = {str(row["quantity"]): row["value"] for row in rows}
    return [path], summary


def _mean_gain_squared(config: ScenarioConfig) -> float:
    """Expected mean of (1 + ramp·t + walk)² over the run."""
    duration = config.duration_s
    ramp = config.drift.ramp_per_s
    walk = config.drift.walk_per_sqrt_s
    return 1.0 + ramp * duration + (ramp * duration) ** 2 / 3.0 + walk**2 * duration / 2.0


def _dicke(
    config: ScenarioConfig, run_dir: Path, rng: RngStream, workers: int | None
) -> tuple[list[Path], Summary]:
    fft_length = config.chunk.fft_length
    rate = float(config.switching.rate_hz or 0.0)
    fast = max(1, round(config.sample_rate_hz / (2.0 * rate * fft_length)))
    slow = max(1, (config.n_samples // fft_length) // 2)
    psd = config.source.psd_w_per_hz
    gains = resolve_gains(config, psd)
    c_lo = resolve_c_lo(config)
    channel_bw = config.channel_width_hz
    expected = (
        expected_signal_psd(config.rx_a, psd)
        * 10.0 ** (gains[0] / 10.0)
        * channel_bw
        * _mean_gain_squared(config)
    )

    files: list[Path] = []
    rows = []
    summary: Summary = {"expected_signal": expected, "fast_chunks_per_phase": fast}
    for label, chunks_per_phase in (("fast", fast), ("slow", slow)):
        # Paired runs: identical noise, only the switching period differs.
        point = run_point(
            config,
            psd=psd,
            gains=gains,
            c_lo=c_lo,
            rng=rng.child(0),
            dicke_chunks_per_phase=chunks_per_phase,
            workers=workers,
            waveform_dir=_waveform_dir(config, run_dir) if label == "fast" else None,
        )
        files.extend(point.files)
        diff = dicke_difference(point.dicke)
        d_a = float(band_average(diff.auto_a))
        rel_error = d_a / expected - 1.0 if expected > 0 else None
        rows.append(
            {
                "switching": label,
                "chunks_per_phase": chunks_per_phase,
                "diff_ac_a": d_a,
                "diff_ac_b": float(band_average(diff.auto_b)),
                "diff_cc": abs(band_average(diff.cross)),
                "expected_signal": expected,
                "rel_error_ac_a": rel_error,
            }
        )
        summary[f"rel_error_{label}"] = rel_error
        if label == "fast":
            files.append(
                write_table(
                    run_dir / "dicke_spectrum.csv",
                    "dicke_spectrum",
                    ("channel", "frequency_hz", "d_auto_a", "d_auto_b", "d_cross_re", "d_cross_im"),
                    (
                        {
                            "channel": k,
                            "frequency_hz": k * channel_bw,
                            "d_auto_a": float(diff.auto_a[k]),
                            "d_auto_b": float(diff.auto_b[k]),
                            "d_cross_re": float(diff.cross[k].real),
                            "d_cross_im": float(diff.cross[k].imag),
                        }
                        for k in range(diff.auto_a.size)
                    ),
                )
            )
    files.append(write_table(run_dir / "dicke.csv", "dicke", list(rows[0].keys()), rows))
    return files, summary


def _fano_grid(
    config: ScenarioConfig, run_dir: Path, rng: RngStream, workers: int | None
) -> tuple[list[Path], Summary]:
    spec = config.fano_grid
    files: list[Path] = []
    grid_rows = []
    index = 0
    for eta in spec.etas:
        for r in spec.reflectances:
            for fano in spec.fanos:
                point_rng = rng.child(0, index)
                laser = gen_laser_counts(spec.mean_per_bin, fano, spec.n_bins, point_rng.child(0))
                _, _, diff = balanced_receiver_counts(
                    laser, SplitterSpec(r=r), DetectorSpec(eta=eta), point_rng.child(1)
                )
                est = fano_estimate(diff, mean_ref=spec.mean_per_bin)
                closed = fano_balanced_closed_form(eta, r, fano)
                grid_rows.append(
                    {
                        "eta": eta,
                        "r": r,
                        "fano_lo": fano,
                        "fano_mc": est.fano,
                        "std_err": est.std_err,
                        "fano_closed": closed,
                        "z": (est.fano - closed) / est.std_err,
                    }
                )
                if index == 0:
                    example = PhotonCountStream(
                        diff.counts[:_EXAMPLE_COUNT_BINS],
                        diff.bin_duration,
                        diff.label,
                        non_negative=False,
                    )
                    files.append(write_counts(run_dir / "counts_balanced.txt", example))
                index += 1

    eta = spec.etas[-1]
    detector = DetectorSpec(eta=eta)
    branch_mean = math.sqrt(_UPSTREAM_R * (1.0 - _UPSTREAM_R)) * spec.mean_per_bin
    cross_rows = []
    index = 0
    for fano in spec.fanos:
        for r_a, r_b in _CROSS_PAIRS:
            pair_rng = rng.child(1, index)
            laser = gen_laser_counts(spec.mean_per_bin, fano, spec.n_bins, pair_rng.child(0))
            branch_a, branch_b = split(laser, SplitterSpec(r=_UPSTREAM_R), pair_rng.child(1))
            _, _, d_a = balanced_receiver_counts(
                branch_a, SplitterSpec(r=r_a), detector, pair_rng.child(2)
            )
            _, _, d_b = balanced_receiver_counts(
                branch_b, SplitterSpec(r=r_b), detector, pair_rng.child(3)
            )
            cov, std_err = cross_covariance(d_a, d_b)
            closed = (
                cross_residual_closed_form(eta, r_a, r_b, upstream_common_fano(_UPSTREAM_R, fano))
                * branch_mean
            )
            cross_rows.append(
                {
                    "eta": eta,
                    "r_a": r_a,
                    "r_b": r_b,
                    "fano_lo": fano,
                    "cov_mc": cov,
                    "std_err": std_err,
                    "cov_closed": closed,
                    "z": (cov - closed) / std_err if std_err > 0 else None,
                }
            )
            index += 1

    files.append(
        write_table(run_dir / "fano_grid.csv", "fano_grid", list(grid_rows[0].keys()), grid_rows)
    )
    files.append(
        write_table(
            run_dir / "cross_residual.csv", "cross_residual", list(cross_rows[0].keys()), cross_rows
        )
    )
    summary: Summary = {
        "max_abs_z_fano": max(abs(row["z"]) for row in grid_rows),
        "max_abs_z_cross": max(abs(row["z"]) for row in cross_rows if row["z"] is not None),
    }
    return files, summary


_EXPERIMENTS: dict[
    Experiment,
    Callable[[ScenarioConfig, Path, RngStream, int | None], tuple[list[Path], Summary]],
] = {
    Experiment.power_sweep: _power_sweep,
    Experiment.gain_study: _gain_study,
    Experiment.allan: _allan,
    Experiment.gain_opt: _gain_opt,
    Experiment.oracles: _oracles,
    Experiment.dicke: _dicke,
    Experiment.fano_grid: _fano_grid,
}


def load_config(path: Path) -> ScenarioConfig:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise OutputError(f"cannot read config {path}: {exc}") from exc
    try:
        return ScenarioConfig.model_validate_json(raw)
    except ValidationError as exc:
        raise ConfigValidationError.from_pydantic(exc, source=str(path)) from exc


def default_run_dir(config: ScenarioConfig) -> Path:
    return settings.output_dir / f"{config.name}-seed{config.seed}"


def run_scenario(
    config: ScenarioConfig, *, out_dir: Path | None = None, workers: int | None = None
) -> RunManifest:
    run_dir = ensure_run_dir(out_dir or default_run_dir(config))
    started_at = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    logger.info(
        "scenario start",
        extra={
            "scenario": config.name,
            "experiment": config.experiment.value,
            "seed": config.seed,
            "run_dir": str(run_dir),
        },
    )

    config_path = write_json(run_dir / "config.json", config)
    files, summary = _EXPERIMENTS[config.experiment](config, run_dir, RngStream(config.seed), workers)

    manifest = RunManifest(
        config=config,
        version=__version__,
        started_at=started_at,
        wall_clock_s=time.perf_counter() - t0,
        poisson_gauss_threshold=settings.poisson_gauss_threshold,
        binomial_gauss_threshold=settings.binomial_gauss_threshold,
        files=describe_files(run_dir, [config_path, *files]),
        summary=summary,
    )
    write_manifest(run_dir, manifest)
    logger.info(
        "scenario done",
        extra={
            "scenario": config.name,
            "wall_clock_s": round(manifest.wall_clock_s, 3),
            "files": len(manifest.files),
        },
    )
    return manifest
