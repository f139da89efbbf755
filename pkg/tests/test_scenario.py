from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from hetcorr.core.config import settings
from hetcorr.core.constants import K_B
from hetcorr.core.errors import ArgumentError, ConfigValidationError, OutputError
from hetcorr.schemas.receiver import LoMode, ReceiverSpec, SourceSpec
from hetcorr.schemas.scenario import (
    DriftConfig,
    Experiment,
    FanoGridSpec,
    ScenarioConfig,
    SwitchingSpec,
)
from hetcorr.schemas.spectra import ChunkSpec
from hetcorr.services import oracles
from hetcorr.services.presets import MEASURED_C_LO, get_preset, list_presets
from hetcorr.services.scenario import (
    default_run_dir,
    load_config,
    oracle_rows,
    resolve_c_lo,
    run_scenario,
)
from hetcorr.services.storage import read_table, verify_manifest

FS = 16e6
CHUNK = ChunkSpec(fft_length=64, block_chunks=64)


def _seconds(chunks: int) -> float:
    return chunks * CHUNK.fft_length / FS


def _small(**overrides: object) -> ScenarioConfig:
    base: dict[str, object] = {
        "name": "small",
        "chunk": CHUNK,
        "sample_rate_hz": FS,
        "duration_s": _seconds(1024),
        "sweep_psd_w_per_hz": [0.0, 1e4 * K_B, 2e4 * K_B],
    }
    base.update(overrides)
    return ScenarioConfig.model_validate(base)


def test_power_sweep_recovers_receiver_temperatures(tmp_path: Path) -> None:
    config = _small(duration_s=_seconds(8192), injected_c_lo=MEASURED_C_LO)
    manifest = run_scenario(config, out_dir=tmp_path, workers=1)
    summary = manifest.summary

    assert summary["t_rec_ac_a_k"] == pytest.approx(summary["t_sys_ac_closed_form_k"], rel=0.03)
    assert summary["t_rec_ac_b_k"] == pytest.approx(summary["t_sys_ac_closed_form_k"], rel=0.03)
    assert summary["c_lo_measured"] == pytest.approx(MEASURED_C_LO, abs=0.012)
    assert summary["improvement"] == pytest.approx(1 / MEASURED_C_LO, abs=3.0)
    t_ac = 0.5 * (summary["t_rec_ac_a_k"] + summary["t_rec_ac_b_k"])
    assert summary["t_rec_cc_k"] / t_ac == pytest.approx(MEASURED_C_LO, rel=0.15)
    assert summary["slope_ratio_cc_ac"] == pytest.approx(1.0, abs=0.05)

    names = {f.path for f in manifest.files}
    assert {"config.json", "response.csv", "receivers.csv", "spectra_00.txt"} <= names
    assert (tmp_path / "manifest.json").exists()
    assert verify_manifest(tmp_path, manifest) == []
    _, receivers = read_table(tmp_path / "receivers.csv")
    assert [row["receiver"] for row in receivers] == ["AC rx_a", "AC rx_b", "CC"]


def test_results_do_not_depend_on_worker_count(tmp_path: Path) -> None:
    config = _small(injected_c_lo=0.2)
    serial = run_scenario(config, out_dir=tmp_path / "serial", workers=1)
    pooled = run_scenario(config, out_dir=tmp_path / "pooled", workers=2)
    assert serial.summary == pooled.summary
    assert [(f.path, f.sha256) for f in serial.files] == [(f.path, f.sha256) for f in pooled.files]


def test_different_seeds_give_different_spectra(tmp_path: Path) -> None:
    first = run_scenario(_small(seed=1), out_dir=tmp_path / "a")
    second = run_scenario(_small(seed=2), out_dir=tmp_path / "b")
    digests = {f.path: f.sha256 for f in first.files}
    assert any(digests[f.path] != f.sha256 for f in second.files if f.path.startswith("spectra"))


def test_waveforms_written_on_request(tmp_path: Path) -> None:
    manifest = run_scenario(_small(write_waveforms=True), out_dir=tmp_path)
    names = {f.path for f in manifest.files}
    assert {"waveform_rx_a.f32", "waveform_rx_a.f32.hdr", "waveform_rx_b.f32"} <= names


def test_gain_study_keeps_c_lo_across_gains(tmp_path: Path) -> None:
    config = _small(
        experiment=Experiment.gain_study,
        duration_s=_seconds(2048),
        injected_c_lo=MEASURED_C_LO,
        gain_study_db=[80.0, 90.0],
    )
    manifest = run_scenario(config, out_dir=tmp_path)
    assert manifest.summary["c_lo_at_80_db"] == pytest.approx(MEASURED_C_LO, abs=0.02)
    assert manifest.summary["c_lo_at_90_db"] == pytest.approx(MEASURED_C_LO, abs=0.02)
    name, rows = read_table(tmp_path / "gain_study.csv")
    assert name == "gain_study"
    assert [float(r["gain_db"]) for r in rows] == [80.0, 90.0]
    # Ten dB more gain lifts both floors by ten dB.
    assert float(rows[1]["p_ac_db"]) - float(rows[0]["p_ac_db"]) == pytest.approx(10.0, abs=0.1)


def test_allan_readouts_follow_radiometer_equation(tmp_path: Path) -> None:
    config = _small(experiment=Experiment.allan, allan_readout_chunks=8)
    manifest = run_scenario(config, out_dir=tmp_path)
    summary = manifest.summary
    assert summary["readouts"] == 128
    assert summary["radiometer_rel_measured"] == pytest.approx(
        summary["radiometer_rel_predicted"], rel=0.3
    )
    assert summary["slope_ac_short"] < 0
    _, allan_rows = read_table(tmp_path / "allan.csv")
    assert float(allan_rows[0]["tau_s"]) == pytest.approx(summary["readout_interval_s"])


def test_allan_needs_enough_readouts(tmp_path: Path) -> None:
    config = _small(experiment=Experiment.allan, allan_readout_chunks=128)
    with pytest.raises(ArgumentError, match="readouts"):
        run_scenario(config, out_dir=tmp_path)


def test_allan_white_regime_falls_as_one_over_tau(tmp_path: Path) -> None:
    config = _small(
        experiment=Experiment.allan,
        duration_s=_seconds(32768),
        allan_readout_chunks=4,
        allan_overlapping=True,
    )
    manifest = run_scenario(config, out_dir=tmp_path)
    interval = manifest.summary["readout_interval_s"]
    _, rows = read_table(tmp_path / "allan.csv")
    taus = np.array([float(row["tau_s"]) for row in rows])
    avar = np.array([float(row["avar_ac"]) for row in rows])
    white = taus <= 32 * interval * (1 + 1e-9)
    assert white.sum() >= 5
    slope = np.polyfit(np.log10(taus[white]), np.log10(avar[white]), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.1)


def test_allan_cc_to_ac_ratio_tracks_floor_ratio_under_gain_walk(tmp_path: Path) -> None:
    config = _small(
        experiment=Experiment.allan,
        duration_s=_seconds(16384),
        allan_readout_chunks=16,
        injected_c_lo=0.3,
        drift=DriftConfig(walk_per_sqrt_s=0.5),
    )
    summary = run_scenario(config, out_dir=tmp_path).summary
    assert summary["floor_ratio_squared"] == pytest.approx(0.09, rel=0.1)
    # A common gain walk scales both readouts, so their long-tau variances differ by c_LO².
    ratio = summary["avar_ratio_cc_ac_long"] / summary["floor_ratio_squared"]
    assert 1 / 3 < ratio < 3


def test_dicke_fast_switching_cancels_gain_ramp(tmp_path: Path) -> None:
    config = _small(
        experiment=Experiment.dicke,
        duration_s=_seconds(2048),
        source=SourceSpec(psd_w_per_hz=2e4 * K_B),
        switching=SwitchingSpec(mode="dicke", rate_hz=1000.0),
        drift=DriftConfig(ramp_per_s=20.0),
    )
    manifest = run_scenario(config, out_dir=tmp_path)
    summary = manifest.summary
    assert summary["fast_chunks_per_phase"] == 125
    assert abs(summary["rel_error_fast"]) < 0.08
    assert summary["rel_error_slow"] < -0.1
    _, spectrum = read_table(tmp_path / "dicke_spectrum.csv")
    assert len(spectrum) == CHUNK.n_channels


def test_gain_opt_predicts_measured_clipping(tmp_path: Path) -> None:
    manifest = run_scenario(_small(experiment=Experiment.gain_opt), out_dir=tmp_path)
    summary = manifest.summary
    for rx in ("rx_a", "rx_b"):
        assert summary[f"{rx}_measured_clip_fraction"] == pytest.approx(
            summary[f"{rx}_predicted_clip_fraction"], abs=0.01
        )
        assert summary[f"{rx}_predicted_clip_fraction"] > 0.3


def test_oracle_experiment_reports_closed_forms(tmp_path: Path) -> None:
    config = _small(
        experiment=Experiment.oracles,
        source=SourceSpec(psd_w_per_hz=1e4 * K_B),
        injected_c_lo=MEASURED_C_LO,
    )
    manifest = run_scenario(config, out_dir=tmp_path)
    assert manifest.summary["t_q_k"] == pytest.approx(9248, rel=0.001)
    assert manifest.summary["c_lo"] == MEASURED_C_LO
    assert manifest.summary["clip_probability_at_1p5"] == pytest.approx(0.3247, abs=1e-4)
    _, rows = read_table(tmp_path / "oracles.csv")
    assert {"t_sys_ac_k", "snr_het_pre", "nespd"} <= {row["quantity"] for row in rows}


def _oracle_values(config: ScenarioConfig) -> dict[str, object]:
    return {row["quantity"]: row["value"] for row in oracle_rows(config)}


def test_oracle_system_temperature_uses_effective_laser_noise(tmp_path: Path) -> None:
    rx = ReceiverSpec(fano_lo=10.0)
    args = (rx.eta, rx.amp_temp_k, rx.z_load_ohms, rx.responsivity_a_per_w, rx.p_lo_watts)
    balanced = _oracle_values(_small(experiment=Experiment.oracles, rx_a=rx, rx_b=rx))
    # Balanced detection cancels the excess noise of the LO.
    expected = oracles.t_sys_ac_closed_form(1.0, *args, rx.optical_frequency_hz)
    assert balanced["t_sys_ac_k"] == pytest.approx(expected)
    assert balanced["t_sys_ac_k"] == pytest.approx(15718, rel=0.005)
    sweep = run_scenario(_small(rx_a=rx, rx_b=rx), out_dir=tmp_path).summary
    assert balanced["t_sys_ac_k"] == pytest.approx(sweep["t_sys_ac_closed_form_k"])

    single = _oracle_values(
        _small(
            experiment=Experiment.oracles,
            rx_a=rx,
            rx_b=rx,
            source=SourceSpec(lo_mode=LoMode.single_pd_pair),
        )
    )
    noisy = oracles.t_sys_ac_closed_form(10.0, *args, rx.optical_frequency_hz)
    assert single["t_sys_ac_k"] == pytest.approx(noisy)
    assert single["t_sys_ac_k"] > 5 * balanced["t_sys_ac_k"]


def test_single_pd_control_shows_no_cross_correlation_gain(tmp_path: Path) -> None:
    preset = get_preset("single-pd-control")
    config = ScenarioConfig.model_validate(
        {**preset.model_dump(), "chunk": CHUNK, "duration_s": _seconds(2048)}
    )
    summary = run_scenario(config, out_dir=tmp_path).summary
    assert summary["c_lo_measured"] == pytest.approx(1.0, abs=0.05)
    assert summary["t_rec_cc_k"] == pytest.approx(summary["t_rec_ac_a_k"], rel=0.1)
    assert summary["improvement"] == pytest.approx(1.0, abs=0.1)


def test_fano_grid_experiment_matches_closed_forms(tmp_path: Path) -> None:
    config = _small(
        experiment=Experiment.fano_grid,
        fano_grid=FanoGridSpec(n_bins=20_000, etas=[1.0], reflectances=[0.4, 0.5], fanos=[10.0]),
    )
    manifest = run_scenario(config, out_dir=tmp_path)
    assert manifest.summary["max_abs_z_fano"] < 5
    assert manifest.summary["max_abs_z_cross"] < 5
    _, grid = read_table(tmp_path / "fano_grid.csv")
    assert len(grid) == 2
    assert (tmp_path / "counts_balanced.txt").exists()


def test_c_lo_from_splitters_feeds_synthesis() -> None:
    rx = ReceiverSpec(splitter_r=0.4, fano_lo=10.0)
    config = _small(rx_a=rx, rx_b=rx, c_lo_from_splitters=True)
    assert resolve_c_lo(config) == pytest.approx(0.236, abs=0.001)
    assert resolve_c_lo(_small()) is None


@pytest.mark.parametrize(
    "overrides",
    [
        {"sweep_psd_w_per_hz": None},
        {"sweep_psd_w_per_hz": [0.0]},
        {"sweep_psd_w_per_hz": [1.0, 0.5]},
        {"sweep_psd_w_per_hz": [-1.0, 0.5]},
        {"duration_s": 1e-6},
        {"injected_c_lo": 0.1, "c_lo_from_splitters": True},
        {"injected_c_lo": 1.5},
        {"fit_channel": 32},
        {"fit_channel": 3, "fit_weighted": True},
        {"experiment": Experiment.gain_study},
        {"experiment": Experiment.dicke},
        {"seed": 2**64},
        {"unknown": 1},
    ],
)
def test_invalid_configs_rejected(overrides: dict[str, object]) -> None:
    with pytest.raises(ValidationError):
        _small(**overrides)


def test_dicke_switching_needs_rate() -> None:
    with pytest.raises(ValidationError):
        SwitchingSpec(mode="dicke")


def test_load_config_wraps_errors(tmp_path: Path) -> None:
    path = tmp_path / "config.json"
    path.write_text('{"experiment": "power_sweep", "sweep_psd_w_per_hz": [1.0, 0.5]}')
    with pytest.raises(ConfigValidationError) as info:
        load_config(path)
    assert "sweep_psd_w_per_hz" in info.value.fields
    with pytest.raises(OutputError):
        load_config(tmp_path / "missing.json")


def test_load_config_reads_dumped_config(tmp_path: Path) -> None:
    config = _small(seed=9)
    path = tmp_path / "config.json"
    path.write_bytes(config.model_dump_json().encode())
    assert load_config(path) == config


def test_default_run_dir_uses_settings() -> None:
    assert default_run_dir(_small(seed=4)) == settings.output_dir / "small-seed4"


def test_presets_are_valid_configs() -> None:
    names = [name for name, _ in list_presets()]
    assert "power-sweep" in names and "fano-grid" in names
    for name in names:
        config = get_preset(name)
        assert config.name == name


def test_preset_seed_override() -> None:
    assert get_preset("allan-run", seed=42).seed == 42
    with pytest.raises(ConfigValidationError):
        get_preset("allan-run", seed=-1)


def test_unknown_preset_lists_valid_names() -> None:
    with pytest.raises(ConfigValidationError) as info:
        get_preset("nope")
    assert info.value.fields == ["preset"]
    assert "power-sweep" in str(info.value)


@pytest.mark.slow
def test_fano_grid_preset_within_standard_errors(tmp_path: Path) -> None:
    manifest = run_scenario(get_preset("fano-grid"), out_dir=tmp_path)
    assert manifest.summary["max_abs_z_fano"] < 4
    assert manifest.summary["max_abs_z_cross"] < 4
