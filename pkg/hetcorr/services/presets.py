from __future__ import annotations

from collections.abc import Callable

from pydantic import ValidationError

from hetcorr.core.constants import K_B
from hetcorr.core.errors import ConfigValidationError
from hetcorr.schemas.receiver import LoMode, ReceiverSpec, SourceSpec
from hetcorr.schemas.scenario import (
    DriftConfig,
    Experiment,
    ScenarioConfig,
    SwitchingSpec,
)

# Residual LO correlation of the best measured receiver pair.
MEASURED_C_LO = 0.047
# About 1e5 chunks of 512 samples at 16 MHz.
DESK_DURATION_S = 3.2768


def _kelvin_sweep(temps: list[float]) -> list[float]:
    return [t * K_B for t in temps]


def power_sweep() -> ScenarioConfig:
    return ScenarioConfig(
        name="power-sweep",
        experiment=Experiment.power_sweep,
        duration_s=DESK_DURATION_S,
        injected_c_lo=MEASURED_C_LO,
        sweep_psd_w_per_hz=_kelvin_sweep([0.0, 2e4, 4e4, 6e4, 8e4, 1e5]),
    )


def single_pd_control() -> ScenarioConfig:
    # Strong excess-noise laser on single diodes: LO noise dominates and is fully common.
    rx = ReceiverSpec(fano_lo=10.0, p_lo_watts=5e-3)
    return ScenarioConfig(
        name="single-pd-control",
        experiment=Experiment.power_sweep,
        duration_s=DESK_DURATION_S,
        source=SourceSpec(lo_mode=LoMode.single_pd_pair),
        rx_a=rx,
        rx_b=rx,
        sweep_psd_w_per_hz=_kelvin_sweep([0.0, 1e5, 2e5, 3e5, 4e5, 5e5]),
    )


def gain_study() -> ScenarioConfig:
    return ScenarioConfig(
        name="gain-study",
        experiment=Experiment.gain_study,
        duration_s=DESK_DURATION_S / 2,
        injected_c_lo=MEASURED_C_LO,
        gain_study_db=[75.0, 85.0, 95.0],
    )


def allan_run() -> ScenarioConfig:
    return ScenarioConfig(
        name="allan-run",
        experiment=Experiment.allan,
        duration_s=DESK_DURATION_S,
        injected_c_lo=MEASURED_C_LO,
        drift=DriftConfig(walk_per_sqrt_s=0.02),
        allan_readout_chunks=64,
    )


def gain_opt() -> ScenarioConfig:
    return ScenarioConfig(
        name="gain-opt",
        experiment=Experiment.gain_opt,
        duration_s=0.2048,
    )


def oracle_report() -> ScenarioConfig:
    return ScenarioConfig(
        name="oracle-report",
        experiment=Experiment.oracles,
        source=SourceSpec(psd_w_per_hz=1e4 * K_B),
        injected_c_lo=MEASURED_C_LO,
    )


def dicke_drift() -> ScenarioConfig:
    return ScenarioConfig(
        name="dicke-drift",
        experiment=Experiment.dicke,
        duration_s=DESK_DURATION_S / 2,
        source=SourceSpec(psd_w_per_hz=2e4 * K_B),
        injected_c_lo=MEASURED_C_LO,
        switching=SwitchingSpec(mode="dicke", rate_hz=1000.0),
        drift=DriftConfig(ramp_per_s=0.05),
    )


def fano_grid() -> ScenarioConfig:
    return ScenarioConfig(name="fano-grid", experiment=Experiment.fano_grid, duration_s=0.001)


_PRESETS: dict[str, tuple[str, Callable[[], ScenarioConfig]]] = {
    "power-sweep": (
        "six-level source sweep, AC and CC response fits with injected c_LO = 0.047",
        power_sweep,
    ),
    "single-pd-control": (
        "single photodiodes with an excess-noise laser: c_LO near 1, no CC advantage",
        single_pd_control,
    ),
    "gain-study": (
        "zero-input AC/CC floors and c_LO at three amplifier gains",
        gain_study,
    ),
    "allan-run": (
        "Allan variance of AC and CC readouts under a common gain random walk",
        allan_run,
    ),
    "gain-opt": (
        "optimum amplifier gain per receiver with predicted and measured clipping",
        gain_opt,
    ),
    "oracle-report": (
        "every closed-form SNR, noise-temperature and ADC figure at preset parameters",
        oracle_report,
    ),
    "dicke-drift": (
        "fast vs slow source switching under a linear gain ramp",
        dicke_drift,
    ),
    "fano-grid": (
        "photon-counting Fano propagation grid and cross-residual check",
        fano_grid,
    ),
}


def list_presets() -> list[tuple[str, str]]:
    return [(name, description) for name, (description, _) in _PRESETS.items()]


def get_preset(name: str, *, seed: int | None = None) -> ScenarioConfig:
    try:
        _, factory = _PRESETS[name]
    except KeyError:
        valid = ", ".join(_PRESETS)
        raise ConfigValidationError(
            f"unknown preset {name!r}; valid presets: {valid}", ["preset"]
        ) from None
    config = factory()
    if seed is not None:
        try:
            config = ScenarioConfig.model_validate({**config.model_dump(), "seed": seed})
        except ValidationError as exc:
            raise ConfigValidationError.from_pydantic(exc, source=f"preset {name}") from exc
    return config
