from __future__ import annotations

import math
from typing import Literal

from hetcorr.core.constants import E_CHARGE, H, K_B, quantum_temperature, responsivity
from hetcorr.core.errors import ArgumentError, UndefinedValueError
from hetcorr.schemas.analysis import OracleReport


def occupation(t_source: float, frequency: float) -> float:
    """Planck mode occupation 1/(exp(h·nu/k_B·T) - 1)."""
    if t_source < 0:
        raise ArgumentError(f"source temperature must be non-negative, got {t_source}")
    if t_source == 0:
        return 0.0
    x = H * frequency / (K_B * t_source)
    if x > 700:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def brightness_temperature(n: float, frequency: float) -> float:
    if n < 0:
        raise ArgumentError("occupation must be non-negative")
    if n == 0:
        return 0.0
    return quantum_temperature(frequency) / math.log1p(1.0 / n)


def rayleigh_jeans_temperature(n: float, frequency: float) -> float:
    return n * quantum_temperature(frequency)


def source_power(n_s: float, frequency: float, band: float) -> float:
    return H * frequency * n_s * band


def lo_occupation(p_lo: float, frequency: float, linewidth: float) -> float:
    return p_lo / (H * frequency * linewidth)


def power_fluctuation_rms(variance_n: float, frequency: float, band: float, df: float) -> float:
    return H * frequency * math.sqrt(2.0 * variance_n * band * df)


def shot_noise_rin(power: float, frequency: float) -> float:
    if power <= 0:
        raise ArgumentError("power must be positive")
    return 2.0 * H * frequency / power


def heterodyne_rms_power(p_s: float, p_lo: float) -> float:
    return math.sqrt(2.0 * p_s * p_lo)


def t_sys_ac_closed_form(
    fano: float,
    eta: float,
    amp_temp: float,
    z_load: float,
    responsivity: float,
    p_lo: float,
    frequency: float,
) -> float:
    """(F/eta)·T_Q + T/(2·Z·R²·P_LO)."""
    if eta <= 0 or z_load <= 0 or responsivity <= 0 or p_lo <= 0:
        raise ArgumentError("eta, z_load, responsivity and p_lo must be positive")
    return fano / eta * quantum_temperature(frequency) + amp_temp / (
        2.0 * z_load * responsivity**2 * p_lo
    )


def t_sys_cc_closed_form(
    c_lo: float, gamma_mag: float, fano: float, eta: float, frequency: float
) -> float:
    if gamma_mag <= 0:
        raise UndefinedValueError("no fringe: cross-correlation noise temperature needs |gamma| > 0")
    if eta <= 0:
        raise ArgumentError("eta must be positive")
    return c_lo * fano / (gamma_mag * eta) * quantum_temperature(frequency)


def nespd(fano: float, eta: float, frequency: float) -> float:
    if eta <= 0:
        raise ArgumentError("eta must be positive")
    return fano * H * frequency / eta


def snr_oracles(
    *,
    n_s: float,
    n_lo: float,
    dnu_s: float,
    dnu_lo: float,
    df: float,
    gamma_mag: float,
    c_lo: float,
    fano: float,
    eta: float,
    frequency: float,
    amp_temp: float,
    z_load: float,
    p_lo: float,
    dark_current: float = 0.0,
    signal_variance: Literal["thermal", "poisson"] = "thermal",
) -> OracleReport:
    if min(dnu_s, dnu_lo, df) <= 0 or n_lo <= 0 or fano <= 0:
        raise ArgumentError("bandwidths, LO occupation and Fano factor must be positive")
    resp = responsivity(eta, frequency)
    h_nu = H * frequency
    ratio_s_lo = n_s * dnu_s / (n_lo * dnu_lo)

    # LO excess noise F scales the LO term, as it does in the cross-correlation denominator.
    snr_het_pre = n_s / (fano + ratio_s_lo) * dnu_s / df
    snr_het_pre_limit = n_s * dnu_s / (fano * df)

    var_s = n_s * (n_s + 1.0) if signal_variance == "thermal" else n_s
    cc_denominator = c_lo * fano + gamma_mag * var_s * dnu_s / (n_lo * dnu_lo)
    snr_cc_pre = gamma_mag * n_s / cc_denominator * dnu_s / df if cc_denominator > 0 else math.inf
    snr_cc_pre_limit = (
        gamma_mag / (c_lo * fano) * n_s * dnu_s / df if c_lo * fano > 0 else math.inf
    )

    i_ph = resp * p_lo
    n_el = (K_B * amp_temp + z_load * 2.0 * E_CHARGE * (dark_current + (1.0 - eta) * i_ph)) * df
    n_pre = z_load * resp**2 * h_nu**2 * (var_s * dnu_s + fano * n_lo * dnu_lo) * 2.0 * df
    nr_het = n_el / n_pre
    nr_het_limit = (K_B * amp_temp + z_load * 2.0 * E_CHARGE * dark_current) / (
        2.0 * z_load * resp**2 * h_nu * fano * p_lo
    ) + (1.0 - eta) / (fano * eta)

    psd_s = h_nu * n_s
    thermal_term = K_B * amp_temp / (2.0 * z_load * resp * p_lo)
    snr_het_el = resp * psd_s / (fano * E_CHARGE + thermal_term)
    snr_het_el_limit = resp * psd_s / (fano * E_CHARGE)
    snr_cc_el = (
        resp * psd_s * gamma_mag / (E_CHARGE * fano * c_lo) if c_lo * fano > 0 else None
    )

    return OracleReport(
        snr_het_pre=snr_het_pre,
        snr_het_pre_limit=snr_het_pre_limit,
        snr_cc_pre=snr_cc_pre,
        snr_cc_pre_limit=snr_cc_pre_limit,
        nr_het=nr_het,
        nr_het_limit=nr_het_limit,
        snr_post=snr_het_pre / (1.0 + nr_het),
        nespd=nespd(fano, eta, frequency),
        snr_het_el=snr_het_el,
        snr_het_el_limit=snr_het_el_limit,
        snr_cc_el=snr_cc_el,
        signal_variance=signal_variance,
    )


def radiometer_sigma(t_rec: float, dnu: float, dt: float) -> float:
    if dnu <= 0 or dt <= 0:
        raise ArgumentError("bandwidth and integration time must be positive")
    return t_rec / math.sqrt(dnu * dt)


def t_rec_from_power(p_s_y: float, y: float, channel_bw: float) -> float:
    """Receiver temperature from the source power that produced factor `y` (cold load at 0 K)."""
    if y <= 1:
        raise ArgumentError(f"y must exceed 1, got {y}")
    if channel_bw <= 0:
        raise ArgumentError("channel bandwidth must be positive")
    return p_s_y / ((y - 1.0) * K_B * channel_bw)
