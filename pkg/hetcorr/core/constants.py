from __future__ import annotations

from scipy import constants

H = constants.h
K_B = constants.k
E_CHARGE = constants.e

DEFAULT_OPTICAL_FREQUENCY_HZ = 1.927e14


def quantum_temperature(frequency: float) -> float:
    """SSB quantum limit T_Q = h·nu/k_B in kelvin."""
    return H * frequency / K_B


def dsb_quantum_temperature(frequency: float) -> float:
    return quantum_temperature(frequency) / 2.0


def responsivity(eta: float, frequency: float) -> float:
    """Photodiode responsivity eta·e/(h·nu) in A/W."""
    return eta * E_CHARGE / (H * frequency)
