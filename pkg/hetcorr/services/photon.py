from __future__ import annotations

import logging
import math

import numpy as np

from hetcorr.core.errors import ArgumentError
from hetcorr.schemas.photon import DetectorSpec, FanoEstimate, PhotonCountStream, SplitterSpec
from hetcorr.services.rng import (
    RngStream,
    sample_binomial,
    sample_geometric_counts,
    sample_poisson,
)

logger = logging.getLogger(__name__)

# Sub-stream slots below a caller's stream.
_LATENT, _COUNTS, _DARK = 0, 1, 2


def gen_laser_counts(
    mean_per_bin: float, fano: float, n_bins: int, rng: RngStream, *, bin_duration: float = 1.0
) -> PhotonCountStream:
    if fano < 1.0:
        raise ArgumentError(f"sub-Poissonian sources are not modeled (fano={fano})")
    if mean_per_bin <= 0:
        raise ArgumentError(f"mean_per_bin must be positive, got {mean_per_bin}")
    if n_bins < 1:
        raise ArgumentError("n_bins must be at least 1")

    if fano == 1.0:
        latent = np.full(n_bins, float(mean_per_bin))
    else:
        rel_sigma = math.sqrt((fano - 1.0) / mean_per_bin)
        g = rng.child(_LATENT).generator().normal(0.0, rel_sigma, n_bins)
        latent = np.maximum(mean_per_bin * (1.0 + g), 0.0)
    counts = sample_poisson(latent, rng.child(_COUNTS))
    return PhotonCountStream(counts=counts, bin_duration=bin_duration, label=f"laser F={fano:g}")


def gen_thermal_counts(
    occupation: float, n_bins: int, rng: RngStream, *, bin_duration: float = 1.0
) -> PhotonCountStream:
    counts = sample_geometric_counts(occupation, rng, size=n_bins)
    return PhotonCountStream(
        counts=np.asarray(counts), bin_duration=bin_duration, label=f"thermal n={occupation:g}"
    )


def split(
    stream: PhotonCountStream, spec: SplitterSpec, rng: RngStream
) -> tuple[PhotonCountStream, PhotonCountStream]:
    _require_optical(stream)
    reflected = np.asarray(sample_binomial(stream.counts, spec.r, rng))
    transmitted = stream.counts - reflected
    return (
        PhotonCountStream(reflected, stream.bin_duration, f"{stream.label}|R"),
        PhotonCountStream(transmitted, stream.bin_duration, f"{stream.label}|T"),
    )


def thin(stream: PhotonCountStream, det: DetectorSpec, rng: RngStream) -> PhotonCountStream:
    _require_optical(stream)
    detected = np.asarray(sample_binomial(stream.counts, det.eta, rng.child(_COUNTS)))
    if det.dark_rate > 0:
        dark_mean = det.dark_rate * stream.bin_duration
        detected = detected + np.asarray(sample_poisson(dark_mean, rng.child(_DARK), len(stream)))
    return PhotonCountStream(detected, stream.bin_duration, f"{stream.label}|eta={det.eta:g}")


def balanced_difference(pd1: PhotonCountStream, pd2: PhotonCountStream) -> PhotonCountStream:
    if len(pd1) != len(pd2):
        raise ArgumentError(f"stream lengths differ ({len(pd1)} vs {len(pd2)})")
    if not math.isclose(pd1.bin_duration, pd2.bin_duration, rel_tol=1e-12):
        raise ArgumentError("streams have different bin durations")
    return PhotonCountStream(
        counts=pd1.counts - pd2.counts,
        bin_duration=pd1.bin_duration,
        label=f"({pd1.label})-({pd2.label})",
        non_negative=False,
    )


def fano_estimate(stream: PhotonCountStream, mean_ref: float | None = None) -> FanoEstimate:
    n = len(stream)
    if n < 2:
        raise ArgumentError("a Fano estimate needs at least 2 bins")
    counts = stream.counts.astype(np.float64)
    variance = float(counts.var(ddof=1))
    ref = abs(float(counts.mean())) if mean_ref is None else float(mean_ref)
    if mean_ref is not None and ref <= 0:
        raise ArgumentError("reference mean must be positive")
    if variance == 0:
        return FanoEstimate(fano=0.0, std_err=0.0, mean_ref=ref, n_bins=n)
    if ref <= 0:
        raise ArgumentError("reference mean must be positive")
    fano = variance / ref
    # Sample variance ~ sigma^2 * chi2(n-1)/(n-1), so its relative spread is sqrt(2/(n-1)).
    std_err = max(fano, 1.0 / ref) * math.sqrt(2.0 / (n - 1))
    return FanoEstimate(fano=fano, std_err=std_err, mean_ref=ref, n_bins=n)


def cross_covariance(a: PhotonCountStream, b: PhotonCountStream) -> tuple[float, float]:
    if len(a) != len(b):
        raise ArgumentError(f"stream lengths differ ({len(a)} vs {len(b)})")
    n = len(a)
    if n < 2:
        raise ArgumentError("covariance needs at least 2 bins")
    da = a.counts - a.counts.mean()
    db = b.counts - b.counts.mean()
    products = da * db
    cov = float(products.sum() / (n - 1))
    std_err = float(products.std(ddof=1) / math.sqrt(n))
    return cov, std_err


def fano_balanced_closed_form(eta: float, r: float, fano_lo: float) -> float:
    """Balanced-output Fano factor normalized to the photon number before the splitter."""
    _check_unit(eta, "eta")
    _check_unit(r, "r")
    t = 1.0 - r
    return eta * (1.0 + eta * (4.0 * t * r - 1.0)) + eta**2 * (1.0 - 2.0 * r) ** 2 * fano_lo


def cross_residual_closed_form(eta: float, r_a: float, r_b: float, fano_lo: float) -> float:
    """Coefficient of nbar in the cross-covariance of two balanced outputs sharing one LO."""
    _check_unit(eta, "eta")
    _check_unit(r_a, "r_a")
    _check_unit(r_b, "r_b")
    return eta**2 * (1.0 - 2.0 * r_a) * (1.0 - 2.0 * r_b) * fano_lo


def balanced_auto_closed_form(eta: float, r: float, fano_lo: float) -> float:
    return fano_balanced_closed_form(eta, r, fano_lo)


def c_lo_from_splitters(eta: float, r_a: float, r_b: float, fano_lo: float) -> float:
    auto = math.sqrt(
        fano_balanced_closed_form(eta, r_a, fano_lo) * fano_balanced_closed_form(eta, r_b, fano_lo)
    )
    if auto == 0:
        return 0.0
    return abs(cross_residual_closed_form(eta, r_a, r_b, fano_lo)) / auto


def fano_single_splitter_closed_form(eta: float, r: float, fano_lo: float) -> float:
    """Fano of one splitter port after detection, normalized to that port's own mean.

    Variance of the port is eta(1-eta)·r·n + eta²·(r(1-r)·n + r²·F·n) and its mean eta·r·n.
    """
    _check_unit(eta, "eta")
    _check_unit(r, "r")
    if eta == 0 or r == 0:
        return 1.0
    return (1.0 - eta) + eta * ((1.0 - r) + r * fano_lo)


def splitter_cross_covariance_closed_form(r: float, fano: float, mean: float) -> float:
    _check_unit(r, "r")
    return r * (1.0 - r) * (fano - 1.0) * mean


def upstream_common_fano(r0: float, fano: float) -> float:
    """Correlated Fano seen by two branches of an upstream split.

    Expressed relative to the geometric mean of the two branch means, this is the F_LO that
    makes the balanced cross-residual formula apply to receivers fed from one split laser.
    """
    _check_unit(r0, "r0")
    return math.sqrt(r0 * (1.0 - r0)) * (fano - 1.0)


def _check_unit(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ArgumentError(f"{name} must lie in [0, 1], got {value}")


def _require_optical(stream: PhotonCountStream) -> None:
    if not stream.non_negative or (len(stream) and stream.counts.min() < 0):
        raise ArgumentError(f"stream {stream.label!r} is not a non-negative photon stream")


def balanced_receiver_counts(
    stream: PhotonCountStream, splitter: SplitterSpec, detector: DetectorSpec, rng: RngStream
) -> tuple[PhotonCountStream, PhotonCountStream, PhotonCountStream]:
    reflected, transmitted = split(stream, splitter, rng.child(0))
    pd1 = thin(reflected, detector, rng.child(1))
    pd2 = thin(transmitted, detector, rng.child(2))
    return pd1, pd2, balanced_difference(pd1, pd2)
