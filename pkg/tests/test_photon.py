import math

import numpy as np
import pytest

from hetcorr.core.config import settings
from hetcorr.core.errors import ArgumentError
from hetcorr.schemas.photon import DetectorSpec, PhotonCountStream, SplitterSpec
from hetcorr.services.photon import (
    balanced_difference,
    balanced_receiver_counts,
    c_lo_from_splitters,
    cross_covariance,
    cross_residual_closed_form,
    fano_balanced_closed_form,
    fano_estimate,
    fano_single_splitter_closed_form,
    gen_laser_counts,
    gen_thermal_counts,
    split,
    thin,
    upstream_common_fano,
)
from hetcorr.services.rng import RngStream

MEAN = 2000.0
BINS = 200_000


def _laser(fano: float, seed: int = 1) -> PhotonCountStream:
    return gen_laser_counts(MEAN, fano, BINS, RngStream(seed))


def test_laser_counts_reach_requested_fano() -> None:
    for fano in (1.0, 10.0):
        est = fano_estimate(_laser(fano))
        assert est.fano == pytest.approx(fano, abs=5 * est.std_err)
        assert est.n_bins == BINS


def test_laser_rejects_sub_poissonian_and_empty() -> None:
    with pytest.raises(ArgumentError):
        gen_laser_counts(MEAN, 0.5, 10, RngStream(0))
    with pytest.raises(ArgumentError):
        gen_laser_counts(0.0, 1.0, 10, RngStream(0))
    with pytest.raises(ArgumentError):
        gen_laser_counts(MEAN, 1.0, 0, RngStream(0))


def test_thermal_counts_have_bose_einstein_fano() -> None:
    stream = gen_thermal_counts(1.0, BINS, RngStream(3))
    est = fano_estimate(stream)
    # Var = n(n+1), so the Fano factor is n + 1.
    assert est.fano == pytest.approx(2.0, rel=0.03)


def test_split_conserves_photons_and_partitions_excess_noise() -> None:
    laser = _laser(10.0)
    reflected, transmitted = split(laser, SplitterSpec(r=0.5), RngStream(2))
    assert np.array_equal(reflected.counts + transmitted.counts, laser.counts)
    est = fano_estimate(reflected)
    assert est.fano == pytest.approx(5.5, abs=5 * est.std_err)
    assert fano_single_splitter_closed_form(1.0, 0.5, 10.0) == pytest.approx(5.5)


def test_split_edges_route_everything() -> None:
    laser = _laser(1.0)
    reflected, transmitted = split(laser, SplitterSpec(r=1.0), RngStream(4))
    assert np.array_equal(reflected.counts, laser.counts)
    assert not transmitted.counts.any()


def test_thin_scales_excess_noise() -> None:
    laser = _laser(10.0)
    detected = thin(laser, DetectorSpec(eta=0.75), RngStream(5))
    est = fano_estimate(detected)
    assert est.fano == pytest.approx(7.75, abs=5 * est.std_err)
    assert fano_single_splitter_closed_form(0.75, 1.0, 10.0) == pytest.approx(7.75)


def test_thin_with_unit_efficiency_is_identity() -> None:
    laser = _laser(1.0)
    assert np.array_equal(thin(laser, DetectorSpec(eta=1.0), RngStream(6)).counts, laser.counts)


def test_thin_adds_dark_counts() -> None:
    stream = PhotonCountStream(np.zeros(50_000, dtype=np.int64), bin_duration=1e-3)
    detected = thin(stream, DetectorSpec(eta=1.0, dark_rate=2000.0), RngStream(7))
    assert detected.mean == pytest.approx(2.0, rel=0.03)


def test_split_rejects_balanced_output() -> None:
    diff = PhotonCountStream(np.array([1, -1, 2]), 1.0, non_negative=False)
    with pytest.raises(ArgumentError):
        split(diff, SplitterSpec(), RngStream(0))


def test_negative_counts_need_explicit_flag() -> None:
    with pytest.raises(ArgumentError):
        PhotonCountStream(np.array([1, -1]), 1.0)


def test_balanced_difference_checks_shapes() -> None:
    a = PhotonCountStream(np.arange(4), 1.0)
    with pytest.raises(ArgumentError):
        balanced_difference(a, PhotonCountStream(np.arange(5), 1.0))
    with pytest.raises(ArgumentError):
        balanced_difference(a, PhotonCountStream(np.arange(4), 2.0))
    diff = balanced_difference(a, PhotonCountStream(np.full(4, 2), 1.0))
    assert diff.counts.tolist() == [-2, -1, 0, 1]
    assert diff.non_negative is False


@pytest.mark.parametrize(
    ("eta", "r", "fano_lo", "expected"),
    [(1.0, 0.5, 10.0, 1.0), (1.0, 0.4, 10.0, 1.36), (1.0, 0.5, 1.0, 1.0)],
)
def test_balanced_fano_closed_form_anchors(
    eta: float, r: float, fano_lo: float, expected: float
) -> None:
    assert fano_balanced_closed_form(eta, r, fano_lo) == pytest.approx(expected)


def test_cross_residual_closed_form_anchors() -> None:
    assert cross_residual_closed_form(1.0, 0.4, 0.4, 10.0) == pytest.approx(0.4)
    assert cross_residual_closed_form(0.75, 0.4, 0.4, 10.0) == pytest.approx(0.225)
    assert cross_residual_closed_form(1.0, 0.5, 0.4, 10.0) == 0.0
    # Opposite imbalance anticorrelates.
    assert cross_residual_closed_form(1.0, 0.4, 0.6, 10.0) == pytest.approx(-0.4)


def test_c_lo_from_splitters_ratio() -> None:
    assert c_lo_from_splitters(0.75, 0.4, 0.4, 10.0) == pytest.approx(0.236, abs=0.001)
    assert c_lo_from_splitters(1.0, 0.5, 0.5, 10.0) == 0.0


def test_closed_forms_reject_out_of_range() -> None:
    with pytest.raises(ArgumentError):
        fano_balanced_closed_form(1.2, 0.5, 1.0)
    with pytest.raises(ArgumentError):
        cross_residual_closed_form(1.0, -0.1, 0.5, 1.0)


def test_fano_estimate_needs_two_bins_and_positive_mean() -> None:
    with pytest.raises(ArgumentError):
        fano_estimate(PhotonCountStream(np.array([3]), 1.0))
    with pytest.raises(ArgumentError):
        fano_estimate(PhotonCountStream(np.array([4, 6, 5, 7]), 1.0), mean_ref=0.0)
    alternating = PhotonCountStream(np.array([1, -1, 1, -1]), 1.0, non_negative=False)
    with pytest.raises(ArgumentError):
        fano_estimate(alternating)


def test_fano_of_noiseless_stream_is_zero() -> None:
    steady = PhotonCountStream(np.full(10, 7), 1.0)
    cancelled = fano_estimate(balanced_difference(steady, steady))
    assert cancelled.fano == 0.0
    assert cancelled.std_err == 0.0
    assert cancelled.n_bins == 10
    assert fano_estimate(PhotonCountStream(np.zeros(10, dtype=np.int64), 1.0)).fano == 0.0
    assert fano_estimate(steady).fano == 0.0


def _balanced_grid_fano(eta: float, r: float, fano_lo: float) -> tuple[float, float, float]:
    seed = int(eta * 100) * 1000 + int(r * 10) * 10 + int(fano_lo)
    laser = gen_laser_counts(MEAN, fano_lo, BINS, RngStream(seed, (0,)))
    _, _, diff = balanced_receiver_counts(
        laser, SplitterSpec(r=r), DetectorSpec(eta=eta), RngStream(seed, (1,))
    )
    est = fano_estimate(diff, mean_ref=MEAN)
    assert est.mean_ref == MEAN
    return est.fano, est.std_err, fano_balanced_closed_form(eta, r, fano_lo)


def _force_gaussian_sampling(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(settings, "poisson_gauss_threshold", 100.0)
    monkeypatch.setattr(settings, "binomial_gauss_threshold", 100.0)


@pytest.mark.slow
@pytest.mark.parametrize("gaussian", [False, True])
@pytest.mark.parametrize("eta", [0.5, 0.75, 1.0])
@pytest.mark.parametrize("r", [0.4, 0.5, 0.6])
@pytest.mark.parametrize("fano_lo", [1.0, 10.0])
def test_balanced_fano_matches_closed_form(
    monkeypatch: pytest.MonkeyPatch, gaussian: bool, eta: float, r: float, fano_lo: float
) -> None:
    if gaussian:
        _force_gaussian_sampling(monkeypatch)
    fano, std_err, closed = _balanced_grid_fano(eta, r, fano_lo)
    assert fano == pytest.approx(closed, abs=5 * std_err)


@pytest.mark.parametrize(
    ("eta", "r", "fano_lo"), [(0.5, 0.4, 10.0), (0.75, 0.5, 1.0), (1.0, 0.6, 10.0)]
)
def test_gaussian_sampling_keeps_balanced_fano(
    monkeypatch: pytest.MonkeyPatch, eta: float, r: float, fano_lo: float
) -> None:
    _force_gaussian_sampling(monkeypatch)
    fano, std_err, closed = _balanced_grid_fano(eta, r, fano_lo)
    assert fano == pytest.approx(closed, abs=5 * std_err)


def test_upstream_split_cross_covariance() -> None:
    fano, r0, eta = 10.0, 0.5, 1.0
    rng = RngStream(21)
    laser = gen_laser_counts(MEAN, fano, BINS, rng.child(0))
    branch_a, branch_b = split(laser, SplitterSpec(r=r0), rng.child(1))
    detector = DetectorSpec(eta=eta)
    _, _, d_a = balanced_receiver_counts(branch_a, SplitterSpec(r=0.4), detector, rng.child(2))
    _, _, d_b = balanced_receiver_counts(branch_b, SplitterSpec(r=0.4), detector, rng.child(3))
    cov, std_err = cross_covariance(d_a, d_b)
    branch_mean = math.sqrt(r0 * (1.0 - r0)) * MEAN
    closed = cross_residual_closed_form(eta, 0.4, 0.4, upstream_common_fano(r0, fano)) * branch_mean
    assert closed == pytest.approx(0.04 * 0.25 * 9.0 * MEAN)
    assert cov == pytest.approx(closed, abs=5 * std_err)


def test_balanced_receivers_on_split_laser_are_uncorrelated() -> None:
    rng = RngStream(22)
    laser = gen_laser_counts(MEAN, 10.0, BINS, rng.child(0))
    branch_a, branch_b = split(laser, SplitterSpec(r=0.5), rng.child(1))
    detector = DetectorSpec(eta=1.0)
    _, _, d_a = balanced_receiver_counts(branch_a, SplitterSpec(r=0.5), detector, rng.child(2))
    _, _, d_b = balanced_receiver_counts(branch_b, SplitterSpec(r=0.5), detector, rng.child(3))
    cov, std_err = cross_covariance(d_a, d_b)
    assert abs(cov) < 5 * std_err


def test_single_splitter_outputs_share_excess_noise() -> None:
    laser = _laser(10.0, seed=23)
    reflected, transmitted = split(laser, SplitterSpec(r=0.5), RngStream(24))
    cov, std_err = cross_covariance(reflected, transmitted)
    assert cov == pytest.approx(0.25 * 9.0 * MEAN, abs=5 * std_err)
