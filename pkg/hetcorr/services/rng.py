from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hetcorr.core.config import settings
from hetcorr.core.errors import ArgumentError


@dataclass(frozen=True, slots=True)
class RngStream:
    """Immutable descriptor of a random stream.

    The same (seed, stream_id) always materializes the same generator; each call to
    `generator()` starts from the beginning of the stream, so callers that need several
    independent draws derive children instead of reusing one stream.
    """

    seed: int
    stream_id: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if any(part < 0 for part in self.stream_id):
            raise ArgumentError(f"stream_id parts must be non-negative, got {self.stream_id}")

    def child(self, *ids: int) -> RngStream:
        return RngStream(self.seed, self.stream_id + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream_id)
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True, slots=True)
class NoisePhasor:
    re: np.ndarray | float
    im: np.ndarray | float

    @property
    def value(self) -> np.ndarray | complex:
        return np.asarray(self.re) + 1j * np.asarray(self.im)

    @property
    def magnitude(self) -> np.ndarray | float:
        return np.hypot(self.re, self.im)


def sample_gaussian_phasor(rng: RngStream, size: int | None = None) -> NoisePhasor:
    gen = rng.generator()
    scale = np.sqrt(0.5)
    re = gen.normal(0.0, scale, size)
    im = gen.normal(0.0, scale, size)
    return NoisePhasor(re=re, im=im)


def _as_nonnegative(values: np.ndarray, name: str) -> np.ndarray:
    if np.any(~np.isfinite(values)) or np.any(values < 0):
        raise ArgumentError(f"{name} must be finite and non-negative")
    return values


def sample_poisson(
    mean: float | np.ndarray,
    rng: RngStream,
    size: int | tuple[int, ...] | None = None,
    *,
    threshold: float | None = None,
) -> np.ndarray | int:
    threshold = settings.poisson_gauss_threshold if threshold is None else threshold
    lam = _as_nonnegative(np.asarray(mean, dtype=np.float64), "mean")
    if size is not None:
        lam = np.broadcast_to(lam, size)
    gen = rng.generator()

    exact = lam <= threshold
    if np.all(exact):
        out = gen.poisson(lam)
    else:
        out = np.empty(lam.shape, dtype=np.int64)
        out[exact] = gen.poisson(lam[exact])
        big = lam[~exact]
        approx = np.rint(big + np.sqrt(big) * gen.standard_normal(big.shape))
        out[~exact] = np.maximum(approx, 0).astype(np.int64)
    if np.ndim(out) == 0:
        return int(out)
    return out.astype(np.int64, copy=False)


def sample_binomial(
    n: int | np.ndarray,
    p: float,
    rng: RngStream,
    size: int | tuple[int, ...] | None = None,
    *,
    threshold: float | None = None,
) -> np.ndarray | int:
    if not 0.0 <= p <= 1.0:
        raise ArgumentError(f"probability must lie in [0, 1], got {p}")
    threshold = settings.binomial_gauss_threshold if threshold is None else threshold
    trials = np.asarray(n, dtype=np.int64)
    if np.any(trials < 0):
        raise ArgumentError("trial count must be non-negative")
    if size is not None:
        trials = np.broadcast_to(trials, size)
    gen = rng.generator()

    # p in {0, 1} is deterministic; skip the generator so identities hold exactly.
    if p == 0.0:
        out = np.zeros(trials.shape, dtype=np.int64)
    elif p == 1.0:
        out = trials.copy()
    else:
        exact = trials <= threshold
        if np.all(exact):
            out = gen.binomial(trials, p)
        else:
            out = np.empty(trials.shape, dtype=np.int64)
            out[exact] = gen.binomial(trials[exact], p)
            big = trials[~exact].astype(np.float64)
            approx = np.rint(big * p + np.sqrt(big * p * (1.0 - p)) * gen.standard_normal(big.shape))
            out[~exact] = np.clip(approx, 0, big).astype(np.int64)
    if np.ndim(out) == 0:
        return int(out)
    return np.asarray(out, dtype=np.int64)


def sample_geometric_counts(
    occupation: float, rng: RngStream, size: int | None = None
) -> np.ndarray | int:
    """Bose-Einstein counts, p(n) = nbar^n / (1 + nbar)^(n+1)."""
    if occupation < 0:
        raise ArgumentError(f"occupation must be non-negative, got {occupation}")
    if occupation == 0:
        return 0 if size is None else np.zeros(size, dtype=np.int64)
    gen = rng.generator()
    out = gen.geometric(1.0 / (1.0 + occupation), size) - 1
    if np.ndim(out) == 0:
        return int(out)
    return out.astype(np.int64, copy=False)


def wiener_bridge(
    rng: RngStream, n: int, dt: float, rate: float, total: float
) -> np.ndarray:
    """Random-walk path of `n` samples starting at 0 and ending at `total`.

    `rate` is the diffusion rate per sqrt(second). The endpoint is drawn by the caller so
    consecutive blocks, generated independently, join into one continuous walk.
    """
    if n <= 0:
        return np.zeros(0)
    if rate == 0.0:
        return np.linspace(0.0, total, n + 1)[1:]
    steps = rng.generator().normal(0.0, rate * np.sqrt(dt), n)
    walk = np.cumsum(steps)
    frac = np.arange(1, n + 1) / n
    return walk - frac * walk[-1] + frac * total


def wiener_block_offsets(
    rng: RngStream, durations: np.ndarray, rate: float
) -> tuple[np.ndarray, np.ndarray]:
    durations = np.asarray(durations, dtype=np.float64)
    if rate == 0.0:
        zeros = np.zeros(durations.size)
        return zeros, zeros.copy()
    increments = rate * np.sqrt(durations) * rng.generator().standard_normal(durations.size)
    starts = np.concatenate(([0.0], np.cumsum(increments)[:-1]))
    return starts, increments
