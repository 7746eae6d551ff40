"""Seeded Laplace noise, Report Noisy Max and composition accounting."""

from __future__ import annotations

import hashlib
import math
from collections.abc import Hashable, Mapping
from dataclasses import dataclass

import numpy as np

#: Noise scale meaning "add no noise at all". Produced when epsilon is infinite
#: or the calibrated sensitivity is zero; :func:`sample_laplace` returns exactly 0.
NO_NOISE = math.inf


def _stream_key(stream: Hashable) -> tuple[int, ...]:
    if isinstance(stream, (int, np.integer)):
        return (int(stream) & 0xFFFFFFFF, int(stream) >> 32)
    if isinstance(stream, tuple):
        return tuple(x for s in stream for x in _stream_key(s))
    digest = hashlib.sha256(str(stream).encode()).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


class NoiseSource:
    """A replayable uniform stream identified by ``(seed, stream)``.

    ``stream`` may be an int, a string label, or a tuple of those; distinct
    ids give statistically independent streams (numpy ``SeedSequence``
    spawn keys over PCG64), and identical ids replay bit-for-bit.
    """

    def __init__(self, seed: int, stream: Hashable = 0):
        if seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        self.seed = int(seed)
        self.stream = stream
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=_stream_key(stream))
        self._rng = np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: Hashable) -> NoiseSource:
        return NoiseSource(self.seed, (self.stream, stream))

    def uniform(self) -> float:
        """One draw from the open interval (0, 1)."""
        while True:
            u = float(self._rng.random())
            if u > 0.0:
                return u

    def uniforms(self, size: int) -> np.ndarray:
        u = self._rng.random(size)
        while np.any(u == 0.0):
            zero = u == 0.0
            u[zero] = self._rng.random(int(zero.sum()))
        return u

    def __repr__(self) -> str:
        return f"NoiseSource(seed={self.seed}, stream={self.stream!r})"


def laplace_from_uniform(u, scale: float):
    """Inverse CDF of Lap(0, scale); works on floats and numpy arrays."""
    c = np.asarray(u, dtype=float) - 0.5
    x = -scale * np.sign(c) * np.log1p(-2.0 * np.abs(c))
    return float(x) if np.ndim(x) == 0 else x


def _check_scale(scale: float) -> None:
    if math.isnan(scale) or scale <= 0:
        raise ValueError(f"Laplace scale must be positive, got {scale}")


def sample_laplace(scale: float, src: NoiseSource) -> float:
    _check_scale(scale)
    if scale == NO_NOISE:
        return 0.0
    return laplace_from_uniform(src.uniform(), scale)


def sample_laplace_many(scale: float, size: int, src: NoiseSource) -> np.ndarray:
    """``size`` independent draws, one uniform each, in stream order."""
    _check_scale(scale)
    if scale == NO_NOISE:
        return np.zeros(size)
    return laplace_from_uniform(src.uniforms(size), scale)


def laplace_scale(sensitivity: float, epsilon: float, factor: float = 1.0) -> float:
    """``factor * sensitivity / epsilon``, or :data:`NO_NOISE` when that is zero."""
    if math.isnan(epsilon) or epsilon <= 0:
        raise ValueError(f"epsilon must be positive or inf, got {epsilon}")
    if sensitivity < 0:
        raise ValueError("sensitivity must be nonnegative")
    if math.isinf(epsilon) or sensitivity == 0 or factor == 0:
        return NO_NOISE
    return factor * sensitivity / epsilon


def report_noisy_max(
    values: Mapping[int, float], gamma: float, epsilon: float, src: NoiseSource
) -> tuple[int, float]:
    """Add Lap(gamma/epsilon) to every value and release the argmax and its noisy value.

    Candidates receive noise in ascending id order; ties go to the smallest id.
    """
    if not values:
        raise ValueError("report_noisy_max needs at least one candidate")
    keys = sorted(values)
    noise = sample_laplace_many(laplace_scale(gamma, epsilon), len(keys), src)
    best, best_val = keys[0], -math.inf
    for key, z in zip(keys, noise):
        noisy = float(values[key]) + float(z)
        if noisy > best_val:
            best, best_val = key, noisy
    return best, best_val


@dataclass
class PrivacyLedger:
    """Privacy spent by a private search: one charge per component-search round."""

    per_round_epsilon: float
    rounds_used: int = 0
    delta: float | None = None

    def __post_init__(self):
        if self.per_round_epsilon < 0:
            raise ValueError("per-round epsilon must be nonnegative")

    def charge(self) -> None:
        self.rounds_used += 1

    def snapshot(self) -> dict:
        return {
            "per_round_epsilon": self.per_round_epsilon,
            "rounds_used": self.rounds_used,
            "epsilon": compose_basic(self),
            "risk_multiplier": risk_multiplier(compose_basic(self)),
        }


def compose_basic(ledger: PrivacyLedger) -> float:
    if ledger.rounds_used == 0:
        return 0.0
    return ledger.rounds_used * ledger.per_round_epsilon


def compose_advanced(ledger: PrivacyLedger, delta: float | None = None) -> float:
    """``2 * sqrt(2 * rounds * ln(1/delta)) * epsilon`` for the rounds charged so far."""
    delta = ledger.delta if delta is None else delta
    if delta is None or not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if ledger.rounds_used == 0:
        return 0.0
    return 2.0 * math.sqrt(2.0 * ledger.rounds_used * math.log(1.0 / delta)) * ledger.per_round_epsilon


def risk_multiplier(epsilon: float) -> float:
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    return math.exp(epsilon)
