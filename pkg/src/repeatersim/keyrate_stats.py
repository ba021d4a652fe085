"""Secret key rate analysis: QBER averages to raw rate, key fraction, and S.

The secret key fraction uses the asymptotic BB84 yield evaluated on the
sample-mean QBERs (never averaged per sample), and the raw rate is the
inverse mean completion time in rounds of duration ``2 L0 / nu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import FIBER_SPEED_M_PER_S

__all__ = [
    "binary_entropy",
    "secret_key_fraction",
    "raw_rate",
    "generation_probability",
    "SampleMoments",
    "RunStatistics",
    "statistics_from_moments",
    "aggregate",
]


def binary_entropy(q: float) -> float:
    """Shannon entropy of a bit with bias q, in bits; h(0) = h(1) = 0."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {q}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def secret_key_fraction(e_x: float, e_z: float) -> float:
    """Asymptotic BB84 fraction max(1 - h(e_x) - h(e_z), 0)."""
    return max(1.0 - binary_entropy(e_x) - binary_entropy(e_z), 0.0)


def round_duration(segment_km: float) -> float:
    """Seconds per generation-attempt round, 2 L0 / nu."""
    return 2.0 * segment_km * 1000.0 / FIBER_SPEED_M_PER_S


def raw_rate(mean_rounds: float, segment_km: float) -> float:
    """Delivered pairs per second: 1 / (mean rounds x round duration)."""
    if mean_rounds < 1.0:
        raise ValueError(f"mean rounds cannot be below 1, got {mean_rounds}")
    return 1.0 / (mean_rounds * round_duration(segment_km))


def generation_probability(segment_km: float, attenuation_km: float = 22.0) -> float:
    """Elementary success probability exp(-L0 / L_att) from fiber loss."""
    if segment_km <= 0 or attenuation_km <= 0:
        raise ValueError("distances must be positive")
    return math.exp(-segment_km / attenuation_km)


@dataclass
class SampleMoments:
    """Running sums over (rounds, e_x, e_z) samples; merging is associative."""

    n: int = 0
    sum_r: float = 0.0
    sum_r2: float = 0.0
    sum_x: float = 0.0
    sum_x2: float = 0.0
    sum_z: float = 0.0
    sum_z2: float = 0.0
    sum_rx: float = 0.0
    sum_rz: float = 0.0
    sum_xz: float = 0.0
    max_gap: int = 0
    restarts: int = 0

    def add(self, rounds: float, e_x: float, e_z: float) -> None:
        r = float(rounds)
        self.n += 1
        self.sum_r += r
        self.sum_r2 += r * r
        self.sum_x += e_x
        self.sum_x2 += e_x * e_x
        self.sum_z += e_z
        self.sum_z2 += e_z * e_z
        self.sum_rx += r * e_x
        self.sum_rz += r * e_z
        self.sum_xz += e_x * e_z

    def merge(self, other: "SampleMoments") -> "SampleMoments":
        return SampleMoments(
            n=self.n + other.n,
            sum_r=self.sum_r + other.sum_r,
            sum_r2=self.sum_r2 + other.sum_r2,
            sum_x=self.sum_x + other.sum_x,
            sum_x2=self.sum_x2 + other.sum_x2,
            sum_z=self.sum_z + other.sum_z,
            sum_z2=self.sum_z2 + other.sum_z2,
            sum_rx=self.sum_rx + other.sum_rx,
            sum_rz=self.sum_rz + other.sum_rz,
            sum_xz=self.sum_xz + other.sum_xz,
            max_gap=max(self.max_gap, other.max_gap),
            restarts=self.restarts + other.restarts,
        )


@dataclass(frozen=True)
class RunStatistics:
    """Aggregated waiting-time and QBER statistics with standard errors."""

    samples: int
    mean_rounds: float
    se_rounds: float
    e_x: float
    se_e_x: float
    e_z: float
    se_e_z: float
    raw_rate_hz: float
    secret_key_fraction: float
    secret_key_rate_hz: float
    se_secret_key_rate_hz: float
    max_gap: int
    mean_restarts: float


def _mean_var_cov(m: SampleMoments):
    n = m.n
    mean_r = m.sum_r / n
    mean_x = m.sum_x / n
    mean_z = m.sum_z / n
    if n < 2:
        zeros = (0.0,) * 6
        return (mean_r, mean_x, mean_z) + zeros
    d = n - 1
    var_r = max((m.sum_r2 - n * mean_r * mean_r) / d, 0.0)
    var_x = max((m.sum_x2 - n * mean_x * mean_x) / d, 0.0)
    var_z = max((m.sum_z2 - n * mean_z * mean_z) / d, 0.0)
    cov_rx = (m.sum_rx - n * mean_r * mean_x) / d
    cov_rz = (m.sum_rz - n * mean_r * mean_z) / d
    cov_xz = (m.sum_xz - n * mean_x * mean_z) / d
    return mean_r, mean_x, mean_z, var_r, var_x, var_z, cov_rx, cov_rz, cov_xz


def statistics_from_moments(m: SampleMoments, segment_km: float) -> RunStatistics:
    """Finish moment sums into rates; S and its error from the delta method."""
    if m.n < 1:
        raise ValueError("cannot aggregate an empty sample set")
    mean_r, mean_x, mean_z, var_r, var_x, var_z, cov_rx, cov_rz, cov_xz = _mean_var_cov(m)
    n = m.n
    se_r = math.sqrt(var_r / n)
    se_x = math.sqrt(var_x / n)
    se_z = math.sqrt(var_z / n)
    rate = raw_rate(mean_r, segment_km)
    yield_raw = 1.0 - binary_entropy(mean_x) - binary_entropy(mean_z)
    if yield_raw <= 0.0:
        skf, skr, se_skr = 0.0, 0.0, 0.0
    else:
        skf = yield_raw
        skr = rate * skf
        g_r = -skr / mean_r
        g_x = -rate * math.log2((1.0 - mean_x) / mean_x) if var_x > 0.0 else 0.0
        g_z = -rate * math.log2((1.0 - mean_z) / mean_z) if var_z > 0.0 else 0.0
        variance = (
            g_r * g_r * var_r
            + g_x * g_x * var_x
            + g_z * g_z * var_z
            + 2.0 * g_r * g_x * cov_rx
            + 2.0 * g_r * g_z * cov_rz
            + 2.0 * g_x * g_z * cov_xz
        )
        se_skr = math.sqrt(max(variance, 0.0) / n)
    return RunStatistics(
        samples=n,
        mean_rounds=mean_r,
        se_rounds=se_r,
        e_x=mean_x,
        se_e_x=se_x,
        e_z=mean_z,
        se_e_z=se_z,
        raw_rate_hz=rate,
        secret_key_fraction=skf,
        secret_key_rate_hz=skr,
        se_secret_key_rate_hz=se_skr,
        max_gap=m.max_gap,
        mean_restarts=m.restarts / n,
    )


def aggregate(samples, segment_km: float) -> RunStatistics:
    """Statistics from an explicit list of (rounds, e_x, e_z) samples."""
    moments = SampleMoments()
    for rounds, e_x, e_z in samples:
        moments.add(rounds, e_x, e_z)
    return statistics_from_moments(moments, segment_km)
