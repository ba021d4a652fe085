"""Protocol and physical parameters for one simulation run."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigError

__all__ = ["ProtocolConfig", "FIBER_SPEED_M_PER_S", "PATCH_MIN_LIMITED", "PATCH_MIN_UNLIMITED"]

FIBER_SPEED_M_PER_S = 2.0e8

# Central-gap patching is attempted only when the scope spans more than
# this many segments.  "Limited" blocks the first two protocol steps,
# "unlimited" only the structurally impossible two-segment case.
PATCH_MIN_LIMITED = 4
PATCH_MIN_UNLIMITED = 3


@dataclass(frozen=True)
class ProtocolConfig:
    """All physical and protocol parameters.

    Parameters
    ----------
    k : int
        Doubling levels; the chain spans ``2**k`` segments.
    dephasing_time : float
        Memory dephasing time T in seconds.
    p : float
        Success probability of merging and swapping operations.
    total_km : float, optional
        End-to-end distance L_T; the segment length is ``total_km / 2**k``.
    segment_km : float, optional
        Segment length L0, as an alternative to ``total_km``.
    p_gen : float, optional
        Elementary generation success probability; derived from the
        attenuation length as ``exp(-L0 / attenuation_km)`` when omitted.
    attenuation_km : float
        Fiber attenuation length L_att (default 22 km).
    growth_limit : int
        Maximum number of gap growths before the current scope restarts.
    patch_min_segments : int
        Patch a central gap only when the scope exceeds this many
        segments; 4 is the "limited" mode, 3 the "unlimited" one.
    samples : int
        Monte Carlo sample count.
    seed : int
        Base seed; sample ``i`` uses the stream ``(seed, i)``.
    max_rounds : int
        Abort a single sample beyond this many rounds.
    """

    k: int
    dephasing_time: float
    p: float
    total_km: float | None = None
    segment_km: float | None = None
    p_gen: float | None = None
    attenuation_km: float = 22.0
    growth_limit: int = 1
    patch_min_segments: int = PATCH_MIN_LIMITED
    samples: int = 10000
    seed: int = 0
    max_rounds: int = 10**9

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}")
        if self.dephasing_time <= 0:
            raise ConfigError(f"dephasing_time must be positive, got {self.dephasing_time}")
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"p must lie in (0, 1], got {self.p}")
        if self.total_km is None and self.segment_km is None:
            raise ConfigError("one of total_km or segment_km is required")
        if self.total_km is not None and self.segment_km is not None:
            if abs(self.total_km - self.segment_km * self.segments) > 1e-9:
                raise ConfigError("total_km and segment_km are inconsistent")
        if self.resolved_segment_km <= 0:
            raise ConfigError("segment length must be positive")
        if self.p_gen is not None and not 0.0 < self.p_gen <= 1.0:
            raise ConfigError(f"p_gen must lie in (0, 1], got {self.p_gen}")
        if self.attenuation_km <= 0:
            raise ConfigError(f"attenuation_km must be positive, got {self.attenuation_km}")
        if self.growth_limit < 0:
            raise ConfigError(f"growth_limit must be nonnegative, got {self.growth_limit}")
        if self.patch_min_segments < 3:
            raise ConfigError("patch_min_segments below 3 would patch two-segment scopes")
        if self.samples < 1:
            raise ConfigError(f"samples must be at least 1, got {self.samples}")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be positive")

    @property
    def segments(self) -> int:
        return 1 << self.k

    @property
    def resolved_segment_km(self) -> float:
        if self.segment_km is not None:
            return self.segment_km
        return self.total_km / self.segments

    @property
    def resolved_total_km(self) -> float:
        if self.total_km is not None:
            return self.total_km
        return self.segment_km * self.segments

    @property
    def resolved_p_gen(self) -> float:
        if self.p_gen is not None:
            return self.p_gen
        return math.exp(-self.resolved_segment_km / self.attenuation_km)

    @property
    def round_seconds(self) -> float:
        """Duration of one generation-attempt round, 2 L0 / nu."""
        return 2.0 * self.resolved_segment_km * 1000.0 / FIBER_SPEED_M_PER_S

    @property
    def patch_mode(self) -> str:
        return "limited" if self.patch_min_segments >= PATCH_MIN_LIMITED else "unlimited"

    def with_updates(self, **kwargs) -> "ProtocolConfig":
        return replace(self, **kwargs)
