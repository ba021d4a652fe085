"""Swapping-based double-distance baseline sampler.

Same recursion and bookkeeping as the merging-based protocol, but the two
halves are connected by entanglement swapping, modeled as a merge
followed by a sigma_y measurement of the source qubit at swap time.  A
failed swap discards the two pairs being connected and regenerates both
halves of that scope; there is no patching.
"""

from __future__ import annotations

import numpy as np

from . import backend
from ._mc import PROTOCOL_SB
from .config import ProtocolConfig
from .protocol_mb import SampleOutcome, record_to_outcome

__all__ = ["sb_sample"]


def sb_sample(
    segments: int, cfg: ProtocolConfig, rng: np.random.Generator
) -> SampleOutcome:
    """Sample one swapping-based run over ``segments`` segments (power of two)."""
    if segments < 1 or segments & (segments - 1):
        raise ValueError(f"segments must be a power of two, got {segments}")
    record = backend.run_record(
        PROTOCOL_SB,
        segments,
        cfg.resolved_p_gen,
        cfg.p,
        cfg.growth_limit,
        cfg.patch_min_segments,
        cfg.max_rounds,
        rng,
    )
    return record_to_outcome(record)
