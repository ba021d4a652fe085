"""Sampling kernel selection: compiled extension with pure-Python fallback.

The Cython module ``repeatersim._speedups`` mirrors ``repeatersim._mc``
exactly (same uniform-draw order, same arithmetic); which lane runs is
decided once at import.  Set ``REPEATERSIM_PURE_PYTHON=1`` to force the
fallback, e.g. to benchmark or to debug the reference implementation.
"""

from __future__ import annotations

import os

import numpy as np

from . import _mc
from .errors import RoundCapExceeded
from .keyrate_stats import SampleMoments


def _load_extension():
    if os.environ.get("REPEATERSIM_PURE_PYTHON"):
        return None
    try:
        from . import _speedups

        return _speedups
    except ImportError:
        return None


_EXT = _load_extension()


def backend_name() -> str:
    return "cython" if _EXT is not None else "python"


def sample_generator(seed: int, index: int) -> np.random.Generator:
    """The RNG stream of sample ``index``: PCG64 seeded by (seed, index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, index))))


def run_record(
    protocol: int,
    segments: int,
    p_gen: float,
    p: float,
    growth_limit: int,
    patch_min: int,
    max_rounds: int,
    rng: np.random.Generator,
) -> _mc.RunRecord:
    """One sample as a full flat record, drawn from ``rng``."""
    if _EXT is not None:
        return _EXT.run_record(
            protocol, segments, p_gen, p, growth_limit, patch_min, max_rounds,
            rng.bit_generator,
        )
    return _mc.run_protocol_record(
        protocol, segments, p_gen, p, growth_limit, patch_min, max_rounds, rng.random
    )


def sample_moments(
    protocol: int,
    segments: int,
    p_gen: float,
    p: float,
    growth_limit: int,
    patch_min: int,
    max_rounds: int,
    dephasing_time: float,
    round_seconds: float,
    seed: int,
    start: int,
    count: int,
) -> SampleMoments:
    """Accumulated (rounds, e_x, e_z) moments over samples [start, start+count).

    Sample ``i`` always uses the stream (seed, i), so partitioning a run
    into chunks never changes any individual sample.
    """
    if _EXT is not None:
        values = _EXT.run_moments(
            protocol, segments, p_gen, p, growth_limit, patch_min, max_rounds,
            dephasing_time, round_seconds, seed, start, count,
        )
        return SampleMoments(*values)
    moments = SampleMoments()
    for index in range(start, start + count):
        gen = sample_generator(seed, index)
        try:
            record = _mc.run_protocol_record(
                protocol, segments, p_gen, p, growth_limit, patch_min, max_rounds,
                gen.random,
            )
        except RoundCapExceeded as exc:
            raise RoundCapExceeded(f"sample {index}: {exc}") from None
        e_x, e_z = _mc.qber_from_record(record, dephasing_time, round_seconds)
        moments.add(record.rounds, e_x, e_z)
        if record.max_gap > moments.max_gap:
            moments.max_gap = record.max_gap
        moments.restarts += record.restarts
    return moments
