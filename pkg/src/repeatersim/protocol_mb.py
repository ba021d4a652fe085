"""Merging-based double-distance protocol sampler.

The chain of ``2**k`` segments is built by recursive halving: each half
completes independently, the earlier one waiting in memory, and a merge
joins the two boundary qubits (left boundary as source, right as target).
A failed merge erases the two qubits involved and leaves a two-segment
entanglement gap; scopes above the patching threshold repair it with
freshly built blocks, letting gaps move (one attachment fails) or grow
(both fail) up to the configured growth limit before the scope restarts.
Once one cluster spans the scope, the interior qubits are measured in the
sigma_y basis from left to right to deliver the end-to-end pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from ._mc import (
    OP_ERASE,
    OP_MERGE,
    OP_MY,
    OP_MZ,
    PROTOCOL_MB,
    PROTOCOL_SB,
    ChainState,
    Kernel,
    RunRecord,
)
from .config import ProtocolConfig
from .traces import (
    MemoryLedger,
    MergeFailureErase,
    MergeSuccess,
    MeasureY,
    MeasureZ,
    OperationTrace,
)

__all__ = [
    "SampleOutcome",
    "sample_elementary",
    "mb_sample",
    "record_to_outcome",
    "ChainState",
    "Kernel",
]


@dataclass(frozen=True)
class SampleOutcome:
    """One waiting-time sample with its replayable trace and storage ledger."""

    rounds: int
    trace: OperationTrace
    ledger: MemoryLedger  # in rounds; scale by round_seconds before noise replay
    max_gap: int
    restarts: int


def sample_elementary(p_gen: float, rng: np.random.Generator) -> int:
    """Rounds until one elementary link succeeds: geometric on {1, 2, ...}."""
    if not 0.0 < p_gen <= 1.0:
        raise ValueError(f"p_gen must lie in (0, 1], got {p_gen}")
    kernel = Kernel(PROTOCOL_MB, 1, p_gen, 1.0, 0, 4, 10**9, rng.random)
    return kernel.geometric()


def record_to_outcome(record: RunRecord) -> SampleOutcome:
    """Materialize the flat kernel record into trace and ledger objects."""
    events = []
    for op, a, b in zip(record.ev_op, record.ev_a, record.ev_b):
        if op == OP_MERGE:
            events.append(MergeSuccess(a, b))
        elif op == OP_ERASE:
            events.append(MergeFailureErase(a, b))
        elif op == OP_MZ:
            events.append(MeasureZ(a))
        elif op == OP_MY:
            events.append(MeasureY(a))
        else:
            raise AssertionError(f"unknown op code {op}")
    trace = OperationTrace(
        stations=tuple(record.station),
        pairs=tuple(zip(record.pair_a, record.pair_b)),
        events=tuple(events),
        outputs=(record.out_left, record.out_right),
    )
    ledger = MemoryLedger(
        {q: record.storage_rounds(q) for q in range(len(record.born))}
    )
    return SampleOutcome(
        rounds=record.rounds,
        trace=trace,
        ledger=ledger,
        max_gap=record.max_gap,
        restarts=record.restarts,
    )


def mb_sample(
    segments: int, cfg: ProtocolConfig, rng: np.random.Generator
) -> SampleOutcome:
    """Sample one merging-based run over ``segments`` segments."""
    if segments < 1:
        raise ValueError(f"segments must be at least 1, got {segments}")
    record = backend.run_record(
        PROTOCOL_MB,
        segments,
        cfg.resolved_p_gen,
        cfg.p,
        cfg.growth_limit,
        cfg.patch_min_segments,
        cfg.max_rounds,
        rng,
    )
    return record_to_outcome(record)
