"""Self-checks: noise engine vs dense oracle, samplers vs Markov chains.

These are the paper-style verification procedures wired into the CLI
``validate`` command; the acceptance test suite runs them at full size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic, backend
from ._mc import PROTOCOL_MB, PROTOCOL_SB
from .config import ProtocolConfig
from .exact_oracle import QUBIT_CAP, bell_diagonal_of, simulate_trace_dense
from .noise_engine import output_state
from .protocol_mb import mb_sample
from .protocol_sb import sb_sample
from .traces import (
    MemoryLedger,
    MergeFailureErase,
    MergeSuccess,
    MeasureY,
    MeasureZ,
    OperationTrace,
)

__all__ = ["random_trace", "random_ledger", "ValidationReport", "run_validation"]

DEFAULT_GRID = (0.3, 0.5, 0.9)


def random_trace(rng: np.random.Generator, max_pairs: int = 5) -> OperationTrace:
    """A random valid trace ending in one end-to-end pair, at most 12 qubits.

    Builds a linear cluster by merging adjacent pairs in random order,
    optionally loses an end to a failed merge against a doomed side
    cluster, optionally grafts a stub pair onto an interior qubit (so the
    sigma_y rules see degree-3 vertices and local complementation), and
    finally measures the interior in random order.
    """
    budget = QUBIT_CAP
    n_main = int(rng.integers(2, max_pairs + 1))
    budget -= 2 * n_main
    use_junk = budget >= 2 and rng.random() < 0.5
    if use_junk:
        budget -= 2
    use_stub = budget >= 2 and n_main >= 2 and rng.random() < 0.5

    stations = []
    pairs = []
    events = []

    def new_pair(st):
        a = len(stations)
        stations.extend([st, st + 1])
        pairs.append((a, a + 1))
        return [a, a + 1]

    clusters = [new_pair(i) for i in range(n_main)]
    # adjacent merges in random order until one path remains
    while len(clusters) > 1:
        i = int(rng.integers(0, len(clusters) - 1))
        left, right = clusters[i], clusters[i + 1]
        events.append(MergeSuccess(left[-1], right[0]))
        clusters[i : i + 2] = [left + right[1:]]
    path = clusters[0]

    if use_junk:
        junk = new_pair(n_main)
        if len(path) > 2 and rng.random() < 0.7:
            # failed merge against the main path costs it its right end
            events.append(MergeFailureErase(path[-1], junk[0]))
            path = path[:-1]
            events.append(MeasureZ(junk[1]))
        else:
            events.append(MeasureY(junk[0]) if rng.random() < 0.5 else MeasureZ(junk[0]))
            events.append(MeasureZ(junk[1]))

    if use_stub:
        stub = new_pair(n_main + 2)
        anchor = path[int(rng.integers(1, len(path) - 1))] if len(path) > 2 else path[0]
        events.append(MergeSuccess(anchor, stub[0]))
        leaf = stub[1]
        if rng.random() < 0.5 and anchor not in (path[0], path[-1]):
            # Y-measuring the degree-3 anchor makes a triangle; the leaf
            # is then dropped in Z, which restores a path
            events.append(MeasureY(anchor))
            events.append(MeasureZ(leaf))
            path.remove(anchor)
        else:
            events.append(MeasureZ(leaf) if rng.random() < 0.5 else MeasureY(leaf))

    interior = path[1:-1]
    for q in rng.permutation(len(interior)):
        events.append(MeasureY(interior[int(q)]))
    trace = OperationTrace(
        stations=tuple(stations),
        pairs=tuple(pairs),
        events=tuple(events),
        outputs=(path[0], path[-1]),
    )
    trace.validate()
    return trace


def random_ledger(
    rng: np.random.Generator, trace: OperationTrace, dephasing_time: float
) -> MemoryLedger:
    """Storage times uniform in [0, 2T]."""
    return MemoryLedger(
        {q: 2.0 * dephasing_time * rng.random() for q in range(trace.num_qubits)}
    )


@dataclass
class ValidationReport:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str) -> None:
        self.checks.append((name, ok, detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def lines(self):
        for name, ok, detail in self.checks:
            yield f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"


def validate_noise_engine(
    report: ValidationReport,
    traces: int = 200,
    dephasing_time: float = 10.0,
    seed: int = 2024,
    tolerance: float = 1e-10,
) -> None:
    """Engine/oracle agreement on random traces and small protocol runs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(traces):
        trace = random_trace(rng)
        ledger = random_ledger(rng, trace, dephasing_time)
        engine = output_state(trace, ledger, dephasing_time)
        oracle = bell_diagonal_of(simulate_trace_dense(trace, ledger, dephasing_time))
        err = max(abs(a - b) for a, b in zip(engine.probs, oracle.probs))
        worst = max(worst, err)
    report.add(
        "noise engine vs dense oracle (random traces)",
        worst < tolerance,
        f"{traces} traces, max abs error {worst:.3e} (tolerance {tolerance:g})",
    )

    cfg = ProtocolConfig(
        k=2, dephasing_time=dephasing_time, p=0.5, segment_km=5.0,
        patch_min_segments=3, growth_limit=2,
    )
    worst = 0.0
    checked = 0
    index = 0
    while checked < 50:
        sampler, protocol = (mb_sample, "MB") if checked % 2 == 0 else (sb_sample, "SB")
        outcome = sampler(4, cfg, backend.sample_generator(seed, index))
        index += 1
        if outcome.trace.num_qubits > QUBIT_CAP:
            continue
        ledger = outcome.ledger.scaled(cfg.round_seconds)
        engine = output_state(outcome.trace, ledger, dephasing_time)
        oracle = bell_diagonal_of(
            simulate_trace_dense(outcome.trace, ledger, dephasing_time)
        )
        worst = max(worst, max(abs(a - b) for a, b in zip(engine.probs, oracle.probs)))
        checked += 1
    report.add(
        "noise engine vs dense oracle (protocol traces)",
        worst < tolerance,
        f"{checked} four-segment runs, max abs error {worst:.3e}",
    )


def _mean_se(moments) -> tuple[float, float]:
    mean = moments.sum_r / moments.n
    var = max((moments.sum_r2 - moments.n * mean * mean) / (moments.n - 1), 0.0)
    return mean, math.sqrt(var / moments.n)


def validate_waiting_times(
    report: ValidationReport,
    samples: int = 200_000,
    grid=DEFAULT_GRID,
    seed: int = 515,
    sigmas: float = 3.0,
) -> None:
    """Sampler means vs Markov-chain expectations on the probability grid."""
    worst = 0.0
    worst_label = ""
    ok = True
    for p_gen in grid:
        for p in grid:
            cases = [
                ("sb s=2", PROTOCOL_SB, 2, 4, analytic.sb_expected_rounds(2, p_gen, p)),
                ("sb s=4", PROTOCOL_SB, 4, 4, analytic.sb_expected_rounds(4, p_gen, p)),
                ("mb4 limited", PROTOCOL_MB, 4, 4,
                 analytic.mb_expected_rounds_4seg(p_gen, p, 1, "limited")),
                ("mb4 unlimited", PROTOCOL_MB, 4, 3,
                 analytic.mb_expected_rounds_4seg(p_gen, p, 1, "unlimited")),
            ]
            for label, protocol, segments, patch_min, expected in cases:
                moments = backend.sample_moments(
                    protocol, segments, p_gen, p, 1, patch_min, 10**9,
                    10.0, 5e-5, seed, 0, samples,
                )
                mean, se = _mean_se(moments)
                deviation = abs(mean - expected) / se
                if deviation > worst:
                    worst = deviation
                    worst_label = f"{label} p_gen={p_gen} p={p}"
                if deviation > sigmas:
                    ok = False
    report.add(
        "waiting times vs Markov chains",
        ok,
        f"{len(grid) ** 2 * 4} cells at {samples} samples, "
        f"worst {worst:.2f} SE ({worst_label}, limit {sigmas:g})",
    )


def validate_kernel_parity(report: ValidationReport, seed: int = 99) -> None:
    """Compiled and pure-Python kernels must agree bit for bit."""
    if backend.backend_name() != "cython":
        report.add("kernel parity", True, "pure-Python lane active, nothing to compare")
        return
    from . import _mc, _speedups

    mismatches = 0
    cases = [(2, 0.7, 0.4, 1, 4), (8, 0.35, 0.5, 2, 4), (16, 0.5, 0.5, 1, 4)]
    for protocol in (PROTOCOL_MB, PROTOCOL_SB):
        for s, p_gen, p, g_l, patch_min in cases:
            for index in range(100):
                ref = _mc.run_protocol_record(
                    protocol, s, p_gen, p, g_l, patch_min, 10**9,
                    backend.sample_generator(seed, index).random,
                )
                fast = _speedups.run_record(
                    protocol, s, p_gen, p, g_l, patch_min, 10**9,
                    backend.sample_generator(seed, index).bit_generator,
                )
                if ref != fast:
                    mismatches += 1
    report.add(
        "kernel parity",
        mismatches == 0,
        f"600 records compared, {mismatches} mismatches",
    )


def run_validation(
    samples: int = 200_000, traces: int = 200, seed: int = 2024
) -> ValidationReport:
    report = ValidationReport()
    validate_noise_engine(report, traces=traces, seed=seed)
    validate_waiting_times(report, samples=samples, seed=seed + 1)
    validate_kernel_parity(report, seed=seed + 2)
    return report
