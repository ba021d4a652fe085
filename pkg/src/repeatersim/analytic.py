"""Exact expected waiting times for small chains; the sampler's ground truth.

Four segments is the smallest case where the merging-based protocol
differs from the swapping-based one, and the only case solved here: every
entanglement configuration the protocol can reach (half progress, patch
block progress, gap position) becomes a state of an absorbing Markov
chain whose absorption time is obtained from a linear solve.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "expected_max_geometric",
    "MarkovModel",
    "sb_expected_rounds",
    "mb_expected_rounds_4seg",
]

ABSORBED = "done"


def expected_max_geometric(p: float, n: int) -> float:
    """E[max of n iid geometric(p)] by inclusion-exclusion."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    q = 1.0 - p
    total = 0.0
    for j in range(1, n + 1):
        total += (-1.0) ** (j + 1) * math.comb(n, j) / (1.0 - q**j)
    return total


class MarkovModel:
    """Absorbing chain over explicit states with one-round transitions."""

    def __init__(self, transitions: dict, absorbing=ABSORBED):
        self.absorbing = absorbing
        self.states = sorted(transitions, key=repr)
        self.transitions = transitions
        for state, row in transitions.items():
            total = sum(row.values())
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"row for {state!r} sums to {total}")
            for dest in row:
                if dest != absorbing and dest not in transitions:
                    raise ValueError(f"transition {state!r} -> {dest!r} leaves the chain")

    def expected_steps(self, start) -> float:
        """Expected rounds to absorption from ``start``."""
        index = {s: i for i, s in enumerate(self.states)}
        n = len(self.states)
        q = np.zeros((n, n))
        for state, row in self.transitions.items():
            for dest, prob in row.items():
                if dest != self.absorbing:
                    q[index[state], index[dest]] = prob
        times = np.linalg.solve(np.eye(n) - q, np.ones(n))
        return float(times[index[start]])


def _half_step(a: float, p: float) -> dict[int, dict[int, float]]:
    """One-round transitions of a two-segment sub-chain.

    States count the live elementary links (0 or 1); 2 means the half is
    done.  Whenever both links are up the connecting merge fires in the
    same round: on failure both links are discarded.
    """
    return {
        0: {2: a * a * p, 1: 2 * a * (1 - a), 0: (1 - a) ** 2 + a * a * (1 - p)},
        1: {2: a * p, 0: a * (1 - p), 1: 1 - a},
        2: {2: 1.0},
    }


def _add(row: dict, dest, prob: float) -> None:
    if prob > 0.0:
        row[dest] = row.get(dest, 0.0) + prob


def _four_segment_chain(a: float, p: float, patching: bool) -> MarkovModel:
    """The full 4-segment chain; ``patching`` distinguishes MB-unlimited.

    Phase "A" states (i, j) track both halves; reaching (2, 2) fires the
    central connection in the same round.  With patching, its failure
    opens the central two-segment gap: "C" states track the patch block,
    whose completion fires both boundary merges at once; exactly one
    failure moves the gap against a scope edge ("D" states, single
    boundary merge), and any gap growth at four segments exceeds the
    scope-size threshold, so it restarts the protocol from (0, 0).
    """
    half = _half_step(a, p)
    transitions: dict = {}

    def central(row: dict, prob: float) -> None:
        _add(row, ABSORBED, prob * p)
        if patching:
            _add(row, ("C", 0), prob * (1 - p))
        else:
            _add(row, ("A", 0, 0), prob * (1 - p))

    for i in (0, 1, 2):
        for j in (0, 1, 2):
            if i == 2 and j == 2:
                continue
            row: dict = {}
            for di, pi in half[i].items():
                for dj, pj in half[j].items():
                    prob = pi * pj
                    if prob == 0.0:
                        continue
                    if di == 2 and dj == 2:
                        central(row, prob)
                    else:
                        _add(row, ("A", di, dj), prob)
            transitions[("A", i, j)] = row

    if patching:

        def two_sided(row: dict, prob: float) -> None:
            _add(row, ABSORBED, prob * p * p)
            _add(row, ("D", "left", 0), prob * p * (1 - p))
            _add(row, ("D", "right", 0), prob * p * (1 - p))
            _add(row, ("A", 0, 0), prob * (1 - p) ** 2)

        def one_sided(row: dict, prob: float) -> None:
            _add(row, ABSORBED, prob * p)
            _add(row, ("A", 0, 0), prob * (1 - p))

        for key, fire in [
            (("C",), two_sided),
            (("D", "left"), one_sided),
            (("D", "right"), one_sided),
        ]:
            # block states: 0 or 1 live links; completion fires the merges
            row0: dict = {}
            fire(row0, a * a * p)
            _add(row0, key + (1,), 2 * a * (1 - a))
            _add(row0, key + (0,), (1 - a) ** 2 + a * a * (1 - p))
            transitions[key + (0,)] = row0
            row1: dict = {}
            fire(row1, a * p)
            _add(row1, key + (0,), a * (1 - p))
            _add(row1, key + (1,), 1 - a)
            transitions[key + (1,)] = row1

    return MarkovModel(transitions)


def sb_expected_rounds(segments: int, p_gen: float, p: float) -> float:
    """Exact mean rounds of the swapping-based protocol for 2 or 4 segments."""
    if not 0.0 < p_gen <= 1.0 or not 0.0 < p <= 1.0:
        raise ValueError("probabilities must lie in (0, 1]")
    if segments == 2:
        a = p_gen
        transitions = {
            0: {ABSORBED: a * a * p, 1: 2 * a * (1 - a), 0: (1 - a) ** 2 + a * a * (1 - p)},
            1: {ABSORBED: a * p, 0: a * (1 - p), 1: 1 - a},
        }
        return MarkovModel(transitions).expected_steps(0)
    if segments == 4:
        return _four_segment_chain(p_gen, p, patching=False).expected_steps(("A", 0, 0))
    raise ValueError(f"only 2 or 4 segments are solved analytically, got {segments}")


def mb_expected_rounds_4seg(
    p_gen: float, p: float, growth_limit: int = 1, patch_mode: str = "limited"
) -> float:
    """Exact mean rounds of the merging-based protocol on four segments.

    With limited patching the four-segment scope never patches and the
    chain coincides with the swapping-based one.  The growth limit is
    accepted for interface symmetry but cannot matter here: growing the
    central gap would need a scope larger than ``2**(g_temp + 2) = 8``
    segments, so every growth restarts the protocol regardless of it.
    """
    if not 0.0 < p_gen <= 1.0 or not 0.0 < p <= 1.0:
        raise ValueError("probabilities must lie in (0, 1]")
    if growth_limit < 0:
        raise ValueError(f"growth limit must be nonnegative, got {growth_limit}")
    if patch_mode not in ("limited", "unlimited"):
        raise ValueError(f"patch_mode must be 'limited' or 'unlimited', got {patch_mode!r}")
    patching = patch_mode == "unlimited"
    return _four_segment_chain(p_gen, p, patching).expected_steps(("A", 0, 0))
