"""Dephasing-noise propagation through an operation trace.

Each qubit accumulates storage time in memory and suffers a sigma_z flip
with probability ``lambda(t) = (1 - exp(-t/T)) / 2``.  Because every
operation in a trace is Clifford and the corrections of the measurement
events are fixed, a single sigma_z error inserted on any qubit at the
start of the replay commutes through to a definite Pauli pattern on the
two output qubits (or is absorbed).  The final two-qubit state is then
the XOR-convolution of the independent per-qubit flip probabilities over
those patterns, expressed in the Bell basis after the final Hadamard.

Letter-level transport rules (phases discarded, graph `G` tracked by
:class:`~repeatersim.traces.GraphReplay`):

- CNOT(s -> t): Z_t -> Z_s Z_t, Z_s -> Z_s.
- Z measurement of q: a pattern anticommuting with Z_q picks up
  Z on N(q); the letter on q is dropped.
- Y measurement of q: a pattern anticommuting with Y_q picks up Z on
  N(q); X and Y letters on N(q) swap; the letter on q is dropped.

A sigma_z insertion can therefore never leave the {I, Z} letter set on
live qubits, which is what makes the four-component convolution exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import TraceError
from .traces import (
    GraphReplay,
    Hadamard,
    MemoryLedger,
    MergeFailureErase,
    MergeSuccess,
    MeasureY,
    MeasureZ,
    OperationTrace,
)

__all__ = [
    "dephasing_lambda",
    "DephasingChannel",
    "compose_dephasing",
    "PauliString",
    "propagate_z",
    "output_state",
    "BellDiagonalState",
    "qber",
]


def dephasing_lambda(t: float, dephasing_time: float) -> float:
    """Flip probability of a memory stored for ``t`` with dephasing time T.

    ``lambda(t) = (1 - exp(-t/T)) / 2``; monotone in t and bounded by 1/2.
    """
    if t < 0:
        raise ValueError(f"storage time must be nonnegative, got {t}")
    if dephasing_time <= 0:
        raise ValueError(f"dephasing time must be positive, got {dephasing_time}")
    return 0.5 * (1.0 - math.exp(-t / dephasing_time))


@dataclass(frozen=True)
class DephasingChannel:
    """Mixture of identity and sigma_z with weight ``lam`` in [0, 1/2]."""

    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 0.5:
            raise ValueError(f"dephasing weight must lie in [0, 1/2], got {self.lam}")

    @classmethod
    def from_time(cls, t: float, dephasing_time: float) -> "DephasingChannel":
        return cls(dephasing_lambda(t, dephasing_time))


def compose_dephasing(a: DephasingChannel, b: DephasingChannel) -> DephasingChannel:
    """Sequential composition; satisfies lambda(t1) * lambda(t2) = lambda(t1+t2)."""
    return DephasingChannel(a.lam + b.lam - 2.0 * a.lam * b.lam)


_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


class PauliString:
    """Pauli letter pattern over named qubits, with phases discarded."""

    def __init__(self, letters: dict[int, str] | None = None):
        self._bits: dict[int, tuple[int, int]] = {}
        for q, letter in (letters or {}).items():
            x = 1 if letter in ("X", "Y") else 0
            z = 1 if letter in ("Z", "Y") else 0
            if letter not in "IXYZ":
                raise ValueError(f"unknown Pauli letter {letter!r}")
            if x or z:
                self._bits[q] = (x, z)

    @classmethod
    def from_bits(cls, bits: dict[int, tuple[int, int]]) -> "PauliString":
        p = cls()
        p._bits = {q: (x, z) for q, (x, z) in bits.items() if x or z}
        return p

    def letter(self, q: int) -> str:
        return _LETTERS[self._bits.get(q, (0, 0))]

    @property
    def is_identity(self) -> bool:
        return not self._bits

    def __mul__(self, other: "PauliString") -> "PauliString":
        bits = dict(self._bits)
        for q, (x, z) in other._bits.items():
            x0, z0 = bits.get(q, (0, 0))
            bits[q] = (x0 ^ x, z0 ^ z)
        return PauliString.from_bits(bits)

    def __eq__(self, other):
        return isinstance(other, PauliString) and self._bits == other._bits

    def __hash__(self):
        return hash(frozenset(self._bits.items()))

    def __repr__(self):
        inner = ", ".join(f"{q}: {self.letter(q)}" for q in sorted(self._bits))
        return f"PauliString({{{inner}}})"


def _replay_patterns(trace: OperationTrace) -> tuple[list[int], tuple[int, int]]:
    """Per-qubit output pattern of an initial sigma_z error, plus H parities.

    Returns a list ``m`` with ``m[q]`` a 2-bit mask (bit 0: Z on the left
    output, bit 1: Z on the right output) describing where a sigma_z on
    qubit q ends up just before any trailing Hadamards, and the Hadamard
    parity applied by the trace to each output.
    """
    trace.validate()
    graph = GraphReplay(trace)
    y_neighbors: list[list[int]] = []
    h_parity = {trace.outputs[0]: 0, trace.outputs[1]: 0}
    for ev in trace.events:
        if isinstance(ev, MeasureY):
            y_neighbors.append(sorted(graph.neighbors(ev.qubit)))
        elif isinstance(ev, Hadamard):
            if ev.qubit not in h_parity:
                raise TraceError("Hadamard events are only supported on outputs")
            h_parity[ev.qubit] ^= 1
        graph.apply(ev)

    m = [0] * trace.num_qubits
    m[trace.outputs[0]] = 1
    m[trace.outputs[1]] = 2
    y_iter = len(y_neighbors)
    for ev in reversed(trace.events):
        if isinstance(ev, MergeSuccess):
            m[ev.target] = m[ev.source]
        elif isinstance(ev, MergeFailureErase):
            m[ev.a] = 0
            m[ev.b] = 0
        elif isinstance(ev, MeasureZ):
            m[ev.qubit] = 0
        elif isinstance(ev, MeasureY):
            y_iter -= 1
            acc = 0
            for w in y_neighbors[y_iter]:
                acc ^= m[w]
            m[ev.qubit] = acc
    return m, (h_parity[trace.outputs[0]], h_parity[trace.outputs[1]])


def propagate_z(trace: OperationTrace, q: int) -> PauliString | None:
    """Output-qubit pattern equivalent to a sigma_z error inserted on q.

    Returns ``None`` when the error is absorbed (no effect on the
    delivered pair), e.g. on qubits consumed by a Z measurement.
    Byproduct corrections are folded in, so the result is
    outcome-independent.
    """
    if not 0 <= q < trace.num_qubits:
        raise TraceError(f"unknown qubit id {q}")
    patterns, h_parity = _replay_patterns(trace)
    mask = patterns[q]
    if mask == 0:
        return None
    bits = {}
    for bit, (out, flips) in enumerate(zip(trace.outputs, h_parity)):
        if mask >> bit & 1:
            bits[out] = (flips & 1, flips ^ 1)  # H swaps the (x, z) bits
    return PauliString.from_bits(bits)


@dataclass(frozen=True)
class BellDiagonalState:
    """Bell-basis diagonal of the delivered pair, after the final Hadamard.

    ``probs`` is ordered (Phi+, Psi+, Phi-, Psi-), i.e. component index
    ``x_flip + 2 * z_flip`` where ``x_flip`` and ``z_flip`` describe the
    effective one-sided Pauli error on ``(|00> + |11>)/sqrt(2)``.
    """

    probs: tuple[float, float, float, float]

    def __post_init__(self):
        if len(self.probs) != 4:
            raise ValueError("need exactly four Bell components")
        if any(p < -1e-12 for p in self.probs):
            raise ValueError(f"negative Bell component in {self.probs}")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"Bell components must sum to 1, got {sum(self.probs)}")

    @property
    def fidelity(self) -> float:
        return self.probs[0]


def qber(state: BellDiagonalState) -> tuple[float, float]:
    """(e_x, e_z) error rates of the delivered pair in the standard basis."""
    p0, p1, p2, p3 = state.probs
    return p2 + p3, p1 + p3


def output_state(
    trace: OperationTrace, ledger: MemoryLedger, dephasing_time: float
) -> BellDiagonalState:
    """Bell-diagonal state of the delivered pair under the recorded storage times.

    Equivalent to preparing every initial pair as an edge graph state,
    dephasing each qubit for its ledger duration, replaying all events
    with outcome-averaged corrections, and applying the Bell-basis
    Hadamard to the right output -- but computed by convolving the
    per-qubit flip probabilities over their propagated patterns.

    The ledger must use the same time unit as ``dephasing_time``.
    """
    if not ledger.covers(trace):
        missing = [q for q in range(trace.num_qubits) if q not in ledger]
        raise TraceError(f"ledger is missing qubits {missing}")
    patterns, h_parity = _replay_patterns(trace)
    # The Bell-basis Hadamard acts on the right output, on top of any
    # trace-level Hadamard; an odd total swaps that side's (x, z) bits.
    swap_left = h_parity[0] & 1
    swap_right = (h_parity[1] + 1) & 1

    probs = [1.0, 0.0, 0.0, 0.0]
    for q in range(trace.num_qubits):
        mask = patterns[q]
        if mask == 0:
            continue
        lam = dephasing_lambda(ledger[q], dephasing_time)
        if lam == 0.0:
            continue
        zl = mask & 1
        zr = mask >> 1 & 1
        xl, zl = (zl, 0) if swap_left else (0, zl)
        xr, zr = (zr, 0) if swap_right else (0, zr)
        flip = (xl ^ xr) + 2 * (zl ^ zr)
        probs = [
            (1.0 - lam) * probs[i] + lam * probs[i ^ flip] for i in range(4)
        ]
    return BellDiagonalState(tuple(probs))
