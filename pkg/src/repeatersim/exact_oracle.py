"""Dense density-matrix replay of small traces; ground truth for the noise engine.

States are kept as rank-2w tensors (ket axes then bra axes) with qubits
introduced lazily and traced out as soon as they are measured, so the
live width stays small even when a trace has the full 12 allowed qubits.
Measurement events average over both outcomes with the byproduct
corrections applied, matching the deterministic contract of
:func:`repeatersim.noise_engine.output_state`.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import TraceError
from .noise_engine import BellDiagonalState
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

__all__ = ["simulate_trace_dense", "bell_diagonal_of", "check_density_matrix", "QUBIT_CAP"]

QUBIT_CAP = 12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_Z = np.diag([1.0, -1.0]).astype(complex)
_S = np.diag([1.0, 1.0j])
_S_DAG = _S.conj().T
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
).reshape(2, 2, 2, 2)
# Edge graph state (|00> + |01> + |10> - |11>) / 2, i.e. CZ |++>.
_PAIR_KET = np.array([1, 1, 1, -1], dtype=complex) / 2.0
_KET_Y = {
    +1: np.array([1, 1j], dtype=complex) / math.sqrt(2),
    -1: np.array([1, -1j], dtype=complex) / math.sqrt(2),
}


class _DenseReplay:
    def __init__(self):
        self.rho = np.ones((), dtype=complex)  # scalar 1: empty register
        self.order: list[int] = []

    @property
    def width(self) -> int:
        return len(self.order)

    def _axis(self, q: int) -> int:
        return self.order.index(q)

    def introduce_pair(self, a: int, b: int, lam_a: float, lam_b: float) -> None:
        w = self.width
        pair_rho = np.multiply.outer(_PAIR_KET, _PAIR_KET.conj()).reshape(2, 2, 2, 2)
        self.rho = np.multiply.outer(self.rho, pair_rho)
        # new axes sit at the end as [k1, k2, b1, b2]; slot kets after old kets
        self.rho = np.moveaxis(self.rho, [2 * w, 2 * w + 1], [w, w + 1])
        self.order += [a, b]
        self.dephase(a, lam_a)
        self.dephase(b, lam_b)

    def apply_1q(self, op: np.ndarray, q: int) -> None:
        i, w = self._axis(q), self.width
        rho = np.tensordot(op, self.rho, axes=([1], [i]))
        rho = np.moveaxis(rho, 0, i)
        rho = np.tensordot(rho, op.conj().T, axes=([w + i], [0]))
        self.rho = np.moveaxis(rho, -1, w + i)

    def apply_cnot(self, control: int, target: int) -> None:
        i, j, w = self._axis(control), self._axis(target), self.width
        rho = np.tensordot(_CNOT, self.rho, axes=([2, 3], [i, j]))
        rho = np.moveaxis(rho, [0, 1], [i, j])
        rho = np.tensordot(rho, _CNOT.conj(), axes=([w + i, w + j], [2, 3]))
        self.rho = np.moveaxis(rho, [-2, -1], [w + i, w + j])

    def dephase(self, q: int, lam: float) -> None:
        if lam == 0.0:
            return
        before = self.rho
        self.apply_1q(_Z, q)
        self.rho = (1.0 - lam) * before + lam * self.rho

    def _project_out(self, q: int, ket: np.ndarray) -> np.ndarray:
        """Unnormalized branch <ket| rho |ket> with qubit q removed."""
        i, w = self._axis(q), self.width
        rho = np.tensordot(ket.conj(), self.rho, axes=([0], [i]))
        return np.tensordot(rho, ket, axes=([(w - 1) + i], [0]))

    def _finish_measurement(self, q: int, branches: list[np.ndarray]) -> None:
        self.order.remove(q)
        self.rho = branches[0]
        for extra in branches[1:]:
            self.rho = self.rho + extra

    def measure_z(self, q: int, neighbors: set[int]) -> None:
        ket0 = np.array([1, 0], dtype=complex)
        ket1 = np.array([0, 1], dtype=complex)
        branch0 = self._project_out(q, ket0)
        branch1 = self._project_out(q, ket1)
        self._finish_measurement(q, [branch0])
        keep = self.rho
        # outcome -1 byproduct: Z on every former neighbor
        self.rho = branch1
        for w in neighbors:
            self.apply_1q(_Z, w)
        self.rho = keep + self.rho

    def measure_y(self, q: int, neighbors: set[int]) -> None:
        branch_p = self._project_out(q, _KET_Y[+1])
        branch_m = self._project_out(q, _KET_Y[-1])
        self._finish_measurement(q, [np.zeros_like(branch_p)])
        acc = np.zeros_like(branch_p)
        for branch, corr in ((branch_p, _S_DAG), (branch_m, _S)):
            self.rho = branch
            for w in neighbors:
                self.apply_1q(corr, w)
            acc = acc + self.rho
        self.rho = acc


def simulate_trace_dense(
    trace: OperationTrace, ledger: MemoryLedger, dephasing_time: float
) -> np.ndarray:
    """Exact 4x4 density matrix of the delivered pair, in the Bell-ready basis.

    Prepares each initial pair as an edge graph state, applies the
    per-qubit dephasing channels from the ledger, replays every event
    (outcome-averaged, corrections applied), applies the final Hadamard
    to the right output, and returns the output pair as (left, right).
    """
    trace.validate()
    if trace.num_qubits > QUBIT_CAP:
        raise TraceError(
            f"dense oracle is capped at {QUBIT_CAP} qubits, trace has {trace.num_qubits}"
        )
    if not ledger.covers(trace):
        raise TraceError("ledger does not cover every qubit of the trace")

    lam = {
        q: 0.5 * (1.0 - math.exp(-ledger[q] / dephasing_time))
        for q in range(trace.num_qubits)
    }
    pair_of = {}
    for a, b in trace.pairs:
        pair_of[a] = (a, b)
        pair_of[b] = (a, b)

    sim = _DenseReplay()
    graph = GraphReplay(trace)
    introduced: set[int] = set()

    def ensure(*qubits: int) -> None:
        for q in qubits:
            if q not in introduced:
                a, b = pair_of[q]
                sim.introduce_pair(a, b, lam[a], lam[b])
                introduced.update((a, b))

    for ev in trace.events:
        if isinstance(ev, MergeSuccess):
            ensure(ev.source, ev.target)
            former = graph.neighbors(ev.target)
            sim.apply_cnot(ev.source, ev.target)
            sim.measure_z(ev.target, former)
        elif isinstance(ev, MergeFailureErase):
            ensure(ev.a, ev.b)
            sim.measure_z(ev.a, graph.neighbors(ev.a))
            graph.measure_z(ev.a)
            sim.measure_z(ev.b, graph.neighbors(ev.b))
            graph.measure_z(ev.b)
            continue
        elif isinstance(ev, MeasureZ):
            ensure(ev.qubit)
            sim.measure_z(ev.qubit, graph.neighbors(ev.qubit))
        elif isinstance(ev, MeasureY):
            ensure(ev.qubit)
            sim.measure_y(ev.qubit, graph.neighbors(ev.qubit))
        elif isinstance(ev, Hadamard):
            ensure(ev.qubit)
            sim.apply_1q(_H, ev.qubit)
        graph.apply(ev)

    ensure(*trace.outputs)
    left, right = trace.outputs
    sim.apply_1q(_H, right)
    if sim.order == [right, left]:
        sim.rho = np.moveaxis(sim.rho, [0, 1, 2, 3], [1, 0, 3, 2])
        sim.order = [left, right]
    assert sim.order == [left, right]
    rho = sim.rho.reshape(4, 4)
    return rho / np.trace(rho).real


def check_density_matrix(rho: np.ndarray) -> None:
    """Assert CPTP sanity: unit trace, Hermitian, positive semidefinite."""
    if abs(np.trace(rho) - 1.0) > 1e-12:
        raise ValueError(f"trace is {np.trace(rho)}, expected 1")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise ValueError("matrix is not Hermitian")
    eigenvalues = np.linalg.eigvalsh(rho)
    if eigenvalues.min() < -1e-10:
        raise ValueError(f"matrix has negative eigenvalue {eigenvalues.min()}")


_BELL_VECTORS = (
    np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2),   # Phi+
    np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2),   # Psi+
    np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2),  # Phi-
    np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2),  # Psi-
)


def bell_diagonal_of(rho: np.ndarray, residue_tol: float = 1e-9) -> BellDiagonalState:
    """Project a 4x4 density matrix onto the Bell basis.

    Raises if the off-diagonal residue exceeds ``residue_tol``: dephasing
    traces must come out exactly Bell diagonal, so residue signals a bug.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {rho.shape}")
    probs = [float(np.real(v.conj() @ rho @ v)) for v in _BELL_VECTORS]
    diagonal = sum(p * np.outer(v, v.conj()) for p, v in zip(probs, _BELL_VECTORS))
    residue = float(np.max(np.abs(rho - diagonal)))
    if residue > residue_tol:
        raise ValueError(f"matrix is not Bell diagonal (residue {residue:.3e})")
    probs = [min(max(p, 0.0), 1.0) for p in probs]
    total = sum(probs)
    return BellDiagonalState(tuple(p / total for p in probs))
