"""Operation traces: the replayable record of one protocol run.

A trace lists the qubits (with their station positions), the elementary
Bell pairs they were created in, the ordered entangling/measurement
events, and the two end-to-end output qubits.  Traces are consumed by the
noise engine and by the dense verification simulator, and can be dumped
to / loaded from a documented JSON shape.

Event semantics (graph-state picture; initial pairs are edge graph states
``(|0+> + |1->)/sqrt(2)``):

- ``MergeSuccess(source, target)``: CNOT from source onto target followed
  by a Z measurement of the target.  The source inherits the target's
  neighbors; the target is consumed.
- ``MergeFailureErase(a, b)``: both qubits of a failed merge are measured
  out in the Z basis (vertex deletion).
- ``MeasureZ(q)``: vertex deletion.
- ``MeasureY(q)``: local complementation on q's neighborhood, then vertex
  deletion.
- ``Hadamard(q)``: basis flip on an output qubit; only valid after all
  other events (used for debugging basis conventions, never emitted by
  the protocol samplers).

Measurement outcomes are never sampled: the byproduct corrections that
make every outcome branch collapse to the same canonical graph state are
considered part of each event.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

from .errors import TraceError

__all__ = [
    "MergeSuccess",
    "MergeFailureErase",
    "MeasureZ",
    "MeasureY",
    "Hadamard",
    "Event",
    "OperationTrace",
    "MemoryLedger",
    "GraphReplay",
    "trace_to_json",
    "trace_from_json",
]


@dataclass(frozen=True)
class MergeSuccess:
    source: int
    target: int


@dataclass(frozen=True)
class MergeFailureErase:
    a: int
    b: int


@dataclass(frozen=True)
class MeasureZ:
    qubit: int


@dataclass(frozen=True)
class MeasureY:
    qubit: int


@dataclass(frozen=True)
class Hadamard:
    qubit: int


Event = Union[MergeSuccess, MergeFailureErase, MeasureZ, MeasureY, Hadamard]

_OP_NAMES = {
    MergeSuccess: "merge_success",
    MergeFailureErase: "merge_failure_erase",
    MeasureZ: "measure_z",
    MeasureY: "measure_y",
    Hadamard: "hadamard",
}


@dataclass(frozen=True)
class OperationTrace:
    """Ordered record of all entangling and measurement events of one run.

    Parameters
    ----------
    stations : tuple of int
        Station index of qubit ``i`` (qubit ids are 0..n-1).
    pairs : tuple of (int, int)
        Initial Bell pairs, each qubit appearing in exactly one pair.
    events : tuple of Event
        Chronological event list.
    outputs : (int, int)
        The two end qubits delivered by the protocol, left then right.
    """

    stations: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]
    events: tuple[Event, ...]
    outputs: tuple[int, int]

    @property
    def num_qubits(self) -> int:
        return len(self.stations)

    def validate(self) -> None:
        """Check the structural invariants; raise TraceError on violation."""
        n = self.num_qubits
        seen = [0] * n
        for a, b in self.pairs:
            for q in (a, b):
                if not 0 <= q < n:
                    raise TraceError(f"pair qubit {q} out of range")
                seen[q] += 1
        if any(c != 1 for c in seen):
            raise TraceError("every qubit must appear in exactly one initial pair")
        alive = [True] * n
        hadamard_seen = False

        def consume(q: int) -> None:
            if not 0 <= q < n:
                raise TraceError(f"event qubit {q} out of range")
            if not alive[q]:
                raise TraceError(f"qubit {q} consumed twice")
            alive[q] = False

        for ev in self.events:
            if isinstance(ev, Hadamard):
                if not alive[ev.qubit]:
                    raise TraceError("Hadamard on a consumed qubit")
                hadamard_seen = True
                continue
            if hadamard_seen:
                raise TraceError("Hadamard events must come after all other events")
            if isinstance(ev, MergeSuccess):
                if not alive[ev.source]:
                    raise TraceError(f"merge source {ev.source} not alive")
                consume(ev.target)
            elif isinstance(ev, MergeFailureErase):
                consume(ev.a)
                consume(ev.b)
            elif isinstance(ev, (MeasureZ, MeasureY)):
                consume(ev.qubit)
            else:
                raise TraceError(f"unknown event {ev!r}")
        left, right = self.outputs
        survivors = {q for q in range(n) if alive[q]}
        if survivors != {left, right} or left == right:
            raise TraceError(
                f"outputs {self.outputs} must be exactly the surviving qubits {sorted(survivors)}"
            )


class MemoryLedger(dict):
    """Per-qubit accumulated storage duration.

    Protocol samplers fill it with integer round counts; ``scaled`` turns
    rounds into seconds (one round lasts ``2 L0 / nu``) for the noise
    engine, which expects the same time unit as the dephasing time T.
    """

    def scaled(self, round_seconds: float) -> "MemoryLedger":
        return MemoryLedger({q: t * round_seconds for q, t in self.items()})

    def covers(self, trace: OperationTrace) -> bool:
        return all(q in self for q in range(trace.num_qubits))


class GraphReplay:
    """Tracks the graph-state adjacency while a trace is replayed.

    Used by both the noise engine (to know neighborhoods at measurement
    time) and the dense oracle (to build the byproduct corrections).
    """

    def __init__(self, trace: OperationTrace):
        self.adj: dict[int, set[int]] = {q: set() for q in range(trace.num_qubits)}
        for a, b in trace.pairs:
            self.adj[a].add(b)
            self.adj[b].add(a)

    def neighbors(self, q: int) -> set[int]:
        return set(self.adj[q])

    def _delete(self, q: int) -> None:
        for w in self.adj[q]:
            self.adj[w].discard(q)
        del self.adj[q]

    def same_component(self, a: int, b: int) -> bool:
        stack, visited = [a], {a}
        while stack:
            v = stack.pop()
            if v == b:
                return True
            for w in self.adj[v]:
                if w not in visited:
                    visited.add(w)
                    stack.append(w)
        return False

    def merge_success(self, source: int, target: int) -> None:
        # The neighbor-inheritance update below assumes the clusters are
        # distinct; merging within one component is not a repeater operation.
        if self.same_component(source, target):
            raise TraceError(
                f"merge of {source} and {target} within one entangled cluster"
            )
        for w in self.adj[target]:
            self.adj[w].discard(target)
            self.adj[w].add(source)
            self.adj[source].add(w)
        del self.adj[target]

    def measure_z(self, q: int) -> None:
        self._delete(q)

    def measure_y(self, q: int) -> None:
        nbrs = sorted(self.adj[q])
        for i, u in enumerate(nbrs):
            for w in nbrs[i + 1 :]:
                if w in self.adj[u]:
                    self.adj[u].discard(w)
                    self.adj[w].discard(u)
                else:
                    self.adj[u].add(w)
                    self.adj[w].add(u)
        self._delete(q)

    def apply(self, ev: Event) -> None:
        if isinstance(ev, MergeSuccess):
            self.merge_success(ev.source, ev.target)
        elif isinstance(ev, MergeFailureErase):
            self.measure_z(ev.a)
            self.measure_z(ev.b)
        elif isinstance(ev, MeasureZ):
            self.measure_z(ev.qubit)
        elif isinstance(ev, MeasureY):
            self.measure_y(ev.qubit)
        elif isinstance(ev, Hadamard):
            pass
        else:
            raise TraceError(f"unknown event {ev!r}")


def _event_to_dict(ev: Event) -> dict:
    d = {"op": _OP_NAMES[type(ev)]}
    if isinstance(ev, MergeSuccess):
        d.update(source=ev.source, target=ev.target)
    elif isinstance(ev, MergeFailureErase):
        d.update(a=ev.a, b=ev.b)
    else:
        d.update(qubit=ev.qubit)
    return d


def _event_from_dict(d: Mapping) -> Event:
    op = d["op"]
    if op == "merge_success":
        return MergeSuccess(int(d["source"]), int(d["target"]))
    if op == "merge_failure_erase":
        return MergeFailureErase(int(d["a"]), int(d["b"]))
    if op == "measure_z":
        return MeasureZ(int(d["qubit"]))
    if op == "measure_y":
        return MeasureY(int(d["qubit"]))
    if op == "hadamard":
        return Hadamard(int(d["qubit"]))
    raise TraceError(f"unknown op name {op!r}")


def trace_to_json(trace: OperationTrace, ledger: MemoryLedger | None = None) -> str:
    """Serialize a trace (and optionally its ledger) to the documented JSON shape."""
    doc = {
        "qubits": [{"id": q, "station": s} for q, s in enumerate(trace.stations)],
        "initial_pairs": [list(p) for p in trace.pairs],
        "events": [_event_to_dict(ev) for ev in trace.events],
        "outputs": list(trace.outputs),
    }
    if ledger is not None:
        doc["storage_rounds"] = {str(q): t for q, t in sorted(ledger.items())}
    return json.dumps(doc, indent=2)


def trace_from_json(text: str) -> tuple[OperationTrace, MemoryLedger | None]:
    doc = json.loads(text)
    qubits = sorted(doc["qubits"], key=lambda d: d["id"])
    if [q["id"] for q in qubits] != list(range(len(qubits))):
        raise TraceError("qubit ids must be 0..n-1")
    trace = OperationTrace(
        stations=tuple(int(q["station"]) for q in qubits),
        pairs=tuple((int(a), int(b)) for a, b in doc["initial_pairs"]),
        events=tuple(_event_from_dict(d) for d in doc["events"]),
        outputs=(int(doc["outputs"][0]), int(doc["outputs"][1])),
    )
    ledger = None
    if "storage_rounds" in doc:
        ledger = MemoryLedger({int(q): t for q, t in doc["storage_rounds"].items()})
    return trace, ledger
