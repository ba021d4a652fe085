"""Reference Monte Carlo kernel for both repeater protocols.

This pure-Python implementation defines the normative sampling semantics;
the compiled kernel in ``_speedups.pyx`` mirrors it statement by
statement and must reproduce it bit for bit (both lanes consume one
uniform per geometric variate and one per probabilistic merge, in
identical order).

One round is one elementary generation attempt window.  Merging,
measurements, and classical signalling resolve instantaneously at the end
of a round.  Restarted sub-protocols are rolled back out of the recorded
trace: everything a restart discards is self-contained, interacts with no
surviving qubit, and can never influence the delivered pair, while the
rounds it consumed stay on the clock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import RoundCapExceeded

__all__ = [
    "OP_MERGE",
    "OP_ERASE",
    "OP_MZ",
    "OP_MY",
    "PROTOCOL_MB",
    "PROTOCOL_SB",
    "RunRecord",
    "ChainState",
    "Kernel",
    "run_protocol_record",
    "qber_from_record",
]

OP_MERGE = 0
OP_ERASE = 1
OP_MZ = 2
OP_MY = 3

PROTOCOL_MB = 0
PROTOCOL_SB = 1


@dataclass
class RunRecord:
    """Flat per-run arrays: trace, per-qubit storage rounds, and counters."""

    protocol: int
    segments: int
    rounds: int
    station: list[int]
    born: list[int]
    died: list[int]  # -1 while alive; outputs stay -1
    pair_a: list[int]
    pair_b: list[int]
    ev_op: list[int]
    ev_a: list[int]
    ev_b: list[int]
    ev_c: list[int]  # right neighbor for OP_MY, -1 otherwise
    out_left: int
    out_right: int
    max_gap: int
    restarts: int

    def storage_rounds(self, q: int) -> int:
        died = self.died[q]
        return (self.rounds if died < 0 else died) - self.born[q]


@dataclass
class ChainState:
    """Boundary clusters around the single open entanglement gap of a scope.

    ``left``/``right`` list the cluster qubits in station order; an empty
    list means the gap touches that edge of the scope.  The gap spans the
    stations between the inner boundary qubits.
    """

    base: int
    end: int
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    g_temp: int = 0


class Kernel:
    """One protocol sample in progress; use :func:`run_protocol_record`."""

    def __init__(
        self,
        protocol: int,
        segments: int,
        p_gen: float,
        p: float,
        growth_limit: int,
        patch_min: int,
        max_rounds: int,
        uniform,
    ):
        self.protocol = protocol
        self.segments = segments
        self.p_gen = p_gen
        self.p = p
        self.growth_limit = growth_limit
        self.patch_min = patch_min
        self.max_rounds = max_rounds
        self.uniform = uniform
        self.log_q = math.log1p(-p_gen) if p_gen < 1.0 else 0.0
        self.station: list[int] = []
        self.born: list[int] = []
        self.died: list[int] = []
        self.pair_a: list[int] = []
        self.pair_b: list[int] = []
        self.ev_op: list[int] = []
        self.ev_a: list[int] = []
        self.ev_b: list[int] = []
        self.ev_c: list[int] = []
        self.max_gap = 0
        self.restarts = 0

    # ---- randomness ------------------------------------------------------
    def geometric(self) -> int:
        if self.p_gen >= 1.0:
            return 1
        u = self.uniform()
        k = int(math.ceil(math.log1p(-u) / self.log_q))
        return k if k >= 1 else 1

    def merge_ok(self) -> bool:
        if self.p >= 1.0:
            return True
        return self.uniform() < self.p

    # ---- recording -------------------------------------------------------
    def _alloc(self, station: int, t: int) -> int:
        q = len(self.station)
        self.station.append(station)
        self.born.append(t)
        self.died.append(-1)
        return q

    def _new_pair(self, st_left: int, t: int) -> tuple[int, int]:
        a = self._alloc(st_left, t)
        b = self._alloc(st_left + 1, t)
        self.pair_a.append(a)
        self.pair_b.append(b)
        return a, b

    def _emit(self, op: int, a: int, b: int, c: int) -> None:
        self.ev_op.append(op)
        self.ev_a.append(a)
        self.ev_b.append(b)
        self.ev_c.append(c)

    def _merge(self, source: int, target: int, t: int) -> None:
        self._emit(OP_MERGE, source, target, -1)
        self.died[target] = t

    def _erase(self, a: int, b: int, t: int) -> None:
        self._emit(OP_ERASE, a, b, -1)
        self.died[a] = t
        self.died[b] = t

    def _mz(self, q: int, t: int) -> None:
        self._emit(OP_MZ, q, -1, -1)
        self.died[q] = t

    def _my(self, q: int, left: int, right: int, t: int) -> None:
        self._emit(OP_MY, q, left, right)
        self.died[q] = t

    def _discard(self, qubits, t: int) -> None:
        for q in qubits:
            self._mz(q, t)

    def _checkpoint(self) -> tuple[int, int, int]:
        return len(self.station), len(self.pair_a), len(self.ev_op)

    def _rollback(self, ck: tuple[int, int, int]) -> None:
        nq, npair, nev = ck
        del self.station[nq:], self.born[nq:], self.died[nq:]
        del self.pair_a[npair:], self.pair_b[npair:]
        del self.ev_op[nev:], self.ev_a[nev:], self.ev_b[nev:], self.ev_c[nev:]

    def _note_gap(self, size: int) -> None:
        if size > self.max_gap:
            self.max_gap = size

    def _check_cap(self, t: int) -> None:
        if t > self.max_rounds:
            raise RoundCapExceeded(
                f"sample exceeded {self.max_rounds} rounds; "
                f"p_gen={self.p_gen}, p={self.p}, segments={self.segments}"
            )

    # ---- the divide-and-conquer recursion --------------------------------
    def wt(self, s: int, base: int, t0: int) -> tuple[int, list[int]]:
        """Rounds and final cluster for a scope of s segments starting at t0."""
        while True:
            ck = self._checkpoint()
            t, cluster = self._attempt(s, base, t0)
            if cluster:
                return t, cluster
            self._rollback(ck)
            self.restarts += 1
            self._check_cap(t)
            t0 = t

    def _attempt(self, s: int, base: int, t0: int) -> tuple[int, list[int]]:
        if s == 1:
            t = t0 + self.geometric()
            a, b = self._new_pair(base, t)
            return t, [a, b]
        s_left = (s + 1) // 2
        s_right = s - s_left
        t_l, cl = self.wt(s_left, base, t0)
        t_r, cr = self.wt(s_right, base + s_left, t0)
        t = t_l if t_l >= t_r else t_r
        if self.protocol == PROTOCOL_SB:
            if self.merge_ok():
                source = cl[-1]
                self._merge(source, cr[0], t)
                self._my(source, cl[0], cr[1], t)
                return t, [cl[0], cr[1]]
            return t, []  # both pairs are discarded; caller rolls back
        if self.merge_ok():
            self._merge(cl[-1], cr[0], t)
            cl.extend(cr[1:])
            return t, cl
        self._erase(cl[-1], cr[0], t)
        cl.pop()
        cr.pop(0)
        if s <= self.patch_min:
            return t, []
        self._note_gap(2)
        state = ChainState(base=base, end=base + s, left=cl, right=cr, g_temp=0)
        return self._patch_loop(s, state, t)

    # ---- gap patching ----------------------------------------------------
    def _patch_loop(self, s: int, state: ChainState, t: int) -> tuple[int, list[int]]:
        while True:
            self._check_cap(t)
            if state.left and state.right:
                t, cluster, restart = self.patch_two_sided(s, state, t)
            else:
                t, cluster, restart = self.patch_one_sided(s, state, t)
            if cluster:
                return t, cluster
            if restart:
                return t, []

    def _block(self, state: ChainState, t: int) -> tuple[int, list[int], int, int]:
        gl = self.station[state.left[-1]] if state.left else state.base
        gr = self.station[state.right[0]] if state.right else state.end
        t, block = self.wt(gr - gl, gl, t)
        return t, block, gl, gr

    def patch_two_sided(self, s: int, state: ChainState, t: int):
        """One patch attempt on an interior gap: build a block, merge both ends.

        Returns ``(t, cluster, restart)``: a nonempty cluster closes the
        whole scope, ``restart`` signals that the growth limit or the
        scope-size threshold was hit; otherwise ``state`` now holds the
        moved or grown gap.
        """
        t, block, _, _ = self._block(state, t)
        cl, cr = state.left, state.right
        ok_left = self.merge_ok()
        ok_right = self.merge_ok()
        if ok_left and ok_right:
            self._merge(cl[-1], block[0], t)
            self._merge(block[-1], cr[0], t)
            cl.extend(block[1:])
            cl.extend(cr[1:])
            return t, cl, False
        if ok_left or ok_right:
            # moving gap: same size, shifted to the failed boundary
            if ok_left:
                self._merge(cl[-1], block[0], t)
                cl.extend(block[1:])
                self._erase(cl[-1], cr[0], t)
                cl.pop()
                cr.pop(0)
                if len(cr) < 2:
                    self._discard(cr, t)
                    del cr[:]
            else:
                self._merge(block[-1], cr[0], t)
                block.extend(cr[1:])
                state.right = block
                cr = block
                self._erase(cl[-1], cr[0], t)
                cl.pop()
                cr.pop(0)
                if len(cl) < 2:
                    self._discard(cl, t)
                    del cl[:]
            self._note_gap(2)
            return t, [], False
        # growing gap
        self._erase(cl[-1], block[0], t)
        self._erase(block[-1], cr[0], t)
        self._discard(block[1:-1], t)
        cl.pop()
        cr.pop(0)
        if len(cl) < 2:
            self._discard(cl, t)
            del cl[:]
        if len(cr) < 2:
            self._discard(cr, t)
            del cr[:]
        return t, [], not self._grow(s, state, t)

    def patch_one_sided(self, s: int, state: ChainState, t: int):
        """Patch attempt for a gap touching the scope edge: one interior merge."""
        t, block, _, _ = self._block(state, t)
        cl, cr = state.left, state.right
        if self.merge_ok():
            if cl:
                self._merge(cl[-1], block[0], t)
                cl.extend(block[1:])
                return t, cl, False
            self._merge(block[-1], cr[0], t)
            block.extend(cr[1:])
            return t, block, False
        if cl:
            self._erase(cl[-1], block[0], t)
            self._discard(block[1:], t)
            cl.pop()
            if len(cl) < 2:
                self._discard(cl, t)
                del cl[:]
        else:
            self._erase(block[-1], cr[0], t)
            self._discard(block[:-1], t)
            cr.pop(0)
            if len(cr) < 2:
                self._discard(cr, t)
                del cr[:]
        return t, [], not self._grow(s, state, t)

    def _grow(self, s: int, state: ChainState, t: int) -> bool:
        """Advance g_temp and widen the gap to 2**(g_temp+1); False => restart."""
        state.g_temp += 1
        if state.g_temp > self.growth_limit:
            return False
        if s <= (1 << (state.g_temp + 2)):
            return False
        target = 1 << (state.g_temp + 1)
        cl, cr = state.left, state.right
        gl = self.station[cl[-1]] if cl else state.base
        gr = self.station[cr[0]] if cr else state.end
        need = target - (gr - gl)
        if need > 0:
            cap_l = len(cl) - 1 if cl else 0
            cap_r = len(cr) - 1 if cr else 0
            trim_l = need // 2
            trim_r = need - trim_l
            if trim_l > cap_l:
                trim_r += trim_l - cap_l
                trim_l = cap_l
            if trim_r > cap_r:
                trim_l += trim_r - cap_r
                trim_r = cap_r
            if trim_l > cap_l:
                return False
            if cl and trim_l == cap_l:
                self._discard(cl, t)
                del cl[:]
            else:
                for _ in range(trim_l):
                    self._mz(cl.pop(), t)
            if cr and trim_r == cap_r:
                self._discard(cr, t)
                del cr[:]
            else:
                for _ in range(trim_r):
                    self._mz(cr.pop(0), t)
            if not cl and not cr:
                return False
        gl = self.station[cl[-1]] if cl else state.base
        gr = self.station[cr[0]] if cr else state.end
        self._note_gap(gr - gl)
        return True

    # ---- top level -------------------------------------------------------
    def run(self) -> RunRecord:
        t, cluster = self.wt(self.segments, 0, 0)
        if self.protocol == PROTOCOL_MB and len(cluster) > 2:
            # left-to-right sweep of the interior qubits of the final cluster
            left_end = cluster[0]
            n = len(cluster)
            for i in range(1, n - 1):
                self._my(cluster[i], left_end, cluster[i + 1], t)
        return RunRecord(
            protocol=self.protocol,
            segments=self.segments,
            rounds=t,
            station=self.station,
            born=self.born,
            died=self.died,
            pair_a=self.pair_a,
            pair_b=self.pair_b,
            ev_op=self.ev_op,
            ev_a=self.ev_a,
            ev_b=self.ev_b,
            ev_c=self.ev_c,
            out_left=cluster[0],
            out_right=cluster[-1],
            max_gap=self.max_gap,
            restarts=self.restarts,
        )


def run_protocol_record(
    protocol: int,
    segments: int,
    p_gen: float,
    p: float,
    growth_limit: int,
    patch_min: int,
    max_rounds: int,
    uniform,
) -> RunRecord:
    """Sample one protocol run; ``uniform`` yields doubles in [0, 1)."""
    kernel = Kernel(
        protocol, segments, p_gen, p, growth_limit, patch_min, max_rounds, uniform
    )
    return kernel.run()


def qber_from_record(
    record: RunRecord, dephasing_time: float, round_seconds: float
) -> tuple[float, float]:
    """(e_x, e_z) of the delivered pair; fused path replay over the record.

    Protocol traces keep every cluster a path, so the right neighbor of a
    Y-measured qubit recorded at measurement time is all the replay needs;
    the general-graph engine in :mod:`repeatersim.noise_engine` agrees with
    this on every protocol record (tested) and handles arbitrary traces.
    """
    n = len(record.born)
    m = [0] * n
    m[record.out_left] = 1
    m[record.out_right] = 2
    ev_op, ev_a, ev_b, ev_c = record.ev_op, record.ev_a, record.ev_b, record.ev_c
    for i in range(len(ev_op) - 1, -1, -1):
        op = ev_op[i]
        if op == OP_MERGE:
            m[ev_b[i]] = m[ev_a[i]]
        elif op == OP_MY:
            m[ev_a[i]] = m[ev_b[i]] ^ m[ev_c[i]]
        elif op == OP_ERASE:
            m[ev_a[i]] = 0
            m[ev_b[i]] = 0
        else:
            m[ev_a[i]] = 0
    p0, p1, p2, p3 = 1.0, 0.0, 0.0, 0.0
    rounds = record.rounds
    born, died = record.born, record.died
    for q in range(n):
        mask = m[q]
        if mask == 0:
            continue
        dq = died[q]
        stored = (rounds if dq < 0 else dq) - born[q]
        lam = 0.5 * (1.0 - math.exp(-(stored * round_seconds) / dephasing_time))
        if lam == 0.0:
            continue
        keep = 1.0 - lam
        # mask bit 0: Z on the left output (phase flip); bit 1: Z on the
        # right output, which the Bell-basis Hadamard turns into a bit flip.
        flip = ((mask & 1) << 1) | (mask >> 1)
        if flip == 1:
            p0, p1, p2, p3 = (
                keep * p0 + lam * p1,
                keep * p1 + lam * p0,
                keep * p2 + lam * p3,
                keep * p3 + lam * p2,
            )
        elif flip == 2:
            p0, p1, p2, p3 = (
                keep * p0 + lam * p2,
                keep * p1 + lam * p3,
                keep * p2 + lam * p0,
                keep * p3 + lam * p1,
            )
        else:
            p0, p1, p2, p3 = (
                keep * p0 + lam * p3,
                keep * p1 + lam * p2,
                keep * p2 + lam * p1,
                keep * p3 + lam * p0,
            )
    return p2 + p3, p1 + p3
