# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernel.

Mirrors :mod:`repeatersim._mc` statement by statement: identical uniform
draw order, identical arithmetic, identical event recording.  The parity
tests compare full run records between the two lanes bit for bit.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport ceil, exp, log1p
from libcpp.vector cimport vector

from numpy.random cimport bitgen_t

import numpy as np

from ._mc import RunRecord
from .errors import RoundCapExceeded

ctypedef long long i64

cdef enum:
    OP_MERGE = 0
    OP_ERASE = 1
    OP_MZ = 2
    OP_MY = 3
    PROTOCOL_MB = 0
    PROTOCOL_SB = 1


cdef class _CyKernel:
    cdef bitgen_t *rng
    cdef object _keep_alive
    cdef int protocol
    cdef i64 segments, growth_limit, patch_min, max_rounds, max_gap, restarts
    cdef double p_gen, p, log_q
    cdef vector[i64] station, born, died, pair_a, pair_b, ev_op, ev_a, ev_b, ev_c

    def __init__(self, int protocol, i64 segments, double p_gen, double p,
                 i64 growth_limit, i64 patch_min, i64 max_rounds):
        self.protocol = protocol
        self.segments = segments
        self.p_gen = p_gen
        self.p = p
        self.growth_limit = growth_limit
        self.patch_min = patch_min
        self.max_rounds = max_rounds
        self.log_q = log1p(-p_gen) if p_gen < 1.0 else 0.0

    cdef void attach(self, object bit_generator):
        self._keep_alive = bit_generator
        self.rng = <bitgen_t *> PyCapsule_GetPointer(
            bit_generator.capsule, "BitGenerator"
        )

    cdef void reset(self):
        self.station.clear()
        self.born.clear()
        self.died.clear()
        self.pair_a.clear()
        self.pair_b.clear()
        self.ev_op.clear()
        self.ev_a.clear()
        self.ev_b.clear()
        self.ev_c.clear()
        self.max_gap = 0
        self.restarts = 0

    # ---- randomness -------------------------------------------------------
    cdef inline double _uniform(self):
        return self.rng.next_double(self.rng.state)

    cdef inline i64 _geometric(self):
        if self.p_gen >= 1.0:
            return 1
        cdef double u = self._uniform()
        cdef i64 k = <i64> ceil(log1p(-u) / self.log_q)
        return k if k >= 1 else 1

    cdef inline bint _merge_ok(self):
        if self.p >= 1.0:
            return True
        return self._uniform() < self.p

    # ---- recording --------------------------------------------------------
    cdef inline i64 _alloc(self, i64 station, i64 t):
        cdef i64 q = <i64> self.station.size()
        self.station.push_back(station)
        self.born.push_back(t)
        self.died.push_back(-1)
        return q

    cdef inline void _emit(self, i64 op, i64 a, i64 b, i64 c):
        self.ev_op.push_back(op)
        self.ev_a.push_back(a)
        self.ev_b.push_back(b)
        self.ev_c.push_back(c)

    cdef inline void _merge(self, i64 source, i64 target, i64 t):
        self._emit(OP_MERGE, source, target, -1)
        self.died[target] = t

    cdef inline void _erase(self, i64 a, i64 b, i64 t):
        self._emit(OP_ERASE, a, b, -1)
        self.died[a] = t
        self.died[b] = t

    cdef inline void _mz(self, i64 q, i64 t):
        self._emit(OP_MZ, q, -1, -1)
        self.died[q] = t

    cdef inline void _my(self, i64 q, i64 left, i64 right, i64 t):
        self._emit(OP_MY, q, left, right)
        self.died[q] = t

    cdef inline void _note_gap(self, i64 size):
        if size > self.max_gap:
            self.max_gap = size

    cdef int _check_cap(self, i64 t) except -1:
        if t > self.max_rounds:
            raise RoundCapExceeded(
                f"sample exceeded {self.max_rounds} rounds; "
                f"p_gen={self.p_gen}, p={self.p}, segments={self.segments}"
            )
        return 0

    # ---- the divide-and-conquer recursion ----------------------------------
    cdef i64 _wt(self, i64 s, i64 base, i64 t0, vector[i64] &cluster) except -1:
        cdef i64 nq, npair, nev, t
        while True:
            nq = <i64> self.station.size()
            npair = <i64> self.pair_a.size()
            nev = <i64> self.ev_op.size()
            cluster.clear()
            t = self._attempt(s, base, t0, cluster)
            if cluster.size() > 0:
                return t
            self.station.resize(nq)
            self.born.resize(nq)
            self.died.resize(nq)
            self.pair_a.resize(npair)
            self.pair_b.resize(npair)
            self.ev_op.resize(nev)
            self.ev_a.resize(nev)
            self.ev_b.resize(nev)
            self.ev_c.resize(nev)
            self.restarts += 1
            self._check_cap(t)
            t0 = t

    cdef i64 _attempt(self, i64 s, i64 base, i64 t0, vector[i64] &cluster) except -1:
        cdef i64 t, t_l, t_r, a, b, source, s_left, s_right, i
        cdef vector[i64] cl, cr
        if s == 1:
            t = t0 + self._geometric()
            a = self._alloc(base, t)
            b = self._alloc(base + 1, t)
            self.pair_a.push_back(a)
            self.pair_b.push_back(b)
            cluster.push_back(a)
            cluster.push_back(b)
            return t
        s_left = (s + 1) // 2
        s_right = s - s_left
        t_l = self._wt(s_left, base, t0, cl)
        t_r = self._wt(s_right, base + s_left, t0, cr)
        t = t_l if t_l >= t_r else t_r
        if self.protocol == PROTOCOL_SB:
            if self._merge_ok():
                source = cl[cl.size() - 1]
                self._merge(source, cr[0], t)
                self._my(source, cl[0], cr[1], t)
                cluster.push_back(cl[0])
                cluster.push_back(cr[1])
            return t
        if self._merge_ok():
            self._merge(cl[cl.size() - 1], cr[0], t)
            cluster = cl
            for i in range(1, <i64> cr.size()):
                cluster.push_back(cr[i])
            return t
        self._erase(cl[cl.size() - 1], cr[0], t)
        cl.pop_back()
        cr.erase(cr.begin())
        if s <= self.patch_min:
            return t
        self._note_gap(2)
        return self._patch_loop(s, base, t, cl, cr, cluster)

    # ---- gap patching -------------------------------------------------------
    cdef i64 _patch_loop(self, i64 s, i64 base, i64 t,
                         vector[i64] &cl, vector[i64] &cr,
                         vector[i64] &cluster) except -1:
        cdef i64 end = base + s
        cdef i64 g_temp = 0
        cdef i64 gl, gr, i
        cdef bint ok_left, ok_right
        cdef vector[i64] block
        while True:
            self._check_cap(t)
            gl = self.station[cl[cl.size() - 1]] if cl.size() > 0 else base
            gr = self.station[cr[0]] if cr.size() > 0 else end
            block.clear()
            t = self._wt(gr - gl, gl, t, block)
            if cl.size() > 0 and cr.size() > 0:
                ok_left = self._merge_ok()
                ok_right = self._merge_ok()
                if ok_left and ok_right:
                    self._merge(cl[cl.size() - 1], block[0], t)
                    self._merge(block[block.size() - 1], cr[0], t)
                    cluster = cl
                    for i in range(1, <i64> block.size()):
                        cluster.push_back(block[i])
                    for i in range(1, <i64> cr.size()):
                        cluster.push_back(cr[i])
                    return t
                if ok_left or ok_right:
                    if ok_left:
                        self._merge(cl[cl.size() - 1], block[0], t)
                        for i in range(1, <i64> block.size()):
                            cl.push_back(block[i])
                        self._erase(cl[cl.size() - 1], cr[0], t)
                        cl.pop_back()
                        cr.erase(cr.begin())
                        if cr.size() < 2:
                            for i in range(<i64> cr.size()):
                                self._mz(cr[i], t)
                            cr.clear()
                    else:
                        self._merge(block[block.size() - 1], cr[0], t)
                        for i in range(1, <i64> cr.size()):
                            block.push_back(cr[i])
                        cr = block
                        self._erase(cl[cl.size() - 1], cr[0], t)
                        cl.pop_back()
                        cr.erase(cr.begin())
                        if cl.size() < 2:
                            for i in range(<i64> cl.size()):
                                self._mz(cl[i], t)
                            cl.clear()
                    self._note_gap(2)
                    continue
                self._erase(cl[cl.size() - 1], block[0], t)
                self._erase(block[block.size() - 1], cr[0], t)
                for i in range(1, <i64> block.size() - 1):
                    self._mz(block[i], t)
                cl.pop_back()
                cr.erase(cr.begin())
                if cl.size() < 2:
                    for i in range(<i64> cl.size()):
                        self._mz(cl[i], t)
                    cl.clear()
                if cr.size() < 2:
                    for i in range(<i64> cr.size()):
                        self._mz(cr[i], t)
                    cr.clear()
            else:
                if self._merge_ok():
                    if cl.size() > 0:
                        self._merge(cl[cl.size() - 1], block[0], t)
                        cluster = cl
                        for i in range(1, <i64> block.size()):
                            cluster.push_back(block[i])
                    else:
                        self._merge(block[block.size() - 1], cr[0], t)
                        cluster = block
                        for i in range(1, <i64> cr.size()):
                            cluster.push_back(cr[i])
                    return t
                if cl.size() > 0:
                    self._erase(cl[cl.size() - 1], block[0], t)
                    for i in range(1, <i64> block.size()):
                        self._mz(block[i], t)
                    cl.pop_back()
                    if cl.size() < 2:
                        for i in range(<i64> cl.size()):
                            self._mz(cl[i], t)
                        cl.clear()
                else:
                    self._erase(block[block.size() - 1], cr[0], t)
                    for i in range(<i64> block.size() - 1):
                        self._mz(block[i], t)
                    cr.erase(cr.begin())
                    if cr.size() < 2:
                        for i in range(<i64> cr.size()):
                            self._mz(cr[i], t)
                        cr.clear()
            g_temp += 1
            if g_temp > self.growth_limit:
                return t
            if s <= ((<i64> 1) << (g_temp + 2)):
                return t
            if not self._grow(g_temp, base, end, cl, cr, t):
                return t

    cdef bint _grow(self, i64 g_temp, i64 base, i64 end,
                    vector[i64] &cl, vector[i64] &cr, i64 t):
        cdef i64 target = (<i64> 1) << (g_temp + 1)
        cdef i64 gl = self.station[cl[cl.size() - 1]] if cl.size() > 0 else base
        cdef i64 gr = self.station[cr[0]] if cr.size() > 0 else end
        cdef i64 need = target - (gr - gl)
        cdef i64 cap_l, cap_r, trim_l, trim_r, i
        if need > 0:
            cap_l = <i64> cl.size() - 1 if cl.size() > 0 else 0
            cap_r = <i64> cr.size() - 1 if cr.size() > 0 else 0
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
            if cl.size() > 0 and trim_l == cap_l:
                for i in range(<i64> cl.size()):
                    self._mz(cl[i], t)
                cl.clear()
            else:
                for i in range(trim_l):
                    self._mz(cl[cl.size() - 1], t)
                    cl.pop_back()
            if cr.size() > 0 and trim_r == cap_r:
                for i in range(<i64> cr.size()):
                    self._mz(cr[i], t)
                cr.clear()
            else:
                for i in range(trim_r):
                    self._mz(cr[0], t)
                    cr.erase(cr.begin())
            if cl.size() == 0 and cr.size() == 0:
                return False
        gl = self.station[cl[cl.size() - 1]] if cl.size() > 0 else base
        gr = self.station[cr[0]] if cr.size() > 0 else end
        self._note_gap(gr - gl)
        return True

    # ---- top level ----------------------------------------------------------
    cdef i64 _run(self, vector[i64] &cluster) except -1:
        cdef i64 t = self._wt(self.segments, 0, 0, cluster)
        cdef i64 i, n = <i64> cluster.size()
        if self.protocol == PROTOCOL_MB and n > 2:
            for i in range(1, n - 1):
                self._my(cluster[i], cluster[0], cluster[i + 1], t)
        return t

    cdef void _qber(self, i64 rounds, i64 out_left, i64 out_right,
                    double dephasing_time, double round_seconds, double *out):
        cdef i64 n = <i64> self.station.size()
        cdef i64 nev = <i64> self.ev_op.size()
        cdef vector[int] m
        cdef i64 i, q, op, dq, stored
        cdef int mask, flip
        cdef double p0 = 1.0, p1 = 0.0, p2 = 0.0, p3 = 0.0
        cdef double lam, keep, n0, n1, n2, n3
        m.assign(n, 0)
        m[out_left] = 1
        m[out_right] = 2
        for i in range(nev - 1, -1, -1):
            op = self.ev_op[i]
            if op == OP_MERGE:
                m[self.ev_b[i]] = m[self.ev_a[i]]
            elif op == OP_MY:
                m[self.ev_a[i]] = m[self.ev_b[i]] ^ m[self.ev_c[i]]
            elif op == OP_ERASE:
                m[self.ev_a[i]] = 0
                m[self.ev_b[i]] = 0
            else:
                m[self.ev_a[i]] = 0
        for q in range(n):
            mask = m[q]
            if mask == 0:
                continue
            dq = self.died[q]
            stored = (rounds if dq < 0 else dq) - self.born[q]
            lam = 0.5 * (1.0 - exp(-(stored * round_seconds) / dephasing_time))
            if lam == 0.0:
                continue
            keep = 1.0 - lam
            flip = ((mask & 1) << 1) | (mask >> 1)
            if flip == 1:
                n0 = keep * p0 + lam * p1
                n1 = keep * p1 + lam * p0
                n2 = keep * p2 + lam * p3
                n3 = keep * p3 + lam * p2
            elif flip == 2:
                n0 = keep * p0 + lam * p2
                n1 = keep * p1 + lam * p3
                n2 = keep * p2 + lam * p0
                n3 = keep * p3 + lam * p1
            else:
                n0 = keep * p0 + lam * p3
                n1 = keep * p1 + lam * p2
                n2 = keep * p2 + lam * p1
                n3 = keep * p3 + lam * p0
            p0, p1, p2, p3 = n0, n1, n2, n3
        out[0] = p2 + p3
        out[1] = p1 + p3


def run_record(int protocol, i64 segments, double p_gen, double p,
               i64 growth_limit, i64 patch_min, i64 max_rounds,
               bit_generator):
    """One sample as a RunRecord, consuming uniforms from ``bit_generator``."""
    cdef _CyKernel kernel = _CyKernel(
        protocol, segments, p_gen, p, growth_limit, patch_min, max_rounds
    )
    kernel.attach(bit_generator)
    kernel.reset()
    cdef vector[i64] cluster
    cdef i64 t = kernel._run(cluster)
    cdef i64 i
    return RunRecord(
        protocol=protocol,
        segments=segments,
        rounds=t,
        station=[kernel.station[i] for i in range(<i64> kernel.station.size())],
        born=[kernel.born[i] for i in range(<i64> kernel.born.size())],
        died=[kernel.died[i] for i in range(<i64> kernel.died.size())],
        pair_a=[kernel.pair_a[i] for i in range(<i64> kernel.pair_a.size())],
        pair_b=[kernel.pair_b[i] for i in range(<i64> kernel.pair_b.size())],
        ev_op=[kernel.ev_op[i] for i in range(<i64> kernel.ev_op.size())],
        ev_a=[kernel.ev_a[i] for i in range(<i64> kernel.ev_a.size())],
        ev_b=[kernel.ev_b[i] for i in range(<i64> kernel.ev_b.size())],
        ev_c=[kernel.ev_c[i] for i in range(<i64> kernel.ev_c.size())],
        out_left=cluster[0],
        out_right=cluster[cluster.size() - 1],
        max_gap=kernel.max_gap,
        restarts=kernel.restarts,
    )


def run_moments(int protocol, i64 segments, double p_gen, double p,
                i64 growth_limit, i64 patch_min, i64 max_rounds,
                double dephasing_time, double round_seconds,
                object seed, i64 start, i64 count):
    """Moment sums over samples [start, start+count); see the Python lane."""
    cdef _CyKernel kernel = _CyKernel(
        protocol, segments, p_gen, p, growth_limit, patch_min, max_rounds
    )
    cdef i64 n = 0, max_gap = 0, restarts = 0
    cdef double sum_r = 0.0, sum_r2 = 0.0, sum_x = 0.0, sum_x2 = 0.0
    cdef double sum_z = 0.0, sum_z2 = 0.0, sum_rx = 0.0, sum_rz = 0.0, sum_xz = 0.0
    cdef double r, e_x, e_z
    cdef double qbers[2]
    cdef i64 index, t
    cdef vector[i64] cluster
    pcg64 = np.random.PCG64
    seedseq = np.random.SeedSequence
    for index in range(start, start + count):
        bg = pcg64(seedseq((seed, index)))
        kernel.attach(bg)
        kernel.reset()
        try:
            t = kernel._run(cluster)
        except RoundCapExceeded as exc:
            raise RoundCapExceeded(f"sample {index}: {exc}") from None
        kernel._qber(t, cluster[0], cluster[cluster.size() - 1],
                     dephasing_time, round_seconds, qbers)
        e_x = qbers[0]
        e_z = qbers[1]
        r = <double> t
        n += 1
        sum_r += r
        sum_r2 += r * r
        sum_x += e_x
        sum_x2 += e_x * e_x
        sum_z += e_z
        sum_z2 += e_z * e_z
        sum_rx += r * e_x
        sum_rz += r * e_z
        sum_xz += e_x * e_z
        if kernel.max_gap > max_gap:
            max_gap = kernel.max_gap
        restarts += kernel.restarts
    return (n, sum_r, sum_r2, sum_x, sum_x2, sum_z, sum_z2,
            sum_rx, sum_rz, sum_xz, max_gap, restarts)
