"""Benchmark: compiled sampling kernel vs the pure-Python reference.

Runs the same seeded sample batches through both lanes and reports
throughput.  Usage: python benchmarks/benchmark_kernels.py [--samples N]
"""

import argparse
import math
import time

from repeatersim import _mc, backend
from repeatersim.keyrate_stats import SampleMoments

CASES = [
    ("MB k=2 short haul", _mc.PROTOCOL_MB, 4, 0.797, 0.5, 1, 4),
    ("MB k=3 mid haul", _mc.PROTOCOL_MB, 8, 0.5, 0.5, 1, 4),
    ("MB k=4 long haul", _mc.PROTOCOL_MB, 16, 0.24, 0.5, 1, 4),
    ("SB k=4 long haul", _mc.PROTOCOL_SB, 16, 0.24, 0.5, 1, 4),
]

DEPHASING_TIME = 10.0
ROUND_SECONDS = 3.125e-4


def python_lane(protocol, segments, p_gen, p, g_l, patch_min, samples):
    moments = SampleMoments()
    for index in range(samples):
        gen = backend.sample_generator(1, index)
        record = _mc.run_protocol_record(
            protocol, segments, p_gen, p, g_l, patch_min, 10**9, gen.random
        )
        e_x, e_z = _mc.qber_from_record(record, DEPHASING_TIME, ROUND_SECONDS)
        moments.add(record.rounds, e_x, e_z)
    return moments


def cython_lane(protocol, segments, p_gen, p, g_l, patch_min, samples):
    from repeatersim import _speedups

    values = _speedups.run_moments(
        protocol, segments, p_gen, p, g_l, patch_min, 10**9,
        DEPHASING_TIME, ROUND_SECONDS, 1, 0, samples,
    )
    return SampleMoments(*values)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=20000)
    args = parser.parse_args()

    try:
        from repeatersim import _speedups  # noqa: F401
        have_ext = True
    except ImportError:
        have_ext = False
        print("compiled kernel not built; timing the pure-Python lane only\n")

    header = f"{'case':22s} {'python/s':>12s} {'cython/s':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, protocol, segments, p_gen, p, g_l, patch_min in CASES:
        py_samples = max(args.samples // 10, 1000)
        t0 = time.perf_counter()
        ref = python_lane(protocol, segments, p_gen, p, g_l, patch_min, py_samples)
        py_rate = py_samples / (time.perf_counter() - t0)
        if have_ext:
            t0 = time.perf_counter()
            fast = cython_lane(protocol, segments, p_gen, p, g_l, patch_min, args.samples)
            cy_rate = args.samples / (time.perf_counter() - t0)
            agreement = math.isclose(
                ref.sum_r / ref.n,
                cython_lane(protocol, segments, p_gen, p, g_l, patch_min, py_samples).sum_r
                / py_samples,
            )
            assert agreement, "lane outputs diverged"
            print(f"{name:22s} {py_rate:12.0f} {cy_rate:12.0f} {cy_rate / py_rate:8.1f}x")
        else:
            print(f"{name:22s} {py_rate:12.0f} {'-':>12s} {'-':>9s}")


if __name__ == "__main__":
    main()
