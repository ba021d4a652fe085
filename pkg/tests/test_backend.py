import math

import pytest

from repeatersim import backend
from repeatersim._mc import (
    PROTOCOL_MB,
    PROTOCOL_SB,
    qber_from_record,
    run_protocol_record,
)
from repeatersim.config import ProtocolConfig
from repeatersim.keyrate_stats import SampleMoments
from repeatersim.runner import simulate

speedups = pytest.importorskip(
    "repeatersim._speedups", reason="compiled kernel not built"
)

CASES = [
    (PROTOCOL_MB, 2, 0.7, 0.4, 1, 4),
    (PROTOCOL_MB, 4, 0.5, 0.5, 1, 3),
    (PROTOCOL_MB, 8, 0.35, 0.5, 2, 4),
    (PROTOCOL_MB, 16, 0.24, 0.5, 1, 4),
    (PROTOCOL_SB, 4, 0.5, 0.5, 1, 4),
    (PROTOCOL_SB, 16, 0.5, 0.3, 1, 4),
]


@pytest.mark.parametrize("protocol,segments,p_gen,p,g_l,patch_min", CASES)
def test_record_parity(protocol, segments, p_gen, p, g_l, patch_min):
    for index in range(200):
        reference = run_protocol_record(
            protocol, segments, p_gen, p, g_l, patch_min, 10**9,
            backend.sample_generator(99, index).random,
        )
        compiled = speedups.run_record(
            protocol, segments, p_gen, p, g_l, patch_min, 10**9,
            backend.sample_generator(99, index).bit_generator,
        )
        assert reference == compiled


def test_moment_parity():
    compiled = speedups.run_moments(
        PROTOCOL_MB, 8, 0.5, 0.5, 1, 4, 10**9, 10.0, 5e-5, 7, 0, 3000
    )
    reference = SampleMoments()
    for index in range(3000):
        record = run_protocol_record(
            PROTOCOL_MB, 8, 0.5, 0.5, 1, 4, 10**9,
            backend.sample_generator(7, index).random,
        )
        e_x, e_z = qber_from_record(record, 10.0, 5e-5)
        reference.add(record.rounds, e_x, e_z)
        reference.max_gap = max(reference.max_gap, record.max_gap)
        reference.restarts += record.restarts
    assert SampleMoments(*compiled) == reference


def test_worker_count_does_not_change_results():
    cfg = ProtocolConfig(
        k=3, dephasing_time=10.0, p=0.5, segment_km=5.0, samples=20_000, seed=3
    )
    assert simulate("MB", cfg, workers=1) == simulate("MB", cfg, workers=3)


def test_sample_streams_are_index_derived():
    # the same index yields the same sample, whatever the batch shape;
    # float sums may differ in the last ulp when regrouped, integers not
    a = backend.sample_moments(PROTOCOL_SB, 4, 0.5, 0.5, 1, 4, 10**9, 10.0, 5e-5, 5, 0, 10)
    b1 = backend.sample_moments(PROTOCOL_SB, 4, 0.5, 0.5, 1, 4, 10**9, 10.0, 5e-5, 5, 0, 4)
    b2 = backend.sample_moments(PROTOCOL_SB, 4, 0.5, 0.5, 1, 4, 10**9, 10.0, 5e-5, 5, 4, 6)
    merged = b1.merge(b2)
    assert (merged.n, merged.sum_r, merged.max_gap, merged.restarts) == (
        a.n, a.sum_r, a.max_gap, a.restarts
    )
    for field in ("sum_x", "sum_z", "sum_x2", "sum_z2", "sum_rx", "sum_rz", "sum_xz"):
        assert getattr(merged, field) == pytest.approx(getattr(a, field), rel=1e-12)
