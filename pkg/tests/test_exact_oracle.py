import math

import numpy as np
import pytest

from repeatersim.errors import TraceError
from repeatersim.exact_oracle import (
    bell_diagonal_of,
    check_density_matrix,
    simulate_trace_dense,
)
from repeatersim.noise_engine import output_state, qber
from repeatersim.traces import (
    MemoryLedger,
    MergeSuccess,
    MeasureY,
    OperationTrace,
)
from repeatersim.validation import random_ledger, random_trace

T = 10.0


def single_pair():
    return OperationTrace((0, 1), ((0, 1),), (), (0, 1))


def merge_trace():
    return OperationTrace(
        stations=(0, 1, 1, 2),
        pairs=((0, 1), (2, 3)),
        events=(MergeSuccess(1, 2), MeasureY(1)),
        outputs=(0, 3),
    )


def zero_ledger(trace):
    return MemoryLedger({q: 0.0 for q in range(trace.num_qubits)})


def test_noiseless_pair_is_phi_plus():
    rho = simulate_trace_dense(single_pair(), zero_ledger(single_pair()), T)
    check_density_matrix(rho)
    expected = np.zeros((4, 4), dtype=complex)
    vec = np.array([1, 0, 0, 1]) / math.sqrt(2)
    expected += np.outer(vec, vec)
    assert np.max(np.abs(rho - expected)) < 1e-12


def test_four_qubit_merge_example_maps():
    """The fusion's noise-map update: a target-side flip acts on the source.

    Checked at trace level: dephasing the target for time t gives the same
    delivered state as dephasing the source for t, and dephasing both for
    t equals dephasing the source alone for 2t composed per the channel
    semigroup (flip weights combine, times add).
    """
    trace = merge_trace()
    t = 4.2
    on_target = MemoryLedger({0: 0.0, 1: 0.0, 2: t, 3: 0.0})
    on_source = MemoryLedger({0: 0.0, 1: t, 2: 0.0, 3: 0.0})
    rho_target = simulate_trace_dense(trace, on_target, T)
    rho_source = simulate_trace_dense(trace, on_source, T)
    assert np.max(np.abs(rho_target - rho_source)) < 1e-12

    both = MemoryLedger({0: 0.0, 1: t, 2: t, 3: 0.0})
    doubled = MemoryLedger({0: 0.0, 1: 2 * t, 2: 0.0, 3: 0.0})
    assert np.max(np.abs(
        simulate_trace_dense(trace, both, T) - simulate_trace_dense(trace, doubled, T)
    )) < 1e-12


def test_cptp_sanity_on_random_traces(rng):
    for _ in range(25):
        trace = random_trace(rng)
        ledger = random_ledger(rng, trace, T)
        rho = simulate_trace_dense(trace, ledger, T)
        check_density_matrix(rho)


def test_zero_times_give_maximal_entanglement(rng):
    for _ in range(25):
        trace = random_trace(rng)
        rho = simulate_trace_dense(trace, zero_ledger(trace), T)
        purity = float(np.trace(rho @ rho).real)
        assert purity == pytest.approx(1.0, abs=1e-10)
        reduced = rho.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
        eigenvalues = np.linalg.eigvalsh(reduced)
        entropy = -sum(v * math.log2(v) for v in eigenvalues if v > 1e-15)
        assert entropy == pytest.approx(1.0, abs=1e-10)


def test_oracle_output_is_bell_diagonal(rng):
    for _ in range(25):
        trace = random_trace(rng)
        ledger = random_ledger(rng, trace, T)
        state = bell_diagonal_of(simulate_trace_dense(trace, ledger, T), residue_tol=1e-12)
        assert sum(state.probs) == pytest.approx(1.0, abs=1e-12)


def test_bell_diagonal_of_trivials():
    assert bell_diagonal_of(np.eye(4) / 4).probs == pytest.approx((0.25,) * 4)
    vec = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert bell_diagonal_of(np.outer(vec, vec)).probs == pytest.approx((1, 0, 0, 0))


def test_bell_diagonal_of_rejects_coherences():
    rho = np.full((4, 4), 0.25, dtype=complex)
    with pytest.raises(ValueError):
        bell_diagonal_of(rho)


def test_qubit_cap_enforced():
    # a valid 14-qubit chain: seven pairs merged into one path, then swept
    stations = tuple(i for pair in range(7) for i in (pair, pair + 1))
    pairs = tuple((2 * i, 2 * i + 1) for i in range(7))
    merges = tuple(MergeSuccess(2 * i - 1, 2 * i) for i in range(1, 7))
    sweeps = tuple(MeasureY(2 * i - 1) for i in range(1, 7))
    trace = OperationTrace(stations, pairs, merges + sweeps, (0, 13))
    trace.validate()
    with pytest.raises(TraceError):
        simulate_trace_dense(trace, MemoryLedger({q: 0.0 for q in range(14)}), T)


def test_matches_engine_on_single_dephased_qubit():
    t = -T * math.log(1.0 - 0.6)
    ledger = MemoryLedger({0: t, 1: 0.0})
    oracle = bell_diagonal_of(simulate_trace_dense(single_pair(), ledger, T))
    assert qber(oracle) == pytest.approx((0.3, 0.0), abs=1e-12)
    engine = output_state(single_pair(), ledger, T)
    assert oracle.probs == pytest.approx(engine.probs, abs=1e-12)
