import math

import numpy as np
import pytest

from repeatersim.noise_engine import (
    BellDiagonalState,
    DephasingChannel,
    PauliString,
    compose_dephasing,
    dephasing_lambda,
    output_state,
    propagate_z,
    qber,
)
from repeatersim.traces import (
    MemoryLedger,
    MergeFailureErase,
    MergeSuccess,
    MeasureY,
    MeasureZ,
    OperationTrace,
)

T = 10.0


def single_pair():
    return OperationTrace((0, 1), ((0, 1),), (), (0, 1))


def merge_trace():
    # stations a-b | c-d; merge b into c, sweep b; deliver (a, d)
    return OperationTrace(
        stations=(0, 1, 1, 2),
        pairs=((0, 1), (2, 3)),
        events=(MergeSuccess(1, 2), MeasureY(1)),
        outputs=(0, 3),
    )


def erase_trace():
    # a central merge fails and erases qubits 3 and 4; the spare pair is
    # measured out; the surviving two-qubit cluster is delivered
    return OperationTrace(
        stations=(0, 1, 1, 2, 2, 3),
        pairs=((0, 1), (2, 3), (4, 5)),
        events=(MergeSuccess(1, 2), MergeFailureErase(3, 4), MeasureZ(5)),
        outputs=(0, 1),
    )


class TestDephasingLambda:
    def test_zero_storage(self):
        assert dephasing_lambda(0.0, T) == 0.0

    def test_long_storage_limit(self):
        assert dephasing_lambda(1e9, T) == pytest.approx(0.5, abs=1e-12)

    def test_one_dephasing_time(self):
        assert dephasing_lambda(10.0, 10.0) == pytest.approx(0.3160602794142788, abs=1e-12)

    def test_monotone(self):
        values = [dephasing_lambda(t, T) for t in (0, 1, 2, 5, 20, 100)]
        assert values == sorted(values)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            dephasing_lambda(-1.0, T)
        with pytest.raises(ValueError):
            dephasing_lambda(1.0, 0.0)


class TestComposeDephasing:
    def test_identity(self):
        assert compose_dephasing(DephasingChannel(0.0), DephasingChannel(0.3)).lam == 0.3

    def test_fully_dephased_absorbs(self):
        out = compose_dephasing(DephasingChannel(0.5), DephasingChannel(0.2))
        assert out.lam == pytest.approx(0.5, abs=1e-15)

    def test_semigroup_matches_time_addition(self):
        a = DephasingChannel(dephasing_lambda(3.0, T))
        b = DephasingChannel(dephasing_lambda(7.0, T))
        assert compose_dephasing(a, b).lam == pytest.approx(
            dephasing_lambda(10.0, T), abs=1e-12
        )

    def test_semigroup_random_times(self, rng):
        for _ in range(200):
            t1, t2 = 30.0 * rng.random(2)
            composed = compose_dephasing(
                DephasingChannel(dephasing_lambda(t1, T)),
                DephasingChannel(dephasing_lambda(t2, T)),
            )
            assert composed.lam == pytest.approx(
                dephasing_lambda(t1 + t2, T), abs=1e-12
            )

    def test_weight_range_enforced(self):
        with pytest.raises(ValueError):
            DephasingChannel(0.6)


class TestPauliString:
    def test_product_discards_phases(self):
        x = PauliString({0: "X"})
        z = PauliString({0: "Z"})
        assert (x * z).letter(0) == "Y"
        assert (x * x).is_identity

    def test_disjoint_support(self):
        p = PauliString({0: "Z"}) * PauliString({1: "Z"})
        assert p.letter(0) == "Z" and p.letter(1) == "Z"


class TestPropagateZ:
    def test_output_qubit_untouched(self):
        pattern = propagate_z(single_pair(), 0)
        assert pattern == PauliString({0: "Z"})

    def test_merge_target_equals_source(self):
        # the fusion turns a target-side flip into a source-side flip
        trace = merge_trace()
        assert propagate_z(trace, 2) == propagate_z(trace, 1)

    def test_middle_qubit_of_three_cluster(self):
        # a flip on the swept middle qubit lands on both delivered ends
        pattern = propagate_z(merge_trace(), 1)
        assert pattern == PauliString({0: "Z", 3: "Z"})

    def test_erased_qubits_absorbed(self):
        trace = erase_trace()
        assert propagate_z(trace, 3) is None
        assert propagate_z(trace, 4) is None
        assert propagate_z(trace, 5) is None

    def test_unknown_qubit_rejected(self):
        with pytest.raises(Exception):
            propagate_z(single_pair(), 7)


class TestOutputState:
    def test_noiseless_is_perfect(self):
        ledger = MemoryLedger({0: 0.0, 1: 0.0})
        state = output_state(single_pair(), ledger, T)
        assert state.probs == pytest.approx((1.0, 0.0, 0.0, 0.0), abs=1e-15)

    def test_single_dephased_output(self):
        t = -T * math.log(1.0 - 0.6)  # lambda = 0.3
        state = output_state(single_pair(), MemoryLedger({0: t, 1: 0.0}), T)
        assert state.probs == pytest.approx((0.7, 0.0, 0.3, 0.0), abs=1e-12)
        assert qber(state) == pytest.approx((0.3, 0.0), abs=1e-12)

    def test_erased_qubit_time_is_irrelevant(self):
        trace = erase_trace()
        base = MemoryLedger({q: 1.0 for q in range(6)})
        moved = MemoryLedger({**base, 3: 55.0, 4: 17.0, 5: 123.0})
        assert output_state(trace, base, T).probs == pytest.approx(
            output_state(trace, moved, T).probs, abs=1e-15
        )

    def test_target_time_equals_source_time(self):
        trace = merge_trace()
        delta = 3.7
        a = MemoryLedger({0: 1.0, 1: 2.0 + delta, 2: 4.0, 3: 0.5})
        b = MemoryLedger({0: 1.0, 1: 2.0, 2: 4.0 + delta, 3: 0.5})
        assert output_state(trace, a, T).probs == pytest.approx(
            output_state(trace, b, T).probs, abs=1e-12
        )

    def test_missing_ledger_entry_rejected(self):
        with pytest.raises(Exception):
            output_state(single_pair(), MemoryLedger({0: 1.0}), T)

    def test_qber_bounded_by_half(self, rng):
        trace = merge_trace()
        for _ in range(50):
            ledger = MemoryLedger({q: 50.0 * rng.random() for q in range(4)})
            e_x, e_z = qber(output_state(trace, ledger, T))
            assert 0.0 <= e_x <= 0.5 + 1e-12
            assert 0.0 <= e_z <= 0.5 + 1e-12


class TestBellDiagonalState:
    def test_probabilities_validated(self):
        with pytest.raises(ValueError):
            BellDiagonalState((0.5, 0.5, 0.2, -0.2))
        with pytest.raises(ValueError):
            BellDiagonalState((0.5, 0.2, 0.2, 0.2))

    def test_qber_trivials(self):
        assert qber(BellDiagonalState((1.0, 0.0, 0.0, 0.0))) == (0.0, 0.0)
        assert qber(BellDiagonalState((0.25, 0.25, 0.25, 0.25))) == (0.5, 0.5)
