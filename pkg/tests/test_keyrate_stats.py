import math

import pytest

from repeatersim.keyrate_stats import (
    SampleMoments,
    aggregate,
    binary_entropy,
    generation_probability,
    raw_rate,
    secret_key_fraction,
)


class TestBinaryEntropy:
    def test_balanced_bit(self):
        assert binary_entropy(0.5) == 1.0

    def test_endpoints(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_near_half(self):
        assert binary_entropy(0.11) == pytest.approx(0.49992, abs=1e-5)

    def test_symmetry(self):
        assert binary_entropy(0.2) == pytest.approx(binary_entropy(0.8), abs=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.1)
        with pytest.raises(ValueError):
            binary_entropy(1.1)


class TestSecretKeyFraction:
    def test_perfect(self):
        assert secret_key_fraction(0.0, 0.0) == 1.0

    def test_fully_dephased_clamps(self):
        assert secret_key_fraction(0.5, 0.0) == 0.0

    def test_symmetric_errors(self):
        expected = 1.0 - 2.0 * binary_entropy(0.05)
        assert secret_key_fraction(0.05, 0.05) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.4272, abs=2e-4)


class TestRawRate:
    def test_one_round_one_km(self):
        assert raw_rate(1.0, 1.0) == pytest.approx(1e5)

    def test_two_rounds(self):
        assert raw_rate(2.0, 1.0) == pytest.approx(5e4)

    def test_two_segment_mean(self):
        assert raw_rate(8.0 / 3.0, 22.0) == pytest.approx(1704.545454, abs=1e-5)

    def test_halves_when_rounds_double(self):
        assert raw_rate(6.0, 3.0) == pytest.approx(raw_rate(3.0, 3.0) / 2.0)

    def test_rejects_sub_round_means(self):
        with pytest.raises(ValueError):
            raw_rate(0.5, 1.0)


class TestGenerationProbability:
    def test_attenuation_length(self):
        assert generation_probability(22.0, 22.0) == pytest.approx(math.exp(-1.0))

    def test_short_segment(self):
        assert generation_probability(1e-9) == pytest.approx(1.0, abs=1e-9)


class TestAggregate:
    def test_single_perfect_sample(self):
        stats = aggregate([(1, 0.0, 0.0)], segment_km=1.0)
        assert stats.secret_key_rate_hz == pytest.approx(1e5)
        assert stats.secret_key_fraction == 1.0
        assert stats.se_rounds == 0.0

    def test_fraction_from_averaged_qbers(self):
        # r is evaluated on the mean QBERs, never averaged per sample
        stats = aggregate([(2, 0.0, 0.0), (2, 0.5, 0.0)], segment_km=1.0)
        assert stats.e_x == pytest.approx(0.25)
        expected = 1.0 - binary_entropy(0.25)
        assert stats.secret_key_fraction == pytest.approx(expected, abs=1e-12)

    def test_dephased_samples_clamp_to_zero(self):
        stats = aggregate([(3, 0.5, 0.5), (5, 0.5, 0.5)], segment_km=1.0)
        assert stats.secret_key_fraction == 0.0
        assert stats.secret_key_rate_hz == 0.0
        assert stats.se_secret_key_rate_hz == 0.0

    def test_rate_fraction_product(self):
        samples = [(2, 0.01, 0.02), (4, 0.03, 0.01), (3, 0.02, 0.02)]
        stats = aggregate(samples, segment_km=2.0)
        assert stats.secret_key_rate_hz == pytest.approx(
            stats.raw_rate_hz * stats.secret_key_fraction, abs=1e-9
        )

    def test_monotone_in_qber(self):
        base = aggregate([(2, 0.01, 0.01)] * 10, segment_km=1.0)
        worse = aggregate([(2, 0.05, 0.01)] * 10, segment_km=1.0)
        assert worse.secret_key_rate_hz < base.secret_key_rate_hz

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([], segment_km=1.0)


class TestMoments:
    def test_merge_matches_bulk(self):
        samples = [(2, 0.1, 0.0), (5, 0.2, 0.1), (3, 0.0, 0.05), (7, 0.3, 0.2)]
        bulk = SampleMoments()
        for s in samples:
            bulk.add(*s)
        left, right = SampleMoments(), SampleMoments()
        for s in samples[:2]:
            left.add(*s)
        for s in samples[2:]:
            right.add(*s)
        merged = left.merge(right)
        assert merged.n == bulk.n
        for field in vars(bulk):
            assert getattr(merged, field) == pytest.approx(
                getattr(bulk, field), rel=1e-12
            )
