import math

import numpy as np
import pytest

from mrfattn import ValidationError, log_sum_exp, make_rng, softmax, spawn_rngs


class TestLogSumExp:
    def test_two_zeros(self):
        assert log_sum_exp([0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-14)

    @pytest.mark.parametrize("x", [-3.7, 0.0, 12.5, 699.0, -699.0])
    def test_singleton_identity(self, x):
        assert log_sum_exp([x]) == x

    def test_large_magnitude_matches_shifted_small(self):
        # the analytic shift rule checked against a directly computable case
        small = math.log(math.exp(0.0) + math.exp(0.0))
        assert log_sum_exp([1000.0, 1000.0]) == pytest.approx(1000.0 + small,
                                                              abs=1e-9)
        assert np.isfinite(log_sum_exp([700.0, 700.0, 700.0]))

    def test_shift_property(self):
        rng = make_rng(0)
        for _ in range(50):
            v = rng.standard_normal(int(rng.integers(1, 9))) * 5
            c = float(rng.standard_normal()) * 10
            assert log_sum_exp(v + c) == pytest.approx(log_sum_exp(v) + c,
                                                       abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError, match="empty logit vector"):
            log_sum_exp([])

    def test_minus_inf_entries_allowed(self):
        assert log_sum_exp([0.0, -np.inf]) == pytest.approx(0.0, abs=1e-15)

    def test_all_minus_inf_rejected(self):
        with pytest.raises(ValidationError):
            log_sum_exp([-np.inf, -np.inf])

    def test_nan_and_plus_inf_rejected(self):
        with pytest.raises(ValidationError):
            log_sum_exp([0.0, np.nan])
        with pytest.raises(ValidationError):
            log_sum_exp([0.0, np.inf])


class TestSoftmax:
    def test_symmetric(self):
        np.testing.assert_allclose(softmax([0.0, 0.0, 0.0]),
                                   np.full(3, 1 / 3), atol=1e-15)

    def test_two_logits_hand_value(self):
        e = math.e
        np.testing.assert_allclose(softmax([1.0, 0.0]),
                                   [e / (e + 1), 1 / (e + 1)], atol=1e-12)

    def test_large_beta_approaches_argmax(self):
        out = softmax([1.0, 0.0], beta=50.0)
        np.testing.assert_allclose(out, [1.0, 0.0], atol=1e-12)

    def test_beta_must_be_positive(self):
        with pytest.raises(ValidationError):
            softmax([1.0, 0.0], beta=0.0)
        with pytest.raises(ValidationError):
            softmax([1.0, 0.0], beta=-2.0)

    def test_sums_to_one_across_betas(self):
        rng = make_rng(1)
        for beta in (1e-3, 0.1, 1.0, 10.0, 1e3):
            for _ in range(20):
                v = rng.standard_normal(int(rng.integers(1, 10)))
                out = softmax(v, beta=beta)
                assert abs(out.sum() - 1.0) < 1e-12
                # extreme beta may underflow losing entries to exactly 0
                assert np.all(out >= 0) and np.all(out <= 1.0)

    def test_shift_invariance(self):
        rng = make_rng(2)
        for _ in range(50):
            v = rng.standard_normal(6)
            c = float(rng.standard_normal()) * 7
            np.testing.assert_allclose(softmax(v + c), softmax(v), atol=1e-12)

    def test_masked_entry_gets_zero(self):
        out = softmax(np.array([0.5, -np.inf, 0.5]))
        assert out[1] == 0.0
        assert abs(out.sum() - 1.0) < 1e-12


class TestSeededRng:
    def test_same_seed_bitwise_identical(self):
        a = make_rng(123).random(1000)
        b = make_rng(123).random(1000)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        assert not np.array_equal(make_rng(1).random(10), make_rng(2).random(10))

    def test_spawned_substreams_deterministic(self):
        first = [g.random(5) for g in spawn_rngs(7, 3)]
        second = [g.random(5) for g in spawn_rngs(7, 3)]
        for a, b in zip(first, second):
            assert np.array_equal(a, b)
        assert not np.array_equal(first[0], first[1])
