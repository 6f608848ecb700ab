import math

import numpy as np
import pytest

from sqnopt.data import Dataset, generate_synthetic_binary, generate_synthetic_multiclass
from sqnopt.diagnostics import (
    RunRecord,
    TheoryParams,
    grad_error,
    hv_error,
    q_beta,
    sqn_iteration_work,
    sqn_sgd_cost_ratio,
    test_metrics as metrics,
)
from sqnopt.objective import BinaryLogistic, MulticlassLogistic, NoisyQuadratic

UNIT = TheoryParams(1.0, 1.0, 1.0, 1.0, 1.0)


class TestQBeta:
    def test_examples(self):
        assert q_beta(UNIT, 1.0, 0.0) == 0.5
        assert q_beta(UNIT, 1.0, 100.0) == 100.0
        assert UNIT.q_beta(1.0, 0.0) == 0.5

    def test_threshold(self):
        assert UNIT.beta_threshold == 0.5
        with pytest.raises(ValueError):
            q_beta(UNIT, 0.5, 0.0)
        with pytest.raises(ValueError):
            q_beta(UNIT, 0.1, 0.0)

    def test_blowup_near_threshold(self):
        values = [q_beta(UNIT, 0.5 + eps, 0.0) for eps in (1e-1, 1e-2, 1e-3, 1e-4)]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert values[-1] > 500

    def test_general(self):
        tp = TheoryParams(0.5, 4.0, 0.2, 3.0, 2.0)
        beta = 10.0
        expected = 4.0 * 9.0 * beta**2 * 4.0 / (2 * (2 * 0.2 * 0.5 * beta - 1))
        assert q_beta(tp, beta, 1.0) == pytest.approx(expected, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            TheoryParams(2.0, 1.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            TheoryParams(1.0, 1.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            TheoryParams(1.0, 1.0, 1.0, 1.0, -1.0)


class TestGradError:
    def test_full_batch_zero(self):
        d, _ = generate_synthetic_binary(5, 100, seed=0)
        obj = BinaryLogistic(d)
        assert grad_error(obj, np.ones(5), np.arange(100)) <= 1e-12

    def test_sign_flip_gives_two(self):
        # at w=0: example 0 contributes -0.5 e1, example 1 contributes 1.5 e1,
        # so the batch {0} is exactly the negated full gradient 0.5 e1
        obj = BinaryLogistic(Dataset(np.array([[1.0, 0.0], [3.0, 0.0]]), [1, 0]))
        np.testing.assert_array_equal(obj.gradient(np.zeros(2)), [0.5, 0.0])
        assert grad_error(obj, np.zeros(2), [0]) == 2.0

    def test_random_batch(self):
        d, _ = generate_synthetic_binary(5, 500, seed=1)
        e = grad_error(BinaryLogistic(d), np.zeros(5), np.arange(10))
        assert 0 < e < math.inf

    def test_zero_gradient(self):
        q = NoisyQuadratic([1.0, 2.0], num_examples=5, seed=0)
        with pytest.raises(ValueError):
            grad_error(q, np.zeros(2), [0])


class TestHvError:
    def test_full_batch_zero(self):
        d, _ = generate_synthetic_binary(5, 100, seed=0)
        obj = BinaryLogistic(d)
        assert hv_error(obj, np.ones(5), np.zeros(5), np.arange(100)) <= 1e-12

    def test_quadratic_zero(self):
        q = NoisyQuadratic([1.0, 3.0], num_examples=50, seed=0)
        assert hv_error(q, np.array([1.0, 2.0]), np.zeros(2), [7]) == 0.0

    def test_zero_direction(self):
        q = NoisyQuadratic([1.0, 3.0], seed=0)
        with pytest.raises(ValueError):
            hv_error(q, np.ones(2), np.ones(2), [0])

    def test_decreases_with_sample_size(self):
        d, _ = generate_synthetic_binary(10, 5000, seed=2)
        obj = BinaryLogistic(d)
        rng = np.random.default_rng(0)
        wbar, prev = rng.normal(size=10), rng.normal(size=10)
        means = [np.mean([hv_error(obj, wbar, prev, rng.choice(5000, bH, replace=False))
                          for _ in range(50)]) for bH in (10, 100, 1000)]
        assert means[0] > means[1] > means[2]


class TestMetrics:
    def test_separable_accuracy(self):
        d, w = generate_synthetic_binary(10, 2000, seed=3, w_scale=50.0)
        # brute-force classification against the generating weights
        X = d.X.toarray()
        brute = np.mean((X @ w >= 0).astype(int) == d.labels)
        m = metrics(BinaryLogistic(d), w)
        assert m["test_accuracy"] == pytest.approx(brute)
        assert m["test_accuracy"] >= 0.95

    def test_random_guessing(self):
        # labels drawn as fair coins are classified at chance by any fixed w
        d, _ = generate_synthetic_binary(10, 20000, seed=5, w_scale=0.0)
        w = np.random.default_rng(0).normal(size=10)
        assert abs(metrics(BinaryLogistic(d), w)["test_accuracy"] - 0.5) < 0.02

    def test_zero_weights_tie_to_one(self):
        d, _ = generate_synthetic_binary(4, 50, seed=0)
        obj = BinaryLogistic(d)
        np.testing.assert_array_equal(obj.predict(np.zeros(4)), 1)
        assert metrics(obj, np.zeros(4))["test_accuracy"] == pytest.approx(d.labels.mean())

    def test_train_as_test(self):
        d, _ = generate_synthetic_multiclass(4, 3, 100, seed=0)
        obj = MulticlassLogistic(d)
        w = np.random.default_rng(0).normal(size=12)
        assert abs(metrics(obj, w)["test_fx"] - obj.value(w)) <= 1e-12


def test_work_model():
    assert sqn_iteration_work(50, 600, 10, 10, 50) == 2 * 50 * 50 + 4 * 10 * 50 + 3 * 600 * 50 / 10
    assert sqn_sgd_cost_ratio(50, 600, 10, 10) == pytest.approx(1 + 2 * 10 / 50 + 3 * 600 / (2 * 50 * 10))


def test_record_fields():
    assert RunRecord.field_names() == ["k", "adp", "work", "train_fx", "test_fx", "test_accuracy",
                                       "grad_error", "hv_error", "grad_norm"]
