from __future__ import annotations

import numpy as np
import pytest

from driftscope.baseline import EwmaBaseline
from driftscope.models import (
    VARIANCE_FLOOR,
    GaussianNaiveBayes,
    OnlineLogisticRegression,
    detector_input,
)


class TestEwmaBaseline:
    def test_first_observation_initializes(self):
        b = EwmaBaseline(beta=0.5)
        b.update(np.array([1.0, 2.0]))
        np.testing.assert_allclose(b.ewma, [1.0, 2.0])

    def test_blend_recurrence(self):
        b = EwmaBaseline(beta=0.5)
        b.update(np.array([1.0]))
        b.update(np.array([3.0]))
        assert b.ewma[0] == pytest.approx(2.0)

    def test_beta_zero_freezes_at_first_observation(self):
        b = EwmaBaseline(beta=0.0)
        b.update(np.array([0.25, 0.75]))
        for _ in range(10):
            b.update(np.array([1.0, 1.0]))
        np.testing.assert_allclose(b.ewma, [0.25, 0.75])

    def test_beta_one_tracks_latest(self):
        b = EwmaBaseline(beta=1.0)
        b.update(np.array([0.0]))
        b.update(np.array([0.9]))
        assert b.ewma[0] == pytest.approx(0.9)

    def test_convexity_keeps_values_in_observed_hull(self):
        rng = np.random.default_rng(17)
        b = EwmaBaseline(beta=0.1)
        lo, hi = 2.0, 5.0
        for _ in range(500):
            b.update(rng.uniform(lo, hi, size=3))
            assert np.all(b.ewma >= lo) and np.all(b.ewma <= hi)

    def test_value_requires_initialization(self):
        b = EwmaBaseline()
        model = OnlineLogisticRegression(2)
        with pytest.raises(ValueError):
            b.value(model)

    def test_value_evaluates_model_at_baseline(self):
        b = EwmaBaseline(beta=1.0)
        b.update(np.array([1.0, 1.0]))
        model = OnlineLogisticRegression(2)
        model.weights[:] = [2.0, -1.0]
        model.bias = 0.5
        assert b.value(model) == pytest.approx(0.81757447619364365, abs=1e-9)

    def test_rejects_bad_beta(self):
        with pytest.raises(ValueError):
            EwmaBaseline(beta=1.5)


class TestOnlineLogisticRegression:
    def test_sigmoid_of_margin(self):
        model = OnlineLogisticRegression(2)
        model.weights[:] = [2.0, -1.0]
        model.bias = 0.5
        x = np.array([1.0, 1.0])
        assert model.margin(x) == pytest.approx(1.5)
        assert model.predict(x) == pytest.approx(0.81757447619364365, abs=1e-12)

    def test_single_sgd_step_from_zero(self):
        model = OnlineLogisticRegression(1, learning_rate=0.1)
        model.update(np.array([1.0]), 1)
        assert model.weights[0] == pytest.approx(0.05)
        assert model.bias == pytest.approx(0.05)

    def test_zero_learning_rate_freezes_model(self):
        model = OnlineLogisticRegression(2, learning_rate=0.0)
        rng = np.random.default_rng(0)
        for _ in range(50):
            model.update(rng.normal(size=2), int(rng.integers(0, 2)))
        assert np.all(model.weights == 0.0) and model.bias == 0.0

    def test_learns_a_separable_rule(self):
        rng = np.random.default_rng(5)
        model = OnlineLogisticRegression(2, learning_rate=0.1)
        for _ in range(4000):
            x = rng.uniform(0, 1, size=2)
            y = int(x[0] + x[1] > 1.0)
            model.update(x, y)
        correct = 0
        for _ in range(500):
            x = rng.uniform(0, 1, size=2)
            y = int(x[0] + x[1] > 1.0)
            correct += int((model.predict(x) >= 0.5) == y)
        assert correct / 500 > 0.9

    def test_probabilities_stay_in_unit_interval(self):
        model = OnlineLogisticRegression(1)
        model.weights[:] = [1000.0]
        assert model.predict(np.array([100.0])) == 1.0
        assert model.predict(np.array([-100.0])) == pytest.approx(0.0, abs=1e-300)

    def test_rejects_non_binary_label(self):
        model = OnlineLogisticRegression(1)
        with pytest.raises(ValueError):
            model.update(np.array([1.0]), 2)


class TestGaussianNaiveBayes:
    def test_streaming_moments_match_batch(self):
        # Two observations of one class: mean 3, sample variance 2.
        model = GaussianNaiveBayes(1, 2)
        model.update(np.array([2.0]), 0)
        model.update(np.array([4.0]), 0)
        assert model.means[0, 0] == pytest.approx(3.0)
        assert model.variances(0)[0] == pytest.approx(2.0)

    def test_single_sample_class_sits_at_variance_floor(self):
        model = GaussianNaiveBayes(2, 2)
        model.update(np.array([1.0, 2.0]), 1)
        np.testing.assert_allclose(model.variances(1), VARIANCE_FLOOR)

    def test_moments_match_numpy_on_random_data(self):
        rng = np.random.default_rng(9)
        model = GaussianNaiveBayes(3, 2)
        rows = rng.normal(size=(100, 3))
        for row in rows:
            model.update(row, 0)
        np.testing.assert_allclose(model.means[0], rows.mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(model.variances(0), rows.var(axis=0, ddof=1), atol=1e-12)

    def test_posterior_sums_to_one_and_prefers_nearer_class(self):
        rng = np.random.default_rng(21)
        model = GaussianNaiveBayes(2, 3)
        centers = np.array([[0.0, 0.0], [5.0, 5.0], [0.0, 5.0]])
        for _ in range(300):
            k = int(rng.integers(0, 3))
            model.update(centers[k] + rng.normal(scale=0.5, size=2), k)
        post = model.predict(np.array([4.8, 5.1]))
        assert post.sum() == pytest.approx(1.0)
        assert int(post.argmax()) == 1

    def test_unseen_class_gets_zero_probability(self):
        model = GaussianNaiveBayes(1, 3)
        model.update(np.array([0.0]), 0)
        model.update(np.array([1.0]), 0)
        model.update(np.array([5.0]), 2)
        post = model.predict(np.array([0.5]))
        assert post[1] == 0.0
        assert post.sum() == pytest.approx(1.0)

    def test_predict_before_training_rejected(self):
        model = GaussianNaiveBayes(1, 2)
        with pytest.raises(ValueError):
            model.predict(np.array([0.0]))


class TestDetectorInput:
    def test_binary_scalar_difference(self):
        assert detector_input(0.9, 0.6) == pytest.approx(0.3)

    def test_multiclass_predicted_class_difference(self):
        pred = np.array([0.1, 0.7, 0.2])
        base = np.array([0.3, 0.3, 0.4])
        assert detector_input(pred, base) == pytest.approx(0.4)

    def test_identical_outputs_give_zero(self):
        v = np.array([0.2, 0.5, 0.3])
        assert detector_input(v, v.copy()) == 0.0
        assert detector_input(0.5, 0.5) == 0.0

    def test_mixed_shapes_rejected(self):
        with pytest.raises(ValueError):
            detector_input(0.5, np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            detector_input(np.array([0.5, 0.5]), np.array([0.5, 0.3, 0.2]))
