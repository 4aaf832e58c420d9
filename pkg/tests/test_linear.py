import numpy as np
import pytest

from core.linear import (
    LinearSvmModel,
    LogisticRegressionModel,
    fit_platt,
    hinge_objective,
    logistic_loss_and_grad,
    sigmoid,
    train_logreg,
    train_svm,
)
from utils.errors import DimensionMismatch, InvalidHyperparameter


class TestSigmoid:
    def test_extremes_do_not_overflow(self):
        out = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
        np.testing.assert_allclose(out, [0.0, 0.5, 1.0])


class TestLogisticRegression:
    def test_separable_set(self, separable_2d):
        X, y = separable_2d
        model = train_logreg(X, y)
        assert np.all(np.argmax(model.predict_proba(X), axis=1) == y)

    def test_single_label(self, separable_2d):
        X, _ = separable_2d
        y = np.ones(len(X), dtype=int)
        model = train_logreg(X, y, epochs=2000)
        assert np.all(model.predict_proba(X)[:, 1] > 0.9)

    def test_loss_never_increases(self, separable_2d):
        X, y = separable_2d
        trace = train_logreg(X, y, lr=10.0, epochs=200).loss_trace
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((12, 4))
        y = (rng.random(12) > 0.5).astype(float)
        w = rng.standard_normal(4) * 0.3
        b = 0.2
        _, grad_w, grad_b = logistic_loss_and_grad(w, b, X, y, 0.01)
        h = 1e-6
        for j in range(4):
            step = np.zeros(4)
            step[j] = h
            numeric = (logistic_loss_and_grad(w + step, b, X, y, 0.01)[0]
                       - logistic_loss_and_grad(w - step, b, X, y, 0.01)[0]) / (2 * h)
            assert grad_w[j] == pytest.approx(numeric, abs=1e-7)
        numeric_b = (logistic_loss_and_grad(w, b + h, X, y, 0.01)[0]
                     - logistic_loss_and_grad(w, b - h, X, y, 0.01)[0]) / (2 * h)
        assert grad_b == pytest.approx(numeric_b, abs=1e-7)

    def test_deterministic(self, separable_2d):
        X, y = separable_2d
        a, b = train_logreg(X, y), train_logreg(X, y)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_parameters_round_trip(self, separable_2d):
        X, y = separable_2d
        model = train_logreg(X, y)
        back = LogisticRegressionModel.from_parameters(model.to_parameters())
        np.testing.assert_array_equal(back.predict_proba(X), model.predict_proba(X))

    def test_bad_inputs(self, separable_2d):
        X, y = separable_2d
        with pytest.raises(InvalidHyperparameter):
            train_logreg(X, y, lr=0)
        with pytest.raises(DimensionMismatch):
            train_logreg(X, y[:-1])
        with pytest.raises(DimensionMismatch):
            train_logreg(X, y + 1)


class TestSvm:
    def test_separable_set(self, separable_2d):
        X, y = separable_2d
        model = train_svm(X, y, epochs=1000)
        assert np.all((model.decision_function(X) > 0) == (y == 1))
        assert model.hinge_trace[-1] < model.hinge_trace[0]

    def test_probabilities_follow_margin(self, separable_2d):
        X, y = separable_2d
        model = train_svm(X, y)
        proba = model.predict_proba(X)[:, 1]
        order = np.argsort(model.decision_function(X))
        assert np.all(np.diff(proba[order]) >= 0)
        np.testing.assert_allclose(model.predict_proba(X).sum(axis=1), 1.0)

    def test_label_flip_negates_weights(self, separable_2d):
        X, y = separable_2d
        a = train_svm(X, y, epochs=100)
        b = train_svm(X, 1 - y, epochs=100)
        np.testing.assert_allclose(a.weights, -b.weights, atol=1e-12)

    def test_parameters_round_trip(self, separable_2d):
        X, y = separable_2d
        model = train_svm(X, y)
        back = LinearSvmModel.from_parameters(model.to_parameters())
        np.testing.assert_array_equal(back.predict_proba(X), model.predict_proba(X))

    def test_objective_zero_weights(self, separable_2d):
        X, _ = separable_2d
        signs = np.ones(len(X))
        assert hinge_objective(np.zeros(2), 0.0, X, signs, 0.1) == pytest.approx(1.0)

    def test_invalid_c(self, separable_2d):
        X, y = separable_2d
        with pytest.raises(InvalidHyperparameter):
            train_svm(X, y, C=0)


class TestPlatt:
    def test_monotone_in_margin(self):
        margins = np.array([-3.0, -1.0, -0.5, 0.5, 1.0, 3.0])
        y = np.array([0, 0, 1, 0, 1, 1])
        a, b = fit_platt(margins, y)
        assert a > 0
        assert np.isfinite(b)

    def test_separable_margins_stay_finite(self):
        a, b = fit_platt(np.array([-2.0, -1.0, 1.0, 2.0]), np.array([0, 0, 1, 1]))
        assert np.isfinite(a) and np.isfinite(b)
        p = sigmoid(a * np.array([-2.0, 2.0]) + b)
        assert p[0] < 0.5 < p[1]
