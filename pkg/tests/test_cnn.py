import numpy as np
import pytest

from core.cnn import (
    CnnModel,
    cnn_forward,
    flattened_size,
    init_parameters,
    loss_and_gradients,
    max_pool2x2,
    train_cnn,
    zero_parameters,
)
from utils.errors import ShapeMismatch, SingleClassTrainingSet

SMALL = (14, 14, 1)


@pytest.fixture
def halves():
    """Bright left half for takeoff, bright right half for landing"""
    rng = np.random.default_rng(8)
    X = rng.random((8,) + SMALL) * 0.1
    y = np.array([0, 1] * 4)
    X[y == 1, :, :7, :] += 0.9
    X[y == 0, :, 7:, :] += 0.9
    return X, y


def test_layer_sizes():
    assert flattened_size((128, 130, 1)) == 14880
    assert flattened_size(SMALL) == 64


def test_max_pool_picks_window_max():
    x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 2, 2, 1)
    pooled, arg = max_pool2x2(x)
    assert pooled.shape == (1, 1, 1, 1)
    assert pooled[0, 0, 0, 0] == 4.0
    assert arg[0, 0, 0, 0] == 3


def test_zero_parameters_give_half():
    spectrogram = np.random.default_rng(0).random((14, 14))
    assert cnn_forward(spectrogram, zero_parameters(SMALL), SMALL) == 0.5


def test_forward_rejects_wrong_shape():
    with pytest.raises(ShapeMismatch):
        cnn_forward(np.zeros((12, 14)), zero_parameters(SMALL), SMALL)


def test_gradients_match_finite_differences(halves):
    X, y = halves
    X, y = X[:4], y[:4].astype(np.float64)
    params = init_parameters(3, SMALL)
    rng = np.random.default_rng(1)
    for name in params:
        params[name] = params[name] + rng.normal(0, 0.05, params[name].shape)
    _, grads = loss_and_gradients(params, X, y)

    h = 1e-5
    for name, value in params.items():
        for flat_index in rng.choice(value.size, size=min(5, value.size), replace=False):
            index = np.unravel_index(flat_index, value.shape)
            original = value[index]
            value[index] = original + h
            up, _ = loss_and_gradients(params, X, y)
            value[index] = original - h
            down, _ = loss_and_gradients(params, X, y)
            value[index] = original
            numeric = (up - down) / (2 * h)
            assert np.isclose(grads[name][index], numeric, rtol=1e-4, atol=1e-7), name


def test_dead_relu_blocks_gradient(halves):
    X, _ = halves
    params = init_parameters(0, SMALL)
    params['conv1_b'] = np.full_like(params['conv1_b'], -100.0)
    y = np.array([1.0, 1.0, 1.0, 0.0])
    _, grads = loss_and_gradients(params, X[:4], y)
    assert not np.any(grads['conv1_w'])
    assert not np.any(grads['dense1_w'])
    assert grads['dense2_b'][0] == pytest.approx(-0.25)


def test_training_reduces_loss(halves):
    X, y = halves
    model = train_cnn(X, y, epochs=20, batch=4, lr=0.01, seed=5)
    assert len(model.loss_trace) == 20
    assert model.loss_trace[-1] < model.loss_trace[0]


def test_same_seed_same_weights(halves):
    X, y = halves
    a = train_cnn(X, y, epochs=2, batch=4, seed=9)
    b = train_cnn(X, y, epochs=2, batch=4, seed=9)
    for name in a.params:
        np.testing.assert_array_equal(a.params[name], b.params[name])


def test_parameters_round_trip(halves):
    X, y = halves
    model = train_cnn(X, y, epochs=1, batch=4)
    back = CnnModel.from_parameters(model.to_parameters())
    assert back.input_shape == SMALL
    np.testing.assert_array_equal(back.predict_proba(X), model.predict_proba(X))
    with pytest.raises(ShapeMismatch):
        back.predict_proba(np.zeros((1, 12, 14, 1)))


def test_single_class_rejected(halves):
    X, _ = halves
    with pytest.raises(SingleClassTrainingSet):
        train_cnn(X, np.ones(len(X)))
