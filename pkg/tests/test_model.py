import numpy as np
import pytest

from sublaplace.net.model import (
    Activation,
    InputShapeError,
    LayerSpec,
    MlpModel,
    forward,
    forward_batch,
    init_model,
    param_gradient,
    param_gradients,
    pre_activations,
)

TWO_LAYER = (LayerSpec(2, 2, Activation.RELU), LayerSpec(2, 1, Activation.IDENTITY))


def hand_forward(model, x):
    a = np.asarray(x, dtype=np.float64)
    for layer, (W, b) in zip(model.layers, model.unflatten()):
        z = W @ a + b
        a = np.maximum(z, 0) if layer.activation == Activation.RELU else z
    return float(a[0])


def test_affine_layer():
    model = MlpModel((LayerSpec(1, 1, Activation.IDENTITY),), np.array([2.0, 1.0]))
    assert forward(model, np.array([3.0])) == 7.0
    assert np.array_equal(param_gradient(model, np.array([3.0])), [3.0, 1.0])


def test_zero_parameters_give_zero_output():
    model = init_model(4, (5, 3), seed=0)
    model = model.with_theta(np.zeros(model.p))
    assert forward(model, np.ones(4)) == 0.0


def test_hand_computed_two_layer_network():
    # hidden pre-activations at x=[1,1] are [1, -1]; the second unit is off
    model = MlpModel(TWO_LAYER, np.array([1, 0, 0, -1, 0, 0, 1, 1, 0.5]))
    x = np.array([1.0, 1.0])
    assert forward(model, x) == 1.5
    assert np.array_equal(param_gradient(model, x), [1, 1, 0, 0, 1, 0, 1, 0, 1])


def test_relu_at_exactly_zero_uses_zero_subgradient():
    model = MlpModel(TWO_LAYER, np.array([1, -1, 0, 0, 0, 0, 1, 1, 0]))
    g = param_gradient(model, np.array([2.0, 2.0]))
    assert np.all(g[[0, 1, 4]] == 0)


def test_parameter_count_and_layout():
    model = init_model(7, (100, 100), seed=0)
    assert model.p == 11001
    last = model.layer_slice(2)
    assert (last.start, last.stop) == (10900, 11001)
    W, b = model.unflatten()[0]
    assert W.shape == (100, 7) and np.all(b == 0)
    assert np.all(np.abs(W) <= np.sqrt(6 / 107))


def test_batch_forward_matches_hand_forward(small_model):
    X = np.random.default_rng(0).standard_normal((10, 3))
    expected = [hand_forward(small_model, x) for x in X]
    assert np.allclose(forward_batch(small_model, X), expected, atol=1e-14)


def test_batched_gradients_match_single(small_model):
    X = np.random.default_rng(1).standard_normal((7, 3))
    G = param_gradients(small_model, X, chunk_size=3)
    assert G.shape == (7, small_model.p)
    for x, g in zip(X, G):
        assert np.allclose(param_gradient(small_model, x), g, rtol=0, atol=1e-13)


def central_difference(model, x, step=1e-5):
    out = np.empty(model.p)
    for i in range(model.p):
        plus, minus = model.theta.copy(), model.theta.copy()
        plus[i] += step
        minus[i] -= step
        out[i] = (forward(model.with_theta(plus), x) - forward(model.with_theta(minus), x)) / (2 * step)
    return out


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(42)
    checked = 0
    for trial in range(50):
        depth = int(rng.integers(1, 4))
        widths = tuple(int(w) for w in rng.integers(1, 13, size=depth))
        d = int(rng.integers(1, 6))
        model = init_model(d, widths, seed=trial)
        model = model.with_theta(model.theta + 0.1 * rng.standard_normal(model.p))
        x = rng.standard_normal(d)
        # finite differences straddle the ReLU kink when a pre-activation is near zero
        if any(np.min(np.abs(z)) < 1e-3 for z in pre_activations(model, x)[:-1]):
            continue
        g = param_gradient(model, x)
        fd = central_difference(model, x)
        scale = max(np.max(np.abs(fd)), 1.0)
        assert np.max(np.abs(g - fd)) / scale <= 1e-5
        checked += 1
    assert checked >= 25


def test_input_shape_is_checked(small_model):
    with pytest.raises(InputShapeError):
        forward(small_model, np.ones(4))
    with pytest.raises(InputShapeError):
        forward(small_model, np.ones((2, 3)))


def test_layers_must_chain():
    with pytest.raises(ValueError, match="chain"):
        MlpModel((LayerSpec(2, 3), LayerSpec(2, 1, Activation.IDENTITY)), np.zeros(9 + 3))
    with pytest.raises(ValueError, match="Identity"):
        MlpModel((LayerSpec(2, 1, Activation.RELU),), np.zeros(3))


def test_theta_is_read_only(small_model):
    with pytest.raises(ValueError):
        small_model.theta[0] = 1.0
