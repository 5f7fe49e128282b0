""" Dense ReLU networks with a scalar head over a flat parameter vector, with exact per-sample parameter gradients """

import enum
import json
import numpy as np
from collections.abc import Generator
from dataclasses import dataclass, field

from .const import GRADIENT_CHUNK_ROWS


class InputShapeError(ValueError):
    "Input does not match the first layer of the network"


class Activation(enum.Enum):
    RELU = enum.auto()
    IDENTITY = enum.auto()


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: Activation = Activation.RELU

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"layer dimensions must be positive, got {self.in_dim}x{self.out_dim}")

    @property
    def size(self) -> int:
        return self.in_dim * self.out_dim + self.out_dim

    def serialize(self) -> dict:
        return {"in_dim": self.in_dim, "out_dim": self.out_dim, "activation": self.activation.name}


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Feed-forward network whose parameters live in one flat vector.

    Flattening order is layer by layer from first to last; inside a layer the weight matrix comes
    first in row-major order (one output neuron per row), then the biases.
    """

    layers: tuple[LayerSpec, ...]
    theta: np.ndarray
    seed: int = 0
    offsets: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) == 0:
            raise ValueError("a network needs at least one layer")
        for previous, current in zip(layers[:-1], layers[1:]):
            if previous.out_dim != current.in_dim:
                raise ValueError(f"layer widths do not chain: {previous.out_dim} -> {current.in_dim}")
        if layers[-1].activation != Activation.IDENTITY or layers[-1].out_dim != 1:
            raise ValueError("the final layer must be an Identity layer with a single output")
        offsets = [0]
        for layer in layers:
            offsets.append(offsets[-1] + layer.size)
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        if theta.shape[0] != offsets[-1]:
            raise ValueError(f"theta has length {theta.shape[0]}, layers need {offsets[-1]}")
        theta.setflags(write=False)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "offsets", tuple(offsets))

    @property
    def p(self) -> int:
        return self.offsets[-1]

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    def layer_slice(self, index: int) -> slice:
        return slice(self.offsets[index], self.offsets[index + 1])

    def unflatten(self, theta: np.ndarray | None = None) -> list[tuple[np.ndarray, np.ndarray]]:
        """Structured (W, b) view of a flat vector laid out like this model's theta"""
        theta = self.theta if theta is None else theta
        params = []
        for i, layer in enumerate(self.layers):
            block = theta[self.layer_slice(i)]
            n_weights = layer.in_dim * layer.out_dim
            W = block[:n_weights].reshape(layer.out_dim, layer.in_dim)
            b = block[n_weights:]
            params.append((W, b))
        return params

    def with_theta(self, theta: np.ndarray) -> "MlpModel":
        return MlpModel(self.layers, theta, self.seed)

    def describe(self) -> str:
        return json.dumps([layer.serialize() for layer in self.layers])


def build_layers(input_dim: int, hidden_widths: list[int] | tuple[int, ...]) -> tuple[LayerSpec, ...]:
    dims = [input_dim, *hidden_widths]
    layers = [LayerSpec(a, b, Activation.RELU) for a, b in zip(dims[:-1], dims[1:])]
    layers.append(LayerSpec(dims[-1], 1, Activation.IDENTITY))
    return tuple(layers)


def init_model(input_dim: int, hidden_widths: list[int] | tuple[int, ...], seed: int) -> MlpModel:
    """Uniform initialization in +-sqrt(6 / (in + out)) per layer with zero biases, from the seeded generator"""
    layers = build_layers(input_dim, hidden_widths)
    rng = np.random.default_rng(seed)
    blocks = []
    for layer in layers:
        limit = np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
        blocks.append(rng.uniform(-limit, limit, size=layer.in_dim * layer.out_dim))
        blocks.append(np.zeros(layer.out_dim))
    return MlpModel(layers, np.concatenate(blocks), seed)


def _as_batch(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise InputShapeError(f"expected inputs of dimension {model.input_dim}, got shape {X.shape}")
    return X


def _forward_cache(model: MlpModel, X: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Layer inputs and pre-activations for a batch"""
    inputs, pre_activations = [], []
    a = X
    for layer, (W, b) in zip(model.layers, model.unflatten()):
        inputs.append(a)
        z = a @ W.T + b
        pre_activations.append(z)
        a = np.maximum(z, 0.0) if layer.activation == Activation.RELU else z
    return inputs, pre_activations


def pre_activations(model: MlpModel, X: np.ndarray) -> list[np.ndarray]:
    return _forward_cache(model, _as_batch(model, X))[1]


def forward_batch(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = _as_batch(model, X)
    return _forward_cache(model, X)[1][-1][:, 0]


def forward(model: MlpModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputShapeError(f"forward takes a single input vector, got shape {x.shape}")
    return float(forward_batch(model, x)[0])


def _backward(
    model: MlpModel, inputs: list[np.ndarray], pre_acts: list[np.ndarray], output_grad: np.ndarray, per_sample: bool
) -> np.ndarray:
    """Reverse pass seeded with d(objective)/d(output) per row.

    With per_sample the result is the [n x p] matrix of row gradients, otherwise their sum over rows.
    ReLU uses subgradient 0 at a pre-activation of exactly 0.
    """
    n = output_grad.shape[0]
    params = model.unflatten()
    delta = output_grad.reshape(n, 1)
    blocks: list[np.ndarray] = [np.empty(0)] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        W, _ = params[i]
        a_prev = inputs[i]
        if per_sample:
            grad_W = (delta[:, :, None] * a_prev[:, None, :]).reshape(n, -1)
            blocks[i] = np.concatenate([grad_W, delta], axis=1)
        else:
            blocks[i] = np.concatenate([(delta.T @ a_prev).reshape(-1), delta.sum(axis=0)])
        if i > 0:
            delta = delta @ W
            if model.layers[i - 1].activation == Activation.RELU:
                delta = delta * (pre_acts[i - 1] > 0)
    return np.concatenate(blocks, axis=1 if per_sample else 0)


def param_gradients(model: MlpModel, X: np.ndarray, chunk_size: int = GRADIENT_CHUNK_ROWS) -> np.ndarray:
    """[n x p] matrix whose row n is the gradient of f at X[n] with respect to theta"""
    X = _as_batch(model, X)
    return np.concatenate(list(iter_param_gradients(model, X, chunk_size)), axis=0)


def iter_param_gradients(
    model: MlpModel, X: np.ndarray, chunk_size: int = GRADIENT_CHUNK_ROWS
) -> Generator[np.ndarray, None, None]:
    X = _as_batch(model, X)
    if X.shape[0] == 0:
        yield np.zeros((0, model.p))
        return
    for start in range(0, X.shape[0], chunk_size):
        chunk = X[start : start + chunk_size]
        inputs, pre_acts = _forward_cache(model, chunk)
        yield _backward(model, inputs, pre_acts, np.ones(chunk.shape[0]), per_sample=True)


def param_gradient(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputShapeError(f"param_gradient takes a single input vector, got shape {x.shape}")
    return param_gradients(model, x)[0]


def loss_and_gradient(model: MlpModel, X: np.ndarray, output_grad_fn) -> tuple[float, np.ndarray]:
    """Mean loss over a batch and its gradient with respect to theta.

    output_grad_fn maps the batch outputs to (per-row losses, per-row d(loss)/d(output)).
    """
    X = _as_batch(model, X)
    inputs, pre_acts = _forward_cache(model, X)
    losses, output_grad = output_grad_fn(pre_acts[-1][:, 0])
    n = X.shape[0]
    grad = _backward(model, inputs, pre_acts, output_grad / n, per_sample=False)
    return float(np.mean(losses)), grad
