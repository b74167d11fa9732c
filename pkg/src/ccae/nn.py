"""Dense feed-forward autoencoder written against numpy, float64 throughout.

Layers store weights as ``(fan_in, fan_out)`` so a batch ``X`` of shape
``(B, fan_in)`` maps to ``X @ W + b``. The network is one flat stack of
layers; ``bottleneck`` is the index of the layer whose output is the
representation ``y``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("linear", "relu", "tanh")
INIT_STREAM = 5


class NetworkError(ValueError):
    pass


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    @property
    def shape(self) -> tuple[int, int]:
        return self.weight.shape


@dataclass
class Network:
    layers: list[Layer]
    bottleneck: int

    @property
    def widths(self) -> list[int]:
        return [self.layers[0].weight.shape[0]] + [layer.weight.shape[1] for layer in self.layers]

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def code_dim(self) -> int:
        return self.layers[self.bottleneck].weight.shape[1]

    @property
    def encoder(self) -> list[Layer]:
        return self.layers[: self.bottleneck + 1]

    @property
    def decoder(self) -> list[Layer]:
        return self.layers[self.bottleneck + 1 :]

    def params(self) -> list[np.ndarray]:
        """Flat ``[W0, b0, W1, b1, ...]``; the arrays are live views."""
        out = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    def copy(self) -> Network:
        return Network(
            [Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers],
            self.bottleneck,
        )


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input to each layer
    pre: list[np.ndarray]  # pre-activation of each layer
    outputs: list[np.ndarray]  # post-activation of each layer

    @property
    def reconstruction(self) -> np.ndarray:
        return self.outputs[-1]


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 200
    data_batch_size: int = 64
    constraint_batch_size: int = 64
    lambda_fad: float = 1.0
    lambda_frd: float = 1.0
    lambda_mad: float = 1.0
    lambda_mrd: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise NetworkError("learning_rate must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise NetworkError(f"unknown optimizer {self.optimizer!r}")
        if self.data_batch_size < 1 or self.constraint_batch_size < 1:
            raise NetworkError("batch sizes must be >= 1")
        if min(self.lambda_fad, self.lambda_frd, self.lambda_mad, self.lambda_mrd) < 0:
            raise NetworkError("constraint weights must be nonnegative")
        if self.epochs < 0:
            raise NetworkError("epochs must be >= 0")

    @property
    def lambdas(self) -> dict[str, float]:
        return {"FAD": self.lambda_fad, "FRD": self.lambda_frd, "MAD": self.lambda_mad, "MRD": self.lambda_mrd}


def autoencoder_widths(input_dim: int, hidden=(500, 100, 50, 20), code_dim: int = 2) -> list[int]:
    hidden = list(hidden)
    return [input_dim, *hidden, code_dim, *hidden[::-1], input_dim]


def init_network(widths, activation: str = "relu", seed: int = 0, bottleneck: int | None = None) -> Network:
    """Glorot-uniform weights, zero biases.

    ``widths`` lists every layer width from input to output. The bottleneck
    defaults to the narrowest layer and is linear, as is the output layer.
    """
    widths = [int(w) for w in widths]
    if len(widths) < 3 or any(w < 1 for w in widths):
        raise NetworkError(f"invalid widths {widths}")
    if widths[0] != widths[-1]:
        raise NetworkError("autoencoder input and output widths differ")
    if activation not in ACTIVATIONS:
        raise NetworkError(f"unknown activation {activation!r}")
    if bottleneck is None:
        bottleneck = int(np.argmin(widths[1:-1]))
    if not 0 <= bottleneck < len(widths) - 2:
        raise NetworkError("bottleneck must be a hidden layer")
    if widths[bottleneck + 1] >= widths[0]:
        raise NetworkError("code dimension must be smaller than the input dimension")

    rng = np.random.default_rng([seed, INIT_STREAM])
    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        act = "linear" if k in (bottleneck, len(widths) - 2) else activation
        layers.append(Layer(w, np.zeros(fan_out), act))
    return Network(layers, bottleneck)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray | None:
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "tanh":
        return 1.0 - a * a
    return None


def _run(layers: list[Layer], x: np.ndarray, cache: ForwardCache | None) -> np.ndarray:
    for layer in layers:
        z = x @ layer.weight + layer.bias
        a = _activate(z, layer.activation)
        if cache is not None:
            cache.inputs.append(x)
            cache.pre.append(z)
            cache.outputs.append(a)
        x = a
    return x


def _check_batch(net: Network, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise NetworkError(f"batch shape {batch.shape} does not match input width {net.input_dim}")
    if np.isnan(batch).any():
        raise NetworkError("NaN in input batch")
    return batch


def encode(net: Network, batch: np.ndarray) -> np.ndarray:
    return _run(net.encoder, _check_batch(net, batch), None)


def decode(net: Network, codes: np.ndarray) -> np.ndarray:
    return _run(net.decoder, np.asarray(codes, dtype=np.float64), None)


def forward(net: Network, batch: np.ndarray):
    """Return ``(reconstruction, representations, cache)``."""
    batch = _check_batch(net, batch)
    cache = ForwardCache([], [], [])
    recon = _run(net.layers, batch, cache)
    return recon, cache.outputs[net.bottleneck], cache


def _backward(net: Network, cache: ForwardCache, upstream: dict[int, np.ndarray], start: int) -> list[np.ndarray]:
    """Reverse pass from layer ``start`` down to the input.

    ``upstream[k]`` is an extra gradient on the output of layer ``k``.
    Layers above ``start`` get zero gradients.
    """
    grads: list[np.ndarray] = []
    for layer in net.layers[start + 1 :][::-1]:
        grads.append(np.zeros_like(layer.bias))
        grads.append(np.zeros_like(layer.weight))
    g = None
    for k in range(start, -1, -1):
        layer = net.layers[k]
        if k in upstream:
            g = upstream[k] if g is None else g + upstream[k]
        d = _activation_grad(cache.pre[k], cache.outputs[k], layer.activation)
        if d is not None:
            g = g * d
        grads.append(g.sum(axis=0))
        grads.append(cache.inputs[k].T @ g)
        if k:
            g = g @ layer.weight.T
    grads.reverse()
    return grads


def loss_and_gradients(net: Network, batch: np.ndarray, external_bottleneck_grads: np.ndarray | None = None):
    """Mean squared reconstruction error over the batch and its parameter gradients.

    ``loss = (1/B) * sum_n ||x_n - f_d(f_e(x_n))||^2``. Extra gradients on the
    representations (``(B, code_dim)``) are added at the bottleneck, so they
    reach the encoder but never the decoder. Gradients are returned in the
    order of ``net.params()``.
    """
    recon, _, cache = forward(net, batch)
    b = len(recon)
    diff = recon - cache.inputs[0]
    loss = float(np.sum(diff * diff) / b)
    upstream = {len(net.layers) - 1: 2.0 * diff / b}
    if external_bottleneck_grads is not None:
        ext = np.asarray(external_bottleneck_grads, dtype=np.float64)
        if ext.shape != (b, net.code_dim):
            raise NetworkError(f"external gradient shape {ext.shape} != {(b, net.code_dim)}")
        upstream[net.bottleneck] = ext
    return loss, _backward(net, cache, upstream, len(net.layers) - 1)


def encoder_gradients(net: Network, batch: np.ndarray, bottleneck_grads: np.ndarray) -> list[np.ndarray]:
    """Backpropagate gradients on the representations through the encoder only.

    Decoder entries of the returned list are zero.
    """
    batch = _check_batch(net, batch)
    cache = ForwardCache([], [], [])
    _run(net.encoder, batch, cache)
    return _backward(net, cache, {net.bottleneck: np.asarray(bottleneck_grads, dtype=np.float64)}, net.bottleneck)


@dataclass
class OptimizerState:
    kind: str
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def init_optimizer_state(net: Network, config: TrainConfig) -> OptimizerState:
    state = OptimizerState(config.optimizer)
    if config.optimizer == "adam":
        state.m = [np.zeros_like(p) for p in net.params()]
        state.v = [np.zeros_like(p) for p in net.params()]
    return state


def optimizer_step(net: Network, grads: list[np.ndarray], state: OptimizerState, config: TrainConfig):
    """Update ``net`` in place; returns ``(net, state)``."""
    if state.kind != config.optimizer:
        raise NetworkError(f"optimizer state is {state.kind!r}, config asks for {config.optimizer!r}")
    lr = config.learning_rate
    params = net.params()
    state.step += 1
    if config.optimizer == "sgd":
        for p, g in zip(params, grads):
            p -= lr * g
        return net, state

    b1, b2 = config.beta1, config.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + config.eps)
    return net, state
