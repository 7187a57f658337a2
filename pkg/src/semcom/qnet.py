"""From-scratch multilayer perceptron used as the Q-network.

Hidden layers are rectified-linear, the output layer is linear.  The
backward pass returns gradients of a squared error on the outputs with
respect to every weight and bias; training uses plain SGD with momentum.

Checkpoint format: magic "DQN1", uint32 little-endian layer count, the
layer sizes as uint32 little-endian, then for each layer its weight
matrix (fan_in x fan_out, row-major) followed by its bias vector, all
little-endian float64.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from .errors import CorruptPayloadError, ShapeError

_MAGIC = b"DQN1"


class Mlp:
    """Feed-forward network; weights shaped (fan_in, fan_out)."""

    def __init__(self, sizes, rng: np.random.Generator):
        if len(sizes) < 2:
            raise ShapeError(f"need at least input and output sizes, got {sizes}")
        self.sizes = tuple(int(s) for s in sizes)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.sizes, self.sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, fan_out))

    @classmethod
    def from_params(cls, sizes, weights, biases) -> "Mlp":
        net = cls.__new__(cls)
        net.sizes = tuple(int(s) for s in sizes)
        net.weights = [np.array(w, dtype=np.float64) for w in weights]
        net.biases = [np.array(b, dtype=np.float64) for b in biases]
        return net

    def copy(self) -> "Mlp":
        return Mlp.from_params(self.sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, x: np.ndarray):
        """Outputs and the per-layer cache the backward pass needs."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.sizes[0]:
            raise ShapeError(f"input has {x.shape[1]} features, network expects {self.sizes[0]}")
        activations = [x]
        pre = []
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = z if i == last else np.maximum(z, 0.0)
            activations.append(a)
        return a, (pre, activations)

    def backward(self, cache, grad_out: np.ndarray):
        """Gradients of the loss whose output-gradient is ``grad_out``.

        Returns ([dW...], [db...]) matching self.weights / self.biases.
        """
        pre, activations = cache
        grad_out = np.asarray(grad_out, dtype=np.float64)
        if grad_out.shape != pre[-1].shape:
            raise ShapeError(f"grad shape {grad_out.shape} does not match output {pre[-1].shape}")
        d_weights = [None] * len(self.weights)
        d_biases = [None] * len(self.biases)
        delta = grad_out
        for i in range(len(self.weights) - 1, -1, -1):
            d_weights[i] = activations[i].T @ delta
            d_biases[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre[i - 1] > 0.0)
        return d_weights, d_biases


def td_loss_and_gradients(net: Mlp, states: np.ndarray, action_idx: np.ndarray, targets: np.ndarray):
    """Mean squared TD error over a batch and its parameter gradients.

    Only the chosen action's output contributes for each sample.
    """
    q, cache = net.forward(states)
    batch = q.shape[0]
    rows = np.arange(batch)
    errors = q[rows, action_idx] - targets
    loss = float(np.mean(errors**2))
    grad_out = np.zeros_like(q)
    grad_out[rows, action_idx] = 2.0 * errors / batch
    d_weights, d_biases = net.backward(cache, grad_out)
    return loss, d_weights, d_biases


class SgdMomentum:
    """Classical momentum: v <- m v - lr g;  w <- w + v."""

    def __init__(self, net: Mlp, learning_rate: float, momentum: float):
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.v_weights = [np.zeros_like(w) for w in net.weights]
        self.v_biases = [np.zeros_like(b) for b in net.biases]

    def step(self, net: Mlp, d_weights, d_biases) -> None:
        for i in range(len(net.weights)):
            self.v_weights[i] = self.momentum * self.v_weights[i] - self.learning_rate * d_weights[i]
            self.v_biases[i] = self.momentum * self.v_biases[i] - self.learning_rate * d_biases[i]
            net.weights[i] = net.weights[i] + self.v_weights[i]
            net.biases[i] = net.biases[i] + self.v_biases[i]


def save_qnet(net: Mlp, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(net.sizes)))
        fh.write(struct.pack(f"<{len(net.sizes)}I", *net.sizes))
        for w, b in zip(net.weights, net.biases):
            fh.write(w.astype("<f8").tobytes())
            fh.write(b.astype("<f8").tobytes())


def load_qnet(path) -> Mlp:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise CorruptPayloadError(f"bad checkpoint magic {data[:4]!r}")
    (count,) = struct.unpack_from("<I", data, 4)
    sizes = struct.unpack_from(f"<{count}I", data, 8)
    offset = 8 + 4 * count
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        w = np.frombuffer(data, dtype="<f8", count=fan_in * fan_out, offset=offset)
        offset += 8 * fan_in * fan_out
        b = np.frombuffer(data, dtype="<f8", count=fan_out, offset=offset)
        offset += 8 * fan_out
        weights.append(w.reshape(fan_in, fan_out).copy())
        biases.append(b.copy())
    if offset != len(data):
        raise CorruptPayloadError(f"checkpoint has {len(data) - offset} trailing bytes")
    return Mlp.from_params(sizes, weights, biases)
