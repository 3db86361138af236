"""Small fully connected Q-network with hand-rolled backprop and Adam.

The networks here are tiny (a 4-wide state in, a few dozen actions out), so
64-bit numpy is faster than any framework and keeps every gradient directly
checkable against central finite differences. Hidden layers use ReLU, the
output is linear, and the loss is mean squared error on the taken action's
output only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

CHECKPOINT_VERSION = 1


@dataclass
class Network:
    """Feedforward net: ``widths = (input, hidden..., output)``."""

    widths: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def initialize(cls, widths: Sequence[int], seed: "int | None" = None) -> "Network":
        """Seeded He-style uniform init, scaled by fan-in."""
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ValueError(f"need at least input and output widths >= 1, got {widths}")
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = np.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(widths=widths, weights=weights, biases=biases)

    def clone(self) -> "Network":
        return Network(widths=self.widths,
                       weights=[w.copy() for w in self.weights],
                       biases=[b.copy() for b in self.biases])

    def _trace(self, inputs: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        activations = [inputs]
        pre = []
        x = inputs
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = x @ w + b
            pre.append(z)
            x = z if i == last else np.maximum(z, 0.0)
            activations.append(x)
        return pre, activations

    def forward(self, inputs: np.ndarray) -> np.ndarray:
        """Q-values for one state vector or a batch of them. Pure."""
        x = np.asarray(inputs, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.widths[0]:
            raise ValueError(f"expected input width {self.widths[0]}, got {x.shape[1]}")
        out = self._trace(x)[1][-1]
        return out[0] if single else out


@dataclass
class AdamState:
    """Adam moment accumulators; shapes are created lazily per network."""

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m_w: list = field(default_factory=list)
    v_w: list = field(default_factory=list)
    m_b: list = field(default_factory=list)
    v_b: list = field(default_factory=list)

    def _ensure_shapes(self, net: Network) -> None:
        if not self.m_w:
            self.m_w = [np.zeros_like(w) for w in net.weights]
            self.v_w = [np.zeros_like(w) for w in net.weights]
            self.m_b = [np.zeros_like(b) for b in net.biases]
            self.v_b = [np.zeros_like(b) for b in net.biases]

    def apply(self, net: Network, grads_w: list, grads_b: list) -> None:
        self._ensure_shapes(net)
        self.step += 1
        correction1 = 1.0 - self.beta1 ** self.step
        correction2 = 1.0 - self.beta2 ** self.step
        for params, grads, ms, vs in ((net.weights, grads_w, self.m_w, self.v_w),
                                      (net.biases, grads_b, self.m_b, self.v_b)):
            for p, g, m, v in zip(params, grads, ms, vs):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * np.square(g)
                m_hat = m / correction1
                v_hat = v / correction2
                p -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


def loss_and_gradients(net: Network, inputs: np.ndarray, targets: np.ndarray,
                       actions: np.ndarray) -> tuple[float, list, list]:
    """MSE on the taken action's output, plus gradients for every parameter."""
    x = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    a = np.asarray(actions, dtype=int)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("batch inputs must be a non-empty 2-D array")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in training batch")
    batch = x.shape[0]

    pre, activations = net._trace(x)
    out = activations[-1]
    taken = out[np.arange(batch), a]
    err = taken - y
    loss = float(np.mean(err ** 2))

    delta = np.zeros_like(out)
    delta[np.arange(batch), a] = 2.0 * err / batch
    grads_w: list = [None] * len(net.weights)
    grads_b: list = [None] * len(net.biases)
    for layer in range(len(net.weights) - 1, -1, -1):
        grads_w[layer] = activations[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (pre[layer - 1] > 0.0)
    return loss, grads_w, grads_b


def train_step(net: Network, opt: AdamState, inputs: np.ndarray,
               targets: np.ndarray, actions: np.ndarray) -> float:
    """One Adam step on the masked MSE loss; mutates ``net`` and ``opt``."""
    loss, grads_w, grads_b = loss_and_gradients(net, inputs, targets, actions)
    opt.apply(net, grads_w, grads_b)
    return loss


def copy_parameters(source: Network, dest: Network) -> Network:
    """Copy parameters bitwise into ``dest`` (architectures must match)."""
    if source.widths != dest.widths:
        raise ValueError(f"architecture mismatch: {source.widths} vs {dest.widths}")
    for d, s in zip(dest.weights, source.weights):
        np.copyto(d, s)
    for d, s in zip(dest.biases, source.biases):
        np.copyto(d, s)
    return dest


def save_checkpoint(path: "str | Path", net: Network,
                    opt: "AdamState | None" = None) -> Path:
    """Persist parameters (and optionally optimizer state) as an ``.npz``.

    Layout: ``version``, ``widths``, then ``w<i>``/``b<i>`` per layer; when an
    optimizer is included, ``adam`` holds (lr, beta1, beta2, eps, step) and
    ``mw<i>``/``vw<i>``/``mb<i>``/``vb<i>`` hold the moments.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload: dict[str, np.ndarray] = {
        "version": np.array(CHECKPOINT_VERSION),
        "widths": np.array(net.widths),
    }
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        payload[f"w{i}"] = w
        payload[f"b{i}"] = b
    if opt is not None:
        opt._ensure_shapes(net)
        payload["adam"] = np.array([opt.learning_rate, opt.beta1, opt.beta2,
                                    opt.epsilon, float(opt.step)])
        for i in range(len(net.weights)):
            payload[f"mw{i}"] = opt.m_w[i]
            payload[f"vw{i}"] = opt.v_w[i]
            payload[f"mb{i}"] = opt.m_b[i]
            payload[f"vb{i}"] = opt.v_b[i]
    np.savez(path, **payload)
    return path


def load_checkpoint(path: "str | Path") -> tuple[Network, "AdamState | None"]:
    with np.load(Path(path)) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        widths = tuple(int(w) for w in data["widths"])
        layers = len(widths) - 1
        net = Network(widths=widths,
                      weights=[data[f"w{i}"].copy() for i in range(layers)],
                      biases=[data[f"b{i}"].copy() for i in range(layers)])
        opt = None
        if "adam" in data:
            lr, b1, b2, eps, step = data["adam"]
            opt = AdamState(learning_rate=float(lr), beta1=float(b1), beta2=float(b2),
                            epsilon=float(eps), step=int(step),
                            m_w=[data[f"mw{i}"].copy() for i in range(layers)],
                            v_w=[data[f"vw{i}"].copy() for i in range(layers)],
                            m_b=[data[f"mb{i}"].copy() for i in range(layers)],
                            v_b=[data[f"vb{i}"].copy() for i in range(layers)])
    return net, opt
