"""Small dense regression network: tanh hidden layers, linear output,
Glorot-uniform init, Adam on mean squared error. Written directly on numpy
arrays; everything is float64 and deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceDetected, InvalidConfig


@dataclass
class MLPConfig:
    width: int = 330
    depth: int = 4                 # weight layers: in -> w -> w -> w -> out
    learning_rate: float = 1e-3
    batch_size: int = 256
    iterations: int = 50_000
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.depth < 1 or self.width < 1:
            raise InvalidConfig("depth and width must be >= 1")
        if self.batch_size < 1 or self.iterations < 0:
            raise InvalidConfig("batch_size must be >= 1 and iterations >= 0")

    def layer_sizes(self, n_in: int, n_out: int) -> list[int]:
        return [n_in] + [self.width] * (self.depth - 1) + [n_out]


class MLP:
    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        self.weights = weights
        self.biases = biases

    @classmethod
    def init_glorot(cls, sizes: list[int], rng: np.random.Generator) -> "MLP":
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = np.atleast_2d(np.asarray(x, dtype=np.float64))
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k != last:
                h = np.tanh(h)
        return h

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        """MSE over all outputs plus its gradients by backprop."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k != last:
                h = np.tanh(h)
            acts.append(h)
        diff = acts[-1] - y
        loss = float(np.mean(diff * diff))
        delta = 2.0 * diff / diff.size
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        for k in range(last, -1, -1):
            grads_w[k] = acts[k].T @ delta
            grads_b[k] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ self.weights[k].T) * (1.0 - acts[k] * acts[k])
        return loss, grads_w, grads_b

    def copy(self) -> "MLP":
        return MLP([w.copy() for w in self.weights], [b.copy() for b in self.biases])


class Adam:
    def __init__(self, net: MLP, cfg: MLPConfig):
        self.cfg = cfg
        self.m_w = [np.zeros_like(w) for w in net.weights]
        self.v_w = [np.zeros_like(w) for w in net.weights]
        self.m_b = [np.zeros_like(b) for b in net.biases]
        self.v_b = [np.zeros_like(b) for b in net.biases]
        self.t = 0

    def step(self, net: MLP, grads_w, grads_b) -> None:
        cfg = self.cfg
        self.t += 1
        corr1 = 1.0 - cfg.beta1 ** self.t
        corr2 = 1.0 - cfg.beta2 ** self.t
        for k in range(len(net.weights)):
            for param, grad, m, v in ((net.weights[k], grads_w[k], self.m_w[k], self.v_w[k]),
                                      (net.biases[k], grads_b[k], self.m_b[k], self.v_b[k])):
                m *= cfg.beta1
                m += (1.0 - cfg.beta1) * grad
                v *= cfg.beta2
                v += (1.0 - cfg.beta2) * grad * grad
                param -= cfg.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + cfg.adam_eps)


DIVERGENCE_FACTOR = 1e5


def train(net: MLP, sample_batch, cfg: MLPConfig) -> list[float]:
    """Run Adam with a freshly drawn batch every iteration.

    ``sample_batch(k, size)`` must return (inputs, targets) for iteration k.
    Returns the per-iteration loss trace. A non-finite loss, or a loss that
    explodes far past the starting loss (Adam's bounded steps keep a blown-up
    run finite for astronomically long, so NaN alone is not a usable
    tripwire), aborts with the iteration index.
    """
    opt = Adam(net, cfg)
    losses: list[float] = []
    limit = np.inf
    for k in range(cfg.iterations):
        x, y = sample_batch(k, cfg.batch_size)
        loss, gw, gb = net.loss_and_grads(x, y)
        if not np.isfinite(loss) or loss > limit:
            raise DivergenceDetected(f"training loss diverged at iteration {k} (loss {loss:.3g})")
        if k == 0:
            limit = DIVERGENCE_FACTOR * (loss + 1e-12)
        opt.step(net, gw, gb)
        losses.append(loss)
    return losses
