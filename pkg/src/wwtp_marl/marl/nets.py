"""Feed-forward networks with hand-written backprop, and the Adam optimizer."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OUTPUTS = ("identity", "tanh_box")


@dataclass
class MLP:
    """ReLU hidden layers; ``y = x @ W + b`` per layer (``W`` is fan_in x fan_out).

    ``output="tanh_box"`` squashes with tanh and maps affinely onto ``[low, high]``.
    ``version`` increments whenever parameters change so stale caches are detectable.
    """
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output: str = "identity"
    low: np.ndarray | None = None
    high: np.ndarray | None = None
    version: int = 0

    def __post_init__(self):
        if self.output not in OUTPUTS:
            raise ValueError(f"unknown output activation {self.output!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight matrix")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ValueError(f"layer {k}: weight {W.shape} / bias {b.shape} mismatch")
            if k and W.shape[0] != self.weights[k - 1].shape[1]:
                raise ValueError(f"layer {k} input {W.shape[0]} != previous output "
                                 f"{self.weights[k - 1].shape[1]}")
        if self.output == "tanh_box":
            if self.low is None or self.high is None:
                raise ValueError("tanh_box output needs low/high")
            self.low = np.asarray(self.low, dtype=np.float64)
            self.high = np.asarray(self.high, dtype=np.float64)
            if self.low.shape != (self.sizes[-1],) or np.any(self.high <= self.low):
                raise ValueError("bad output box")

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def copy(self) -> "MLP":
        return MLP([W.copy() for W in self.weights], [b.copy() for b in self.biases],
                   self.output, self.low, self.high)

    def touch(self) -> None:
        self.version += 1


def init_mlp(sizes, rng: np.random.Generator, output: str = "identity",
             low=None, high=None) -> MLP:
    """Uniform init in +-1/sqrt(fan_in) for weights and biases."""
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = 1.0 / np.sqrt(fan_in)
        ws.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        bs.append(rng.uniform(-lim, lim, size=fan_out))
    return MLP(ws, bs, output, low, high)


@dataclass
class Cache:
    net_id: int
    version: int
    single: bool
    inputs: list[np.ndarray]      # input to each layer
    pre: list[np.ndarray]         # pre-activations
    out: np.ndarray = field(repr=False, default=None)


def mlp_forward(net: MLP, x) -> tuple[np.ndarray, Cache]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.sizes[0]:
        raise ValueError(f"input shape {x.shape} does not match network input {net.sizes[0]}")
    inputs, pre = [], []
    h = x
    last = len(net.weights) - 1
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(h)
        z = h @ W + b
        pre.append(z)
        h = np.maximum(z, 0.0) if k < last else z
    if net.output == "tanh_box":
        t = np.tanh(h)
        y = net.low + 0.5 * (t + 1.0) * (net.high - net.low)
    else:
        t = h
        y = h
    cache = Cache(id(net), net.version, single, inputs, pre, t)
    return (y[0] if single else y), cache


def mlp_gradients(net: MLP, cache: Cache, upstream) -> tuple[list[np.ndarray], np.ndarray]:
    """Reverse-mode gradients: (``[dW0, db0, dW1, db1, ...]``, ``dL/dx``).

    Gradients are summed over the batch rows.
    """
    if cache.net_id != id(net) or cache.version != net.version:
        raise ValueError("stale cache: network changed since the forward pass")
    g = np.asarray(upstream, dtype=np.float64)
    if cache.single:
        g = g[None, :]
    if g.shape != cache.pre[-1].shape:
        raise ValueError(f"upstream shape {g.shape} != output shape {cache.pre[-1].shape}")
    if net.output == "tanh_box":
        g = g * 0.5 * (net.high - net.low) * (1.0 - cache.out ** 2)
    grads: list[np.ndarray] = [None] * (2 * len(net.weights))
    for k in range(len(net.weights) - 1, -1, -1):
        if k < len(net.weights) - 1:
            g = g * (cache.pre[k] > 0.0)
        grads[2 * k] = cache.inputs[k].T @ g
        grads[2 * k + 1] = g.sum(axis=0)
        g = g @ net.weights[k].T
    return grads, (g[0] if cache.single else g)


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def step(self, net: MLP, grads: list[np.ndarray]) -> None:
        params = net.params()
        if len(grads) != len(params):
            raise ValueError("gradient list does not match parameters")
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        net.touch()


def soft_update(target: MLP, learned: MLP, tau: float) -> None:
    """In place: ``target <- tau * learned + (1 - tau) * target``."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must be in [0, 1]")
    if target.sizes != learned.sizes:
        raise ValueError(f"shape mismatch {target.sizes} vs {learned.sizes}")
    for pt, pl in zip(target.params(), learned.params()):
        pt *= 1.0 - tau
        pt += tau * pl
    target.touch()
