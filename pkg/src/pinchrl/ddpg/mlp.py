"""Dense feed-forward networks with hand-written reverse mode.

Inputs are batched row-wise: ``x`` has shape ``(batch, in)``. A 1-D input is
treated as a batch of one and the output is returned 1-D.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

ACTIVATIONS = ("tanh", "identity")


class Mlp:
    """Rectifier hidden layers followed by a ``tanh`` or identity output."""

    def __init__(self, sizes: Sequence[int], output: str = "identity", params: list[np.ndarray] | None = None):
        if len(sizes) < 2:
            raise ValueError("an Mlp needs at least an input and an output size")
        if output not in ACTIVATIONS:
            raise ValueError(f"unknown output activation {output!r}")
        self.sizes = tuple(int(s) for s in sizes)
        self.output = output
        if params is None:
            params = [np.zeros(shape) for shape in self.param_shapes()]
        self.params = [np.asarray(p, dtype=np.float64) for p in params]
        for p, shape in zip(self.params, self.param_shapes()):
            if p.shape != shape:
                raise ValueError(f"parameter shape {p.shape} does not match {shape}")
        if len(self.params) != 2 * self.n_layers:
            raise ValueError("wrong number of parameter arrays")

    @classmethod
    def init(cls, sizes, output, rng: np.random.Generator, final_scale: float = 1.0) -> "Mlp":
        """Uniform ``+-1/sqrt(fan_in)`` weights and biases."""
        net = cls(sizes, output)
        for i, (fan_in, fan_out) in enumerate(zip(net.sizes[:-1], net.sizes[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            if i == net.n_layers - 1:
                bound *= final_scale
            net.params[2 * i] = rng.uniform(-bound, bound, (fan_in, fan_out))
            net.params[2 * i + 1] = rng.uniform(-bound, bound, fan_out)
        return net

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def param_shapes(self) -> list[tuple[int, ...]]:
        shapes = []
        for a, b in zip(self.sizes[:-1], self.sizes[1:]):
            shapes += [(a, b), (b,)]
        return shapes

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, self.output, [p.copy() for p in self.params])

    def same_architecture(self, other: "Mlp") -> bool:
        return self.sizes == other.sizes and self.output == other.output

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Return the output and the per-layer activations used by :meth:`backward`."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"input has {x.shape[1]} features, network expects {self.sizes[0]}")
        acts = [x]
        for i in range(self.n_layers):
            z = acts[-1] @ self.params[2 * i] + self.params[2 * i + 1]
            if i < self.n_layers - 1:
                z = np.maximum(z, 0.0)
            elif self.output == "tanh":
                z = np.tanh(z)
            acts.append(z)
        return acts[-1], acts

    def __call__(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward(x)
        return out[0] if np.ndim(x) == 1 else out

    def backward(
        self, acts: list[np.ndarray], upstream: np.ndarray, preact: np.ndarray | None = None
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """Gradients of ``sum(output * upstream)`` w.r.t. parameters and input.

        ``preact``, if given, is an extra gradient w.r.t. the output layer's
        pre-activation, added after the output nonlinearity.
        """
        g = np.asarray(upstream, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ValueError(f"upstream shape {g.shape} does not match output {acts[-1].shape}")
        if self.output == "tanh":
            g = g * (1.0 - acts[-1] ** 2)
        if preact is not None:
            g = g + preact
        grads: list[np.ndarray] = [None] * len(self.params)
        for i in reversed(range(self.n_layers)):
            if i < self.n_layers - 1:
                g = g * (acts[i + 1] > 0)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.params[2 * i].T
        return grads, g


def mlp_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    return net(x)


def mlp_backward(net: Mlp, x: np.ndarray, upstream: np.ndarray) -> list[np.ndarray]:
    _, acts = net.forward(x)
    grads, _ = net.backward(acts, upstream)
    return grads


def soft_update(target: Mlp, online: Mlp, tau: float) -> Mlp:
    """In-place ``theta' <- tau * theta + (1 - tau) * theta'``; returns ``target``."""
    if not target.same_architecture(online):
        raise ValueError("soft update between different architectures")
    for tp, op in zip(target.params, online.params):
        tp *= 1.0 - tau
        tp += tau * op
    return target


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}
