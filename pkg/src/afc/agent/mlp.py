"""Dense tanh networks with hand-written backpropagation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from afc.errors import InputError


@dataclass
class MlpParams:
    weights: list
    biases: list
    activations: tuple

    @classmethod
    def init(cls, sizes, rng, out_scale=1.0):
        """Scaled-normal initialisation; ``out_scale`` shrinks the output layer."""
        weights, biases = [], []
        for k, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            gain = out_scale if k == len(sizes) - 2 else 1.0
            weights.append(rng.normal(0.0, gain / np.sqrt(n_in), size=(n_in, n_out)))
            biases.append(np.zeros(n_out))
        acts = tuple(["tanh"] * (len(sizes) - 2) + ["linear"])
        return cls(weights, biases, acts)

    @classmethod
    def zeros(cls, sizes):
        weights = [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
        biases = [np.zeros(b) for b in sizes[1:]]
        return cls(weights, biases, tuple(["tanh"] * (len(sizes) - 2) + ["linear"]))

    @property
    def sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def tensors(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self):
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.activations)

    def is_finite(self):
        return all(np.all(np.isfinite(t)) for t in self.tensors())


def forward(params: MlpParams, x):
    """Return the network output and the activations needed by ``backward``."""
    x = np.asarray(x, dtype=float)
    n_in = params.weights[0].shape[0]
    if x.shape[-1] != n_in:
        raise InputError(f"network expects input size {n_in}, got {x.shape[-1]}")
    acts = [x]
    h = x
    for w, b, act in zip(params.weights, params.biases, params.activations):
        h = h @ w + b
        if act == "tanh":
            h = np.tanh(h)
        acts.append(h)
    return h, acts


def backward(params: MlpParams, acts, grad_out):
    """Gradients of a scalar loss w.r.t. all weights and biases.

    ``grad_out`` is dLoss/dOutput with the same batch shape as the output.
    """
    gw = [None] * len(params.weights)
    gb = [None] * len(params.biases)
    g = np.asarray(grad_out, dtype=float)
    for k in range(len(params.weights) - 1, -1, -1):
        if params.activations[k] == "tanh":
            g = g * (1.0 - acts[k + 1] ** 2)
        a = acts[k]
        if a.ndim == 1:
            gw[k] = np.outer(a, g)
            gb[k] = g.copy()
        else:
            gw[k] = a.T @ g
            gb[k] = g.sum(axis=0)
        if k > 0:
            g = g @ params.weights[k].T
    return gw, gb
