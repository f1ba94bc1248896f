"""Dense feed-forward network with MSE or softmax cross-entropy heads."""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from ..core import ContractError
from .base import Model, glorot_uniform, relu, relu_grad, softmax


class Mlp(Model):
    """ReLU hidden layers; the head is linear for regression ('mse') or
    softmax cross-entropy for classification ('ce')."""

    def __init__(self, layer_sizes: Sequence[int], loss: str, rng: np.random.Generator):
        if len(layer_sizes) < 2 or any(s < 1 for s in layer_sizes):
            raise ContractError("layer_sizes needs >= 2 positive entries")
        if loss not in ("mse", "ce"):
            raise ContractError(f"unknown loss '{loss}'")
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.loss = loss
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            self.weights.append(glorot_uniform(rng, fan_in, fan_out))
            self.biases.append(np.zeros(fan_out))

    def parameters(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def _forward(self, x: np.ndarray):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.layer_sizes[0]:
            raise ContractError(
                f"expected input width {self.layer_sizes[0]}, got {x.shape[1]}"
            )
        activations = [x]
        pre = []
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = z if i == last else relu(z)
            activations.append(a)
        return activations, pre

    def logits(self, x: np.ndarray) -> np.ndarray:
        activations, _ = self._forward(x)
        return activations[-1]

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = self.logits(x)
        if self.loss == "ce":
            return softmax(out)
        return out

    def loss_and_grad(self, x: np.ndarray, y: np.ndarray) -> Tuple[float, List[np.ndarray]]:
        activations, pre = self._forward(x)
        out = activations[-1]
        n = out.shape[0]
        if self.loss == "mse":
            y = np.asarray(y, dtype=np.float64).reshape(out.shape)
            diff = out - y
            loss = float(np.mean(diff * diff))
            delta = 2.0 * diff / diff.size
        else:
            y = np.asarray(y, dtype=np.int64).ravel()
            probs = softmax(out)
            loss = float(-np.mean(np.log(probs[np.arange(n), y] + 1e-300)))
            delta = probs.copy()
            delta[np.arange(n), y] -= 1.0
            delta /= n
        grads = []
        for i in range(len(self.weights) - 1, -1, -1):
            grads.append(np.sum(delta, axis=0))  # bias
            grads.append(activations[i].T @ delta)  # weight
            if i > 0:
                delta = (delta @ self.weights[i].T) * relu_grad(pre[i - 1])
        grads.reverse()
        return loss, grads

    def clone(self) -> "Mlp":
        dummy = np.random.default_rng(0)
        copy = Mlp(self.layer_sizes, self.loss, dummy)
        copy.weights = [w.copy() for w in self.weights]
        copy.biases = [b.copy() for b in self.biases]
        return copy
