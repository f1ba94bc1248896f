"""Stacked recurrent networks (simple RNN and LSTM cells) trained by
backpropagation through time, with dense heads for point or Gaussian output."""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from ..core import ContractError
from .base import Model, glorot_uniform, relu, relu_grad, sigmoid, softplus

SIGMA_FLOOR = 1e-6


class _RnnLayer:
    def __init__(self, d_in: int, hidden: int, activation: str, rng):
        self.activation = activation
        self.wx = glorot_uniform(rng, d_in, hidden)
        self.wh = glorot_uniform(rng, hidden, hidden)
        self.b = np.zeros(hidden)

    def parameters(self):
        return [self.wx, self.wh, self.b]

    def forward(self, x):
        n, t_len, _ = x.shape
        hidden = self.b.size
        h = np.zeros((n, hidden))
        pre, states = [], []
        for t in range(t_len):
            z = x[:, t, :] @ self.wx + h @ self.wh + self.b
            h = relu(z) if self.activation == "relu" else np.tanh(z)
            pre.append(z)
            states.append(h)
        cache = (x, pre, states)
        return np.stack(states, axis=1), cache

    def backward(self, d_out, cache):
        x, pre, states = cache
        n, t_len, _ = x.shape
        dwx = np.zeros_like(self.wx)
        dwh = np.zeros_like(self.wh)
        db = np.zeros_like(self.b)
        dx = np.zeros_like(x)
        dh = np.zeros((n, self.b.size))
        for t in range(t_len - 1, -1, -1):
            dh_total = d_out[:, t, :] + dh
            if self.activation == "relu":
                dz = dh_total * relu_grad(pre[t])
            else:
                dz = dh_total * (1.0 - states[t] ** 2)
            h_prev = states[t - 1] if t > 0 else np.zeros_like(dh)
            dwx += x[:, t, :].T @ dz
            dwh += h_prev.T @ dz
            db += dz.sum(axis=0)
            dx[:, t, :] = dz @ self.wx.T
            dh = dz @ self.wh.T
        return dx, [dwx, dwh, db]


class _LstmLayer:
    def __init__(self, d_in: int, hidden: int, rng):
        self.hidden = hidden
        self.wx = glorot_uniform(rng, d_in, 4 * hidden, shape=(d_in, 4 * hidden))
        self.wh = glorot_uniform(rng, hidden, 4 * hidden, shape=(hidden, 4 * hidden))
        self.b = np.zeros(4 * hidden)

    def parameters(self):
        return [self.wx, self.wh, self.b]

    def forward(self, x):
        n, t_len, _ = x.shape
        hdim = self.hidden
        h = np.zeros((n, hdim))
        c = np.zeros((n, hdim))
        gates, cells, states = [], [], []
        for t in range(t_len):
            z = x[:, t, :] @ self.wx + h @ self.wh + self.b
            i = sigmoid(z[:, :hdim])
            f = sigmoid(z[:, hdim : 2 * hdim])
            g = np.tanh(z[:, 2 * hdim : 3 * hdim])
            o = sigmoid(z[:, 3 * hdim :])
            c = f * c + i * g
            h = o * np.tanh(c)
            gates.append((i, f, g, o))
            cells.append(c)
            states.append(h)
        cache = (x, gates, cells, states)
        return np.stack(states, axis=1), cache

    def backward(self, d_out, cache):
        x, gates, cells, states = cache
        n, t_len, _ = x.shape
        hdim = self.hidden
        dwx = np.zeros_like(self.wx)
        dwh = np.zeros_like(self.wh)
        db = np.zeros_like(self.b)
        dx = np.zeros_like(x)
        dh = np.zeros((n, hdim))
        dc = np.zeros((n, hdim))
        for t in range(t_len - 1, -1, -1):
            i, f, g, o = gates[t]
            c = cells[t]
            c_prev = cells[t - 1] if t > 0 else np.zeros_like(c)
            h_prev = states[t - 1] if t > 0 else np.zeros((n, hdim))
            dh_total = d_out[:, t, :] + dh
            tc = np.tanh(c)
            do = dh_total * tc
            dct = dc + dh_total * o * (1.0 - tc * tc)
            di = dct * g
            df = dct * c_prev
            dg = dct * i
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            dwx += x[:, t, :].T @ dz
            dwh += h_prev.T @ dz
            db += dz.sum(axis=0)
            dx[:, t, :] = dz @ self.wx.T
            dh = dz @ self.wh.T
            dc = dct * f
        return dx, [dwx, dwh, db]


class RecurrentNet(Model):
    """Stacked recurrent layers over a univariate window, followed by a dense
    head on the final hidden state.

    loss 'mse' gives a point forecaster; 'gaussian_nll' makes the head emit
    (mu, raw_sigma) with sigma = softplus(raw_sigma) + 1e-6.
    """

    def __init__(
        self,
        cell: str,
        hidden_sizes: Sequence[int],
        head_sizes: Sequence[int],
        loss: str,
        rng,
        activation: str = "relu",
    ):
        if cell not in ("rnn", "lstm"):
            raise ContractError(f"unknown cell '{cell}'")
        if loss not in ("mse", "gaussian_nll"):
            raise ContractError(f"unknown loss '{loss}'")
        self.cell = cell
        self.loss = loss
        self.layers = []
        d_in = 1
        for hdim in hidden_sizes:
            if cell == "lstm":
                self.layers.append(_LstmLayer(d_in, hdim, rng))
            else:
                self.layers.append(_RnnLayer(d_in, hdim, activation, rng))
            d_in = hdim
        out_dim = 2 if loss == "gaussian_nll" else 1
        self.head_weights = []
        self.head_biases = []
        for width in list(head_sizes) + [out_dim]:
            self.head_weights.append(glorot_uniform(rng, d_in, width))
            self.head_biases.append(np.zeros(width))
            d_in = width

    def parameters(self) -> List[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.parameters())
        for w, b in zip(self.head_weights, self.head_biases):
            out.append(w)
            out.append(b)
        return out

    def _forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[:, :, None]
        seq = x
        caches = []
        for layer in self.layers:
            seq, cache = layer.forward(seq)
            caches.append(cache)
        a = seq[:, -1, :]
        head_acts = [a]
        head_pre = []
        last = len(self.head_weights) - 1
        for i, (w, b) in enumerate(zip(self.head_weights, self.head_biases)):
            z = a @ w + b
            head_pre.append(z)
            a = z if i == last else relu(z)
            head_acts.append(a)
        return a, (x, caches, head_acts, head_pre)

    def predict(self, x) -> np.ndarray:
        out, _ = self._forward(x)
        if self.loss == "gaussian_nll":
            return out[:, 0]
        return out[:, 0]

    def predict_distribution(self, x):
        if self.loss != "gaussian_nll":
            raise ContractError("distribution output requires the Gaussian head")
        out, _ = self._forward(x)
        mu = out[:, 0]
        sigma = softplus(out[:, 1]) + SIGMA_FLOOR
        return mu, sigma

    def loss_and_grad(self, x, y) -> Tuple[float, List[np.ndarray]]:
        out, (x3, caches, head_acts, head_pre) = self._forward(x)
        y = np.asarray(y, dtype=np.float64).ravel()
        n = out.shape[0]
        if self.loss == "mse":
            diff = out[:, 0] - y
            loss = float(np.mean(diff * diff))
            delta = (2.0 * diff / n)[:, None]
        else:
            mu = out[:, 0]
            raw = out[:, 1]
            sigma = softplus(raw) + SIGMA_FLOOR
            resid = y - mu
            loss = float(
                np.mean(0.5 * np.log(2.0 * np.pi * sigma * sigma) + resid * resid / (2.0 * sigma * sigma))
            )
            dmu = (mu - y) / (sigma * sigma) / n
            dsigma = (1.0 / sigma - resid * resid / sigma**3) / n
            draw = dsigma * sigmoid(raw)
            delta = np.column_stack([dmu, draw])
        head_grads = []
        for i in range(len(self.head_weights) - 1, -1, -1):
            head_grads.append(np.sum(delta, axis=0))
            head_grads.append(head_acts[i].T @ delta)
            if i > 0:
                delta = (delta @ self.head_weights[i].T) * relu_grad(head_pre[i - 1])
        head_grads.reverse()
        d_final = delta @ self.head_weights[0].T
        t_len = x3.shape[1]
        d_seq = np.zeros((n, t_len, d_final.shape[1]))
        d_seq[:, -1, :] = d_final
        layer_grads = []
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            d_seq, grads = layer.backward(d_seq, cache)
            layer_grads = grads + layer_grads
        return loss, layer_grads + head_grads
