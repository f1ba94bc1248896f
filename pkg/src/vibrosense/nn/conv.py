"""1-D convolutional autoencoder (strided encoder, mirrored transposed-conv
decoder) used as a window-reconstruction forecaster."""

from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from ..core import ContractError
from .base import Model, glorot_uniform, relu, relu_grad


def _same_padding(length: int, kernel: int, stride: int) -> Tuple[int, int, int]:
    out_len = -(-length // stride)  # ceil
    pad_total = max((out_len - 1) * stride + kernel - length, 0)
    pad_left = pad_total // 2
    return out_len, pad_left, pad_total - pad_left


class _Conv1d:
    """Strided 'same'-padded 1-D convolution. Weight shape (kernel, c_in, c_out)."""

    def __init__(self, c_in: int, c_out: int, kernel: int, stride: int, rng):
        self.kernel = kernel
        self.stride = stride
        self.w = glorot_uniform(rng, kernel * c_in, c_out, shape=(kernel, c_in, c_out))
        self.b = np.zeros(c_out)

    def parameters(self):
        return [self.w, self.b]

    def forward(self, x):
        n, length, c_in = x.shape
        out_len, pad_left, pad_right = _same_padding(length, self.kernel, self.stride)
        xp = np.pad(x, ((0, 0), (pad_left, pad_right), (0, 0)))
        out = np.broadcast_to(self.b, (n, out_len, self.b.size)).copy()
        for u in range(self.kernel):
            sl = xp[:, u : u + out_len * self.stride : self.stride, :]
            out += sl @ self.w[u]
        return out, (xp, length, pad_left, out_len)

    def backward(self, d_out, cache):
        xp, length, pad_left, out_len = cache
        dw = np.zeros_like(self.w)
        db = d_out.sum(axis=(0, 1))
        dxp = np.zeros_like(xp)
        for u in range(self.kernel):
            sl = xp[:, u : u + out_len * self.stride : self.stride, :]
            dw[u] = np.einsum("nli,nlo->io", sl, d_out)
            dxp[:, u : u + out_len * self.stride : self.stride, :] += d_out @ self.w[u].T
        dx = dxp[:, pad_left : pad_left + length, :]
        return dx, [dw, db]


class _ConvTranspose1d:
    """Adjoint of a strided 'same'-padded convolution; doubles the length for
    stride 2. Weight shape (kernel, c_out, c_in) so forward is the
    backward-data pass of the matching convolution."""

    def __init__(self, c_in: int, c_out: int, kernel: int, stride: int, rng):
        self.kernel = kernel
        self.stride = stride
        self.w = glorot_uniform(rng, kernel * c_in, c_out, shape=(kernel, c_out, c_in))
        self.b = np.zeros(c_out)

    def parameters(self):
        return [self.w, self.b]

    def forward(self, x):
        n, in_len, _ = x.shape
        out_len = in_len * self.stride
        check_len, pad_left, pad_right = _same_padding(out_len, self.kernel, self.stride)
        if check_len != in_len:
            raise ContractError("transposed conv length mismatch")
        yp = np.zeros((n, out_len + pad_left + pad_right, self.b.size))
        for u in range(self.kernel):
            yp[:, u : u + in_len * self.stride : self.stride, :] += x @ np.swapaxes(self.w[u], 0, 1)
        out = yp[:, pad_left : pad_left + out_len, :] + self.b
        return out, (x, in_len, pad_left, pad_right, out_len)

    def backward(self, d_out, cache):
        x, in_len, pad_left, pad_right, out_len = cache
        db = d_out.sum(axis=(0, 1))
        dyp = np.pad(d_out, ((0, 0), (pad_left, pad_right), (0, 0)))
        dw = np.zeros_like(self.w)
        dx = np.zeros_like(x)
        for u in range(self.kernel):
            sl = dyp[:, u : u + in_len * self.stride : self.stride, :]
            dw[u] = np.einsum("nlo,nli->oi", sl, x)
            dx += sl @ self.w[u]
        return dx, [dw, db]


class ConvAutoencoder(Model):
    """Encoder: 3 strided ReLU convolutions with train-time dropout.
    Decoder mirrors them with transposed convolutions; the last layer is
    linear. Trained to reconstruct its input window (MSE)."""

    def __init__(
        self,
        window: int,
        filters: int = 32,
        kernel: int = 7,
        stride: int = 2,
        n_layers: int = 3,
        dropout: float = 0.2,
        rng: Optional[np.random.Generator] = None,
    ):
        if window < stride**n_layers:
            raise ContractError(f"window must be >= {stride ** n_layers}")
        if window % stride**n_layers != 0:
            raise ContractError(f"window must be a multiple of {stride ** n_layers}")
        self.window = window
        self.dropout = dropout
        self.encoder = []
        self.decoder = []
        c = 1
        for _ in range(n_layers):
            self.encoder.append(_Conv1d(c, filters, kernel, stride, rng))
            c = filters
        for i in range(n_layers):
            c_out = 1 if i == n_layers - 1 else filters
            self.decoder.append(_ConvTranspose1d(filters, c_out, kernel, stride, rng))
        self.train_mode = False
        self._dropout_rng: Optional[np.random.Generator] = None

    def parameters(self) -> List[np.ndarray]:
        out = []
        for layer in self.encoder + self.decoder:
            out.extend(layer.parameters())
        return out

    def set_training(self, on: bool, dropout_rng: Optional[np.random.Generator] = None):
        self.train_mode = on
        self._dropout_rng = dropout_rng

    def _forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[:, :, None]
        caches = []
        a = x
        for layer in self.encoder:
            z, cache = layer.forward(a)
            a = relu(z)
            mask = None
            if self.train_mode and self.dropout > 0:
                keep = 1.0 - self.dropout
                mask = (self._dropout_rng.random(a.shape) < keep) / keep
                a = a * mask
            caches.append((cache, z, mask))
        last = len(self.decoder) - 1
        dec_caches = []
        for i, layer in enumerate(self.decoder):
            z, cache = layer.forward(a)
            a = z if i == last else relu(z)
            dec_caches.append((cache, z))
        return a, x, caches, dec_caches

    def reconstruct(self, x) -> np.ndarray:
        out, _, _, _ = self._forward(x)
        return out[:, :, 0]

    def loss_and_grad(self, x, y=None) -> Tuple[float, List[np.ndarray]]:
        out, x3, enc_caches, dec_caches = self._forward(x)
        target = x3 if y is None else np.asarray(y, dtype=np.float64).reshape(x3.shape)
        diff = out - target
        loss = float(np.mean(diff * diff))
        delta = 2.0 * diff / diff.size
        dec_grads = []
        last = len(self.decoder) - 1
        for i in range(last, -1, -1):
            cache, z = dec_caches[i]
            if i != last:
                delta = delta * relu_grad(z)
            delta, grads = self.decoder[i].backward(delta, cache)
            dec_grads = grads + dec_grads
        enc_grads = []
        for i in range(len(self.encoder) - 1, -1, -1):
            cache, z, mask = enc_caches[i]
            if mask is not None:
                delta = delta * mask
            delta = delta * relu_grad(z)
            delta, grads = self.encoder[i].backward(delta, cache)
            enc_grads = grads + enc_grads
        return loss, enc_grads + dec_grads
