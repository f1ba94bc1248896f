"""Window-based neural forecasters: dense, recurrent, LSTM, Gaussian-head
recurrent, and the convolutional reconstruction forecaster.

Series are z-scored on the training split before fitting and predictions are
mapped back to raw units; the classical models see raw values.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from ..core import ContractError, TimeSeries, make_rng
from ..nn import ConvAutoencoder, Mlp, RecurrentNet, sgd_epochs


def make_windows(values: np.ndarray, window: int):
    n_rows = values.size - window
    if n_rows < 1:
        raise ContractError(f"series too short: needs > window = {window} points")
    rows = np.empty((n_rows, window))
    for j in range(window):
        rows[:, j] = values[j : j + n_rows]
    return rows, values[window:]


class _WindowForecaster:
    """Shared fit/predict plumbing over (lag window -> next value) pairs."""

    def __init__(self, lag_window: int, epochs: int, batch_size: int, learning_rate: float, seed: int):
        self.lag_window = lag_window
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.net = None
        self.training_loss: List[float] = []
        self._mean = 0.0
        self._std = 1.0

    @property
    def min_context(self) -> int:
        return self.lag_window

    def _build(self, rng) -> None:
        raise NotImplementedError

    def fit(self, train: TimeSeries):
        values = train.values
        self._mean = float(np.mean(values))
        std = float(np.std(values))
        self._std = std if std > 0 else 1.0
        normed = (values - self._mean) / self._std
        x, y = make_windows(normed, self.lag_window)
        rng = make_rng(self.seed)
        self._build(rng)
        self.training_loss = sgd_epochs(
            self.net, x, y, self.epochs, self.batch_size, self.learning_rate, rng
        )
        return self

    def _predict_normed(self, window: np.ndarray) -> float:
        return float(np.ravel(self.net.predict(window[None, :]))[0])

    def predict_one_step(self, context) -> float:
        context = np.asarray(context, dtype=np.float64)
        if context.size < self.lag_window:
            raise ContractError(f"context must hold >= {self.lag_window} values")
        window = (context[-self.lag_window :] - self._mean) / self._std
        return self._predict_normed(window) * self._std + self._mean


class MlpForecaster(_WindowForecaster):
    def __init__(
        self,
        hidden_layers: int = 3,
        neurons: int = 50,
        learning_rate: float = 0.01,
        batch_size: int = 10,
        epochs: int = 5,
        lag_window: int = 10,
        seed: int = 0,
    ):
        super().__init__(lag_window, epochs, batch_size, learning_rate, seed)
        if hidden_layers < 1 or neurons < 1:
            raise ContractError("hidden_layers and neurons must be positive")
        self.hidden_layers = hidden_layers
        self.neurons = neurons

    def _build(self, rng):
        sizes = [self.lag_window] + [self.neurons] * self.hidden_layers + [1]
        self.net = Mlp(sizes, loss="mse", rng=rng)


class RnnForecaster(_WindowForecaster):
    def __init__(
        self,
        hidden_layers: int = 2,
        neurons: int = 100,
        learning_rate: float = 0.01,
        batch_size: int = 10,
        epochs: int = 5,
        lag_window: int = 10,
        seed: int = 0,
    ):
        super().__init__(lag_window, epochs, batch_size, learning_rate, seed)
        self.hidden_layers = hidden_layers
        self.neurons = neurons
        if lag_window < 2:
            raise ContractError("recurrent forecasters need lag_window >= 2")

    def _build(self, rng):
        self.net = RecurrentNet(
            cell="rnn",
            hidden_sizes=[self.neurons] * self.hidden_layers,
            head_sizes=[],
            loss="mse",
            rng=rng,
            activation="relu",
        )


class LstmForecaster(_WindowForecaster):
    """Stacked LSTM blocks with a small dense layer before the linear output."""

    def __init__(
        self,
        blocks: int = 4,
        neurons: int = 100,
        dense_units: int = 10,
        learning_rate: float = 0.005,
        batch_size: int = 10,
        epochs: int = 5,
        lag_window: int = 10,
        seed: int = 0,
    ):
        super().__init__(lag_window, epochs, batch_size, learning_rate, seed)
        self.blocks = blocks
        self.neurons = neurons
        self.dense_units = dense_units
        if lag_window < 2:
            raise ContractError("recurrent forecasters need lag_window >= 2")

    def _build(self, rng):
        self.net = RecurrentNet(
            cell="lstm",
            hidden_sizes=[self.neurons] * self.blocks,
            head_sizes=[self.dense_units],
            loss="mse",
            rng=rng,
        )


class GaussianRnnForecaster(_WindowForecaster):
    """Recurrent net emitting (mu, sigma) per window, trained by Gaussian
    negative log-likelihood; the point forecast is mu."""

    def __init__(
        self,
        hidden_layers: int = 3,
        cells: int = 30,
        learning_rate: float = 0.005,
        batch_size: int = 10,
        epochs: int = 5,
        lag_window: int = 10,
        seed: int = 0,
    ):
        super().__init__(lag_window, epochs, batch_size, learning_rate, seed)
        self.hidden_layers = hidden_layers
        self.cells = cells
        if lag_window < 2:
            raise ContractError("recurrent forecasters need lag_window >= 2")

    def _build(self, rng):
        self.net = RecurrentNet(
            cell="rnn",
            hidden_sizes=[self.cells] * self.hidden_layers,
            head_sizes=[],
            loss="gaussian_nll",
            rng=rng,
            activation="tanh",
        )

    def predict_distribution(self, context):
        context = np.asarray(context, dtype=np.float64)
        window = (context[-self.lag_window :] - self._mean) / self._std
        mu, sigma = self.net.predict_distribution(window[None, :])
        return float(mu[0]) * self._std + self._mean, float(sigma[0]) * self._std


class AutoencoderForecaster(_WindowForecaster):
    """Convolutional window autoencoder; the one-step forecast is the last
    element of the reconstruction of the window shifted forward by one slot
    (the unknown slot is padded with the latest observation)."""

    def __init__(
        self,
        window: int = 64,
        filters: int = 32,
        kernel: int = 7,
        n_layers: int = 3,
        dropout: float = 0.2,
        learning_rate: float = 0.01,
        batch_size: int = 10,
        epochs: int = 5,
        seed: int = 0,
    ):
        if window < 8:
            raise ContractError("autoencoder forecaster needs window >= 8")
        super().__init__(window, epochs, batch_size, learning_rate, seed)
        self.filters = filters
        self.kernel = kernel
        self.n_layers = n_layers
        self.dropout = dropout

    def _build(self, rng):
        self.net = ConvAutoencoder(
            window=self.lag_window,
            filters=self.filters,
            kernel=self.kernel,
            stride=2,
            n_layers=self.n_layers,
            dropout=self.dropout,
            rng=rng,
        )

    def fit(self, train: TimeSeries):
        values = train.values
        self._mean = float(np.mean(values))
        std = float(np.std(values))
        self._std = std if std > 0 else 1.0
        normed = (values - self._mean) / self._std
        n_rows = normed.size - self.lag_window + 1
        if n_rows < 1:
            raise ContractError(f"series too short: needs >= window = {self.lag_window} points")
        x = np.stack([normed[i : i + self.lag_window] for i in range(n_rows)])
        rng = make_rng(self.seed)
        self._build(rng)
        self.net.set_training(True, dropout_rng=make_rng(self.seed, 1))
        self.training_loss = sgd_epochs(
            self.net, x, x, self.epochs, self.batch_size, self.learning_rate, rng
        )
        self.net.set_training(False)
        return self

    def _predict_normed(self, window: np.ndarray) -> float:
        shifted = np.concatenate([window[1:], window[-1:]])
        recon = self.net.reconstruct(shifted[None, :])
        return float(recon[0, -1])
