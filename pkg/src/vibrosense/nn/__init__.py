from .base import (
    Model,
    finite_difference_gradients,
    glorot_uniform,
    gradient_check,
    relu,
    sgd_epochs,
    sigmoid,
    softmax,
    softplus,
)
from .conv import ConvAutoencoder
from .dense import Mlp
from .recurrent import RecurrentNet

__all__ = [
    "Model",
    "Mlp",
    "RecurrentNet",
    "ConvAutoencoder",
    "glorot_uniform",
    "gradient_check",
    "finite_difference_gradients",
    "sgd_epochs",
    "relu",
    "sigmoid",
    "softmax",
    "softplus",
]
