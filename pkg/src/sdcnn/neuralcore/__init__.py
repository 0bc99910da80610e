"""Small deterministic numpy deep-learning engine (float64 throughout)."""
import numpy as np

from .layers import (
    ACTIVATIONS,
    BatchNorm,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    ShapeError,
    concat,
    flatten,
    identity,
    relu,
    sigmoid,
)
from .network import Network, Sequential, loss_and_backward, quadratic_loss, quadratic_loss_grad
from .optim import AdamState, adam_step
from .serialize import load_weights, save_weights
from .training import TrainConfig, TrainHistory, TrainingError, train


def dense_forward(layer: Dense, x) -> np.ndarray:
    """Apply a dense layer to a single vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-D input, got shape {x.shape}")
    return layer.forward(x[None, :])[0]


def conv2d_forward(layer: Conv2D, image) -> np.ndarray:
    """Apply a conv layer to a single ``n x m`` image; returns ``(n_F, n-1, m-1)``."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ShapeError(f"expected a 2-D image, got shape {image.shape}")
    return layer.forward(image[None])[0]


def dropout_apply(site: Dropout, h, rng=None, mode="train") -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    return site.forward(h, mode=mode, rng=rng)


def batchnorm_forward(state: BatchNorm, batch, training: bool) -> np.ndarray:
    return state.forward(batch, mode="train" if training else "off")


__all__ = [
    "ACTIVATIONS", "AdamState", "BatchNorm", "Conv2D", "Dense", "Dropout", "Flatten", "Layer",
    "Network", "Sequential", "ShapeError", "TrainConfig", "TrainHistory", "TrainingError",
    "adam_step", "batchnorm_forward", "concat", "conv2d_forward", "dense_forward", "dropout_apply",
    "flatten", "identity", "load_weights", "loss_and_backward", "quadratic_loss", "quadratic_loss_grad",
    "relu", "save_weights", "sigmoid", "train",
]
