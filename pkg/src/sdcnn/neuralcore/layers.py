"""Layers for the numpy engine.

Every layer works on a batch whose leading axis is the sample axis, caches what
it needs during ``forward`` and returns the input gradient from ``backward``.
Trainable arrays live in ``params`` and their gradients in ``grads`` under the
same keys; non-trainable buffers (batch-norm running statistics) live in
``state``.

Forward modes
-------------
``"train"``       dropout active, batch norm uses batch statistics.
``"mc_predict"``  dropout active, batch norm uses running statistics.
``"off"``         deterministic inference.
"""
from __future__ import annotations

import numpy as np

from . import _kernels

MODES = ("train", "mc_predict", "off")


class ShapeError(ValueError):
    pass


def relu(x):
    return np.maximum(x, 0.0)


def sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def identity(x):
    return x


ACTIVATIONS = {"relu": relu, "sigmoid": sigmoid, "identity": identity}


def _activation_grad(name, z, a, g):
    if name == "relu":
        return g * (z > 0)
    if name == "sigmoid":
        return g * a * (1.0 - a)
    return g


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


class Layer:
    """Base class; parameter-free layers keep the empty dicts."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.state: dict[str, np.ndarray] = {}
        self.need_input_grad = True

    def forward(self, x, mode="off", rng=None, update_stats=True):
        raise NotImplementedError

    def backward(self, g):
        raise NotImplementedError

    def describe(self) -> dict:
        return {"type": type(self).__name__}


class Dense(Layer):
    """Affine map ``activation(x @ W + b)`` with ``W`` of shape (in_dim, out_dim)."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "relu", rng=None):
        super().__init__()
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.in_dim, self.out_dim, self.activation = in_dim, out_dim, activation
        if rng is None:
            W = np.zeros((in_dim, out_dim))
        elif activation == "relu":
            lim = np.sqrt(6.0 / in_dim)  # He uniform
            W = rng.uniform(-lim, lim, size=(in_dim, out_dim))
        else:
            lim = np.sqrt(6.0 / (in_dim + out_dim))  # Glorot uniform
            W = rng.uniform(-lim, lim, size=(in_dim, out_dim))
        self.params = {"W": W, "b": np.zeros(out_dim)}

    def forward(self, x, mode="off", rng=None, update_stats=True):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"Dense expects (B, {self.in_dim}), got {x.shape}")
        z = x @ self.params["W"] + self.params["b"]
        a = ACTIVATIONS[self.activation](z)
        self._cache = (x, z, a)
        return a

    def backward(self, g):
        x, z, a = self._cache
        gz = _activation_grad(self.activation, z, a, g)
        # gz^T x is a faster BLAS path than x^T gz for wide x
        self.grads["W"] = np.ascontiguousarray((gz.T @ x).T)
        self.grads["b"] = gz.sum(axis=0)
        if not self.need_input_grad:
            return None
        return gz @ self.params["W"].T

    def describe(self):
        return {"type": "Dense", "in_dim": self.in_dim, "out_dim": self.out_dim, "activation": self.activation}


class Conv2D(Layer):
    """Valid 2x2 correlation, stride 1, one input channel.

    ``out[b, l, p, q] = sum_{m,n in {0,1}} x[b, p+m, q+n] * F[l, m, n] + bias[l]``,
    accumulated in the order (0,0), (0,1), (1,0), (1,1) so a plain nested
    loop reproduces it bit for bit.
    """

    SIZE = 2

    def __init__(self, n_filters: int, activation: str = "relu", rng=None):
        super().__init__()
        if n_filters < 1:
            raise ValueError("n_filters must be >= 1")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.n_filters, self.activation = n_filters, activation
        if rng is None:
            F = np.zeros((n_filters, 2, 2))
        else:
            lim = np.sqrt(6.0 / 4.0)
            F = rng.uniform(-lim, lim, size=(n_filters, 2, 2))
        self.params = {"F": F, "b": np.zeros(n_filters)}

    def forward(self, x, mode="off", rng=None, update_stats=True):
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] < 2 or x.shape[2] < 2:
            raise ShapeError(f"Conv2D expects (B, n>=2, m>=2), got {x.shape}")
        relu_on = self.activation == "relu"
        z = _kernels.conv2x2_forward(x, self.params["F"], self.params["b"], relu_on)
        if not relu_on:
            z = ACTIVATIONS[self.activation](z)
        self._cache = (x, z)
        return z

    def backward(self, g):
        x, a = self._cache
        g = np.ascontiguousarray(g, dtype=np.float64)
        if self.activation == "sigmoid":
            g = g * a * (1.0 - a)
        relu_on = self.activation == "relu"
        self.grads["F"], self.grads["b"] = _kernels.conv2x2_param_grads(g, a, x, relu_on)
        if not self.need_input_grad:
            return None
        gz = g * (a > 0) if relu_on else g
        P, Q = gz.shape[2], gz.shape[3]
        F = self.params["F"]
        dx = np.zeros_like(x)
        for m in range(2):
            for n in range(2):
                dx[:, m:m + P, n:n + Q] += np.tensordot(gz, F[:, m, n], axes=([1], [0]))
        return dx

    def describe(self):
        return {"type": "Conv2D", "n_filters": self.n_filters, "activation": self.activation}


class Dropout(Layer):
    """Inverted dropout: each unit dropped with probability ``rate``, survivors scaled by 1/(1-rate)."""

    def __init__(self, rate: float):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate

    def forward(self, x, mode="off", rng=None, update_stats=True):
        _check_mode(mode)
        if mode == "off" or self.rate == 0.0:
            self._u = None
            return x
        if rng is None:
            raise ValueError("dropout in an active mode needs an rng")
        x = np.ascontiguousarray(x, dtype=np.float64)
        # uniforms drawn in float32 halve the RNG cost; keep iff u >= rate
        self._u = rng.random(x.shape, dtype=np.float32)
        return self._apply(x)

    def _apply(self, x):
        scale = 1.0 / (1.0 - self.rate)
        flat = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
        return _kernels.masked_scale(flat, self._u.reshape(-1), np.float32(self.rate), scale).reshape(x.shape)

    def backward(self, g):
        if self._u is None:
            return g
        return self._apply(g)

    def describe(self):
        return {"type": "Dropout", "rate": self.rate}


class BatchNorm(Layer):
    """Per-feature batch normalization over the sample axis.

    Running statistics follow ``running = momentum * running + (1 - momentum) * batch``
    and are used whenever ``mode`` is not ``"train"``.
    """

    def __init__(self, dim: int, epsilon: float = 1e-5, momentum: float = 0.99):
        super().__init__()
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < momentum < 1.0:
            raise ValueError("momentum must be in (0, 1)")
        self.dim, self.epsilon, self.momentum = dim, epsilon, momentum
        self.params = {"gamma": np.ones(dim), "beta": np.zeros(dim)}
        self.state = {"running_mean": np.zeros(dim), "running_var": np.ones(dim)}

    def forward(self, x, mode="off", rng=None, update_stats=True):
        _check_mode(mode)
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ShapeError(f"BatchNorm expects (B, {self.dim}), got {x.shape}")
        if mode == "train":
            if x.shape[0] < 2:
                raise ShapeError("batch normalization in training mode needs at least 2 samples")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            if update_stats:
                mom = self.momentum
                self.state["running_mean"] = mom * self.state["running_mean"] + (1 - mom) * mean
                self.state["running_var"] = mom * self.state["running_var"] + (1 - mom) * var
        else:
            mean, var = self.state["running_mean"], self.state["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (x - mean) * inv_std
        self._cache = (xhat, inv_std, mode == "train")
        return self.params["gamma"] * xhat + self.params["beta"]

    def backward(self, g):
        xhat, inv_std, batch_stats = self._cache
        self.grads["gamma"] = (g * xhat).sum(axis=0)
        self.grads["beta"] = g.sum(axis=0)
        gx = g * self.params["gamma"]
        if not batch_stats:
            return gx * inv_std
        B = g.shape[0]
        return inv_std / B * (B * gx - gx.sum(axis=0) - xhat * (gx * xhat).sum(axis=0))

    def describe(self):
        return {"type": "BatchNorm", "dim": self.dim, "epsilon": self.epsilon, "momentum": self.momentum}


class Flatten(Layer):
    """Row-major flattening of everything after the sample axis."""

    def forward(self, x, mode="off", rng=None, update_stats=True):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, g):
        return g.reshape(self._shape)


def flatten(t: np.ndarray) -> np.ndarray:
    return np.asarray(t).reshape(-1)


def concat(ts) -> np.ndarray:
    ts = [np.asarray(t) for t in ts]
    for t in ts:
        if t.ndim != 1:
            raise ShapeError(f"concat takes 1-D tensors, got shape {t.shape}")
    return np.concatenate(ts)
