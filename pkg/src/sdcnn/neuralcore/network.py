"""Branched feed-forward graphs.

A :class:`Network` is a set of input branches whose outputs are concatenated
along the feature axis and passed through a shared head. A plain sequential
model is simply a network with one branch and the layers split between the
branch and the head.
"""
from __future__ import annotations

import numpy as np

from .layers import Layer, ShapeError


class Sequential:
    def __init__(self, layers: list[Layer]):
        self.layers = list(layers)

    def forward(self, x, mode="off", rng=None, update_stats=True):
        for layer in self.layers:
            x = layer.forward(x, mode=mode, rng=rng, update_stats=update_stats)
        return x

    def backward(self, g):
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g


class Network:
    def __init__(self, branches: list[Sequential], head: Sequential, branch_names: list[str] | None = None):
        if not branches:
            raise ValueError("a network needs at least one branch")
        self.branches = branches
        self.head = head
        self.branch_names = branch_names or [f"branch{i}" for i in range(len(branches))]
        # raw inputs never need a gradient
        for br in branches:
            if br.layers:
                br.layers[0].need_input_grad = False

    # parameter bookkeeping -------------------------------------------------
    def named_layers(self):
        for name, br in zip(self.branch_names, self.branches):
            for i, layer in enumerate(br.layers):
                yield f"{name}.{i}", layer
        for i, layer in enumerate(self.head.layers):
            yield f"head.{i}", layer

    def parameters(self) -> dict[str, np.ndarray]:
        return {f"{ln}.{k}": v for ln, layer in self.named_layers() for k, v in layer.params.items()}

    def gradients(self) -> dict[str, np.ndarray]:
        return {f"{ln}.{k}": layer.grads[k] for ln, layer in self.named_layers() for k in layer.params}

    def buffers(self) -> dict[str, np.ndarray]:
        return {f"{ln}.{k}": v for ln, layer in self.named_layers() for k, v in layer.state.items()}

    def get_weights(self) -> dict[str, np.ndarray]:
        """Deep copy of parameters and buffers."""
        out = {k: v.copy() for k, v in self.parameters().items()}
        out.update({k: v.copy() for k, v in self.buffers().items()})
        return out

    def set_weights(self, weights: dict[str, np.ndarray]) -> None:
        for ln, layer in self.named_layers():
            for store in (layer.params, layer.state):
                for k in store:
                    key = f"{ln}.{k}"
                    if key not in weights:
                        raise KeyError(f"missing weight {key}")
                    if weights[key].shape != store[k].shape:
                        raise ShapeError(f"{key}: expected {store[k].shape}, got {weights[key].shape}")
                    store[k] = np.array(weights[key], dtype=np.float64, copy=True)

    def n_parameters(self) -> int:
        return sum(v.size for v in self.parameters().values())

    # passes ------------------------------------------------------------------
    def forward(self, inputs, mode="off", rng=None, update_stats=True) -> np.ndarray:
        if len(inputs) != len(self.branches):
            raise ShapeError(f"expected {len(self.branches)} inputs, got {len(inputs)}")
        outs = [br.forward(x, mode=mode, rng=rng, update_stats=update_stats) for br, x in zip(self.branches, inputs)]
        self._widths = [o.shape[1] for o in outs]
        h = outs[0] if len(outs) == 1 else np.concatenate(outs, axis=1)
        return self.head.forward(h, mode=mode, rng=rng, update_stats=update_stats)

    def backward(self, g) -> None:
        g = self.head.backward(g)
        start = 0
        for br, w in zip(self.branches, self._widths):
            br.backward(g[:, start:start + w])
            start += w

    def predict(self, inputs, mode="off", rng=None, batch_size=2048) -> np.ndarray:
        """Forward in chunks without touching batch-norm statistics; returns shape (N,)."""
        if mode == "train":
            raise ValueError("predict does not run in train mode")
        n = len(inputs[0])
        out = np.empty(n)
        for start in range(0, n, batch_size):
            chunk = [x[start:start + batch_size] for x in inputs]
            out[start:start + batch_size] = self.forward(chunk, mode=mode, rng=rng).reshape(-1)
        return out


def quadratic_loss(pred, obs) -> float:
    """Mean squared difference."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    obs = np.asarray(obs, dtype=np.float64).reshape(-1)
    if pred.shape != obs.shape:
        raise ShapeError(f"length mismatch: {pred.shape} vs {obs.shape}")
    r = pred - obs
    return float(np.mean(r * r))


def quadratic_loss_grad(pred, obs) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    obs = np.asarray(obs, dtype=np.float64).reshape(pred.shape)
    return 2.0 * (pred - obs) / pred.shape[0]


def loss_and_backward(net: Network, inputs, y, mode="train", rng=None, update_stats=True) -> float:
    """One forward/backward pass; leaves gradients on the layers."""
    pred = net.forward(inputs, mode=mode, rng=rng, update_stats=update_stats)
    y = np.asarray(y, dtype=np.float64).reshape(pred.shape)
    loss = quadratic_loss(pred, y)
    net.backward(quadratic_loss_grad(pred, y))
    return loss
