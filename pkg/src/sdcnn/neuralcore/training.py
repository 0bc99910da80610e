"""Mini-batch Adam training with validation-based early stopping."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .network import Network, loss_and_backward, quadratic_loss
from .optim import AdamState

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    batch_size: int = 256
    max_epochs: int = 100
    validation_fraction: float = 0.2
    patience: int = 20
    rng_seed: int = 0
    learning_rate: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = np.inf
    stopped_early: bool = False


def _take(inputs, idx):
    return [x[idx] for x in inputs]


def _batch_bounds(n: int, bs: int) -> list[tuple[int, int]]:
    starts = list(range(0, n, bs))
    # a trailing single-row batch has no batch variance; merge it into the previous one
    if len(starts) > 1 and n - starts[-1] == 1:
        starts.pop()
    return list(zip(starts, starts[1:] + [n]))


def train(net: Network, inputs, y, config: TrainConfig, rng: np.random.Generator | None = None) -> TrainHistory:
    """Fit ``net`` in place and leave it holding the best-validation snapshot.

    A ``validation_fraction`` share of the rows is held out once. Each epoch
    shuffles the remaining rows, walks them in mini-batches with dropout on,
    then scores the held-out rows deterministically. Parameters are snapshot
    whenever the validation loss strictly improves; training stops after
    ``max_epochs`` or once ``patience`` consecutive epochs fail to improve.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = len(y)
    if n == 0:
        raise TrainingError("empty dataset")
    if any(len(x) != n for x in inputs):
        raise TrainingError("inputs and responses disagree on the number of rows")
    if n < 2:
        raise TrainingError("need at least two rows to carve out a validation set")
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)

    perm = rng.permutation(n)
    n_val = min(max(1, int(round(config.validation_fraction * n))), n - 1)
    val_idx, fit_idx = np.sort(perm[:n_val]), perm[n_val:]
    val_inputs, val_y = _take(inputs, val_idx), y[val_idx]

    opt = AdamState(learning_rate=config.learning_rate)
    hist = TrainHistory()
    best = net.get_weights()
    wait = 0
    bounds = _batch_bounds(len(fit_idx), config.batch_size)
    for epoch in range(1, config.max_epochs + 1):
        order = fit_idx[rng.permutation(len(fit_idx))]
        total, count = 0.0, 0
        for start, stop in bounds:
            idx = order[start:stop]
            loss = loss_and_backward(net, _take(inputs, idx), y[idx], mode="train", rng=rng)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}, batch starting {start}")
            opt.step(net.parameters(), net.gradients())
            total += loss * len(idx)
            count += len(idx)
        val = quadratic_loss(net.predict(val_inputs, mode="off"), val_y)
        if not np.isfinite(val):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        hist.train_loss.append(total / count)
        hist.val_loss.append(val)
        if val < hist.best_val_loss:
            hist.best_val_loss, hist.best_epoch = val, epoch
            best = net.get_weights()
            wait = 0
        else:
            wait += 1
            if wait > config.patience:
                hist.stopped_early = True
                break
        log.debug("epoch %d train %.6g val %.6g", epoch, hist.train_loss[-1], val)
    net.set_weights(best)
    return hist
