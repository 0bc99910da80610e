from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels


@dataclass
class AdamState:
    """Bias-corrected Adam (Kingma & Ba) over a dict of named arrays."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update ``params`` in place."""
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for k, p in params.items():
            g = grads[k]
            if g.shape != p.shape:
                raise ValueError(f"{k}: grad shape {g.shape} != param shape {p.shape}")
            m = self.first_moment.get(k)
            if m is None:
                m = self.first_moment[k] = np.zeros_like(p)
                self.second_moment[k] = np.zeros_like(p)
            _kernels.adam_update(p.reshape(-1), np.ascontiguousarray(g).reshape(-1), m.reshape(-1),
                                 self.second_moment[k].reshape(-1), self.learning_rate, self.beta1,
                                 self.beta2, c1, c2, self.eps)


def adam_step(state: AdamState, params, grads):
    state.step(params, grads)
    return params
