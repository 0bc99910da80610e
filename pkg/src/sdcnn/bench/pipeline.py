"""Fit-and-predict wrapper around a spatial model.

Everything derived from data (coordinate scaling, knot bounding box, response
standardization, batch-norm statistics) is fitted on the training rows only.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..basisgen import BasisConfig, Kernel, build_resolutions
from ..neuralcore import TrainConfig, TrainHistory, load_weights, save_weights, train
from ..spatial_models import ModelInput, ModelSpec, build_model, forward, mc_predict
from .data import ScaleState, minmax_scale


@dataclass
class ModelConfig:
    kind: str
    hidden_width: int = 100
    n_filters: int = 128
    dropout_rate: float = 0.1


@dataclass
class BasisOptions:
    """BasisConfig minus the bounding box, which comes from the training data."""

    num_resolutions: int = 3
    base_knots_per_axis: int = 3
    growth_factor: int = 2
    margin_fraction: float = 0.1
    scale_multiplier: float = 1.5
    kernel: str = "gaussian"
    squared_exponent: bool = False
    knot_budget: int = 4096

    def resolve(self, bbox) -> BasisConfig:
        return BasisConfig(bounding_box=tuple(bbox), **asdict(self))


class SpatialRegressor:
    def __init__(self, model: ModelConfig, basis: BasisOptions | None = None,
                 standardize_response: bool = True):
        self.model_config = model
        self.basis_options = basis or BasisOptions()
        self.standardize_response = standardize_response
        self.model = None
        self.scale_state: ScaleState | None = None
        self.basis_config: BasisConfig | None = None
        self.y_center, self.y_scale = 0.0, 1.0

    def _spec(self) -> ModelSpec:
        mc = self.model_config
        resolutions = [] if mc.kind == "baseline_dnn" else build_resolutions(self.basis_config)
        return ModelSpec(mc.kind, mc.hidden_width, mc.n_filters, mc.dropout_rate, resolutions,
                         self.basis_config.kernel_spec)

    def inputs(self, coords_raw) -> ModelInput:
        scaled, _ = minmax_scale(np.asarray(coords_raw, dtype=np.float64).reshape(-1, 2), self.scale_state)
        return ModelInput.from_coords(self.model.spec, scaled)

    def fit(self, coords_raw, y, train_config: TrainConfig, rng: np.random.Generator) -> TrainHistory:
        coords_raw = np.asarray(coords_raw, dtype=np.float64).reshape(-1, 2)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        scaled, self.scale_state = minmax_scale(coords_raw)
        lo, hi = scaled.min(axis=0), scaled.max(axis=0)
        self.basis_config = self.basis_options.resolve((lo[0], hi[0], lo[1], hi[1]))
        if self.standardize_response:
            self.y_center, self.y_scale = float(y.mean()), float(y.std())
            if self.y_scale == 0.0:
                self.y_scale = 1.0
        self.model = build_model(self._spec(), rng)
        inp = ModelInput.from_coords(self.model.spec, scaled)
        target = (y - self.y_center) / self.y_scale
        return train(self.model.network, self.model.network_inputs(inp), target, train_config, rng)

    def predict(self, coords_raw) -> np.ndarray:
        """Deterministic (dropout-off) predictions on the response scale."""
        return forward(self.model, self.inputs(coords_raw)) * self.y_scale + self.y_center

    def predict_samples(self, coords_raw, n_samples: int, rng: np.random.Generator) -> np.ndarray:
        return mc_predict(self.model, self.inputs(coords_raw), n_samples, rng) * self.y_scale + self.y_center

    # persistence -----------------------------------------------------------
    def save(self, path) -> None:
        meta = {
            "model": asdict(self.model_config),
            "basis": self.basis_config.to_dict(),
            "scale_state": self.scale_state.to_dict(),
            "y_center": self.y_center,
            "y_scale": self.y_scale,
            "standardize_response": self.standardize_response,
        }
        save_weights(path, self.model.network.get_weights(), meta)

    @classmethod
    def load(cls, path) -> "SpatialRegressor":
        weights, meta = load_weights(path)
        basis = dict(meta["basis"])
        bbox = basis.pop("bounding_box")
        reg = cls(ModelConfig(**meta["model"]), BasisOptions(**basis), meta["standardize_response"])
        reg.basis_config = reg.basis_options.resolve(bbox)
        reg.scale_state = ScaleState.from_dict(meta["scale_state"])
        reg.y_center, reg.y_scale = meta["y_center"], meta["y_scale"]
        reg.model = build_model(reg._spec())
        reg.model.network.set_weights(weights)
        return reg


__all__ = ["BasisOptions", "Kernel", "ModelConfig", "SpatialRegressor"]
