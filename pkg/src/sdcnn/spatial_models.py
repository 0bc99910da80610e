"""The three spatial regressors: coordinate-only DNN, DeepKriging and SDCNN.

All three share one decoration rule for hidden fully connected layers: a
dropout site in front of the weight layer (unless the layer reads raw model
inputs), ReLU, then batch normalization. The output layer is a single linear
unit preceded by dropout.

Layouts with default widths ``N_h = 100`` and ``n_F = 128``::

    baseline_dnn   coords(2) -> FC 100 -> FC 100 -> FC 100 -> FC 100 -> out
    deepkriging    [coords, basis vector](2 + K) -> FC 100 -> FC 100 -> FC 100 -> out
    sdcnn          per resolution: image -> conv 2x2 x n_F -> flatten -> FC x3
                   coords(2) -> FC x3
                   concat((R + 1) * N_h) -> out
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basisgen import Kernel, Resolution, basis_images, basis_vectors
from .neuralcore import BatchNorm, Conv2D, Dense, Dropout, Flatten, Network, Sequential, ShapeError

KINDS = ("baseline_dnn", "deepkriging", "sdcnn")


@dataclass
class ModelSpec:
    kind: str
    hidden_width: int = 100
    n_filters: int = 128
    dropout_rate: float = 0.1
    resolutions: list[Resolution] = field(default_factory=list)
    kernel: Kernel = field(default_factory=Kernel)
    n_covariates: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.hidden_width < 1 or self.n_filters < 1:
            raise ValueError("hidden_width and n_filters must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.kind != "baseline_dnn" and not self.resolutions:
            raise ValueError(f"{self.kind} needs at least one basis resolution")


@dataclass
class ModelInput:
    """Batched model inputs; only the fields the model kind reads are populated."""

    coords: np.ndarray
    basis_vector: np.ndarray | None = None
    basis_images: list[np.ndarray] | None = None
    covariates: np.ndarray | None = None

    def __len__(self):
        return len(self.coords)

    @classmethod
    def from_coords(cls, spec: ModelSpec, coords, covariates=None) -> "ModelInput":
        """Evaluate whatever basis representation ``spec`` needs at scaled ``coords``."""
        coords = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
        vec = imgs = None
        if spec.kind == "deepkriging":
            vec = basis_vectors(coords, spec.resolutions, spec.kernel)
        elif spec.kind == "sdcnn":
            imgs = [basis_images(coords, r, spec.kernel) for r in spec.resolutions]
        cov = None if covariates is None else np.asarray(covariates, dtype=np.float64).reshape(len(coords), -1)
        return cls(coords, vec, imgs, cov)

    def subset(self, idx) -> "ModelInput":
        return ModelInput(
            self.coords[idx],
            None if self.basis_vector is None else self.basis_vector[idx],
            None if self.basis_images is None else [im[idx] for im in self.basis_images],
            None if self.covariates is None else self.covariates[idx],
        )


def _hidden_stack(in_dim, width, depth, p, rng, first_reads_raw):
    layers = []
    for i in range(depth):
        if i > 0 or not first_reads_raw:
            layers.append(Dropout(p))
        layers.append(Dense(in_dim if i == 0 else width, width, "relu", rng))
        layers.append(BatchNorm(width))
    return layers


def _output_head(in_dim, p, rng):
    return Sequential([Dropout(p), Dense(in_dim, 1, "identity", rng)])


class SpatialModel:
    """A built network together with the spec that says how to feed it."""

    def __init__(self, spec: ModelSpec, network: Network):
        self.spec = spec
        self.network = network

    def network_inputs(self, inp: ModelInput) -> list[np.ndarray]:
        kind = self.spec.kind
        coords = inp.coords
        if self.spec.n_covariates:
            if inp.covariates is None or inp.covariates.shape[1] != self.spec.n_covariates:
                raise ShapeError(f"model expects {self.spec.n_covariates} covariates")
            coords = np.concatenate([coords, inp.covariates], axis=1)
        if kind == "baseline_dnn":
            return [coords]
        if kind == "deepkriging":
            if inp.basis_vector is None:
                raise ShapeError("deepkriging needs basis_vector")
            return [np.concatenate([coords, inp.basis_vector], axis=1)]
        if inp.basis_images is None or len(inp.basis_images) != len(self.spec.resolutions):
            raise ShapeError(f"sdcnn needs {len(self.spec.resolutions)} basis images per location")
        return list(inp.basis_images) + [coords]

    def shape_manifest(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(k, v.shape) for k, v in self.network.parameters().items()]

    def dense_shapes(self) -> list[tuple[int, int]]:
        return [v.shape for k, v in self.network.parameters().items() if k.endswith(".W")]


def build_baseline_dnn(spec: ModelSpec, rng=None) -> SpatialModel:
    if spec.kind != "baseline_dnn":
        raise ValueError("spec.kind must be baseline_dnn")
    w = spec.hidden_width
    branch = Sequential(_hidden_stack(2 + spec.n_covariates, w, 4, spec.dropout_rate, rng, True))
    return SpatialModel(spec, Network([branch], _output_head(w, spec.dropout_rate, rng), ["coords"]))


def build_deepkriging(spec: ModelSpec, rng=None) -> SpatialModel:
    if spec.kind != "deepkriging":
        raise ValueError("spec.kind must be deepkriging")
    w = spec.hidden_width
    in_dim = 2 + spec.n_covariates + sum(r.n_knots for r in spec.resolutions)
    branch = Sequential(_hidden_stack(in_dim, w, 3, spec.dropout_rate, rng, True))
    return SpatialModel(spec, Network([branch], _output_head(w, spec.dropout_rate, rng), ["inputs"]))


def build_sdcnn(spec: ModelSpec, rng=None) -> SpatialModel:
    if spec.kind != "sdcnn":
        raise ValueError("spec.kind must be sdcnn")
    w, nf, p = spec.hidden_width, spec.n_filters, spec.dropout_rate
    branches, names = [], []
    for res in spec.resolutions:
        if res.rows < 2 or res.cols < 2:
            raise ShapeError(f"resolution {res.level} image {res.rows}x{res.cols} is smaller than the 2x2 filter")
        flat = nf * (res.rows - 1) * (res.cols - 1)
        layers = [Conv2D(nf, "relu", rng), Flatten()] + _hidden_stack(flat, w, 3, p, rng, False)
        branches.append(Sequential(layers))
        names.append(f"basis{res.level}")
    branches.append(Sequential(_hidden_stack(2 + spec.n_covariates, w, 3, p, rng, True)))
    names.append("coords")
    head = _output_head(w * len(branches), p, rng)
    return SpatialModel(spec, Network(branches, head, names))


_BUILDERS = {"baseline_dnn": build_baseline_dnn, "deepkriging": build_deepkriging, "sdcnn": build_sdcnn}


def build_model(spec: ModelSpec, rng=None) -> SpatialModel:
    return _BUILDERS[spec.kind](spec, rng)


def forward(model: SpatialModel, inp: ModelInput, mode: str = "off", rng=None) -> np.ndarray:
    """Predictions for every row of ``inp``, shape (N,)."""
    return model.network.predict(model.network_inputs(inp), mode=mode, rng=rng)


def mc_predict(model: SpatialModel, inp: ModelInput, n_samples: int = 100, rng=None) -> np.ndarray:
    """Monte-Carlo dropout ensemble, shape (N, n_samples).

    Each column is one full pass over the inputs with freshly drawn dropout
    masks; batch normalization stays on its running statistics.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    xs = model.network_inputs(inp)
    out = np.empty((len(inp), n_samples))
    for s in range(n_samples):
        out[:, s] = model.network.predict(xs, mode="mc_predict", rng=rng)
    return out
