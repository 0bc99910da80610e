"""End-to-end experiment runs: split, fit, MC-predict, score, export.

Config files are JSON mirroring :class:`ExperimentConfig`::

    {
      "data": {"source": "eggholder", "grid": {"n_x1": 60, "n_x2": 60,
               "bounds": [-500, 500, -500, 500]}},
      "models": [{"kind": "sdcnn"}, {"kind": "deepkriging"}],
      "basis": {"num_resolutions": 3, "kernel": "gaussian"},
      "train": {"batch_size": 256, "max_epochs": 100, "patience": 20},
      "split": {"type": "cv", "k": 5, "seed": 0},
      "n_mc_samples": 100,
      "alpha": 0.05,
      "surface_grid": {"n_x1": 40, "n_x2": 40},
      "seed": 0,
      "output_dir": "runs/eggholder"
    }

``data.source`` may instead be ``"csv"`` with a ``"path"``. ``split.type`` may
be ``"holdout"`` with a ``"rect"`` of raw coordinates ``[x1_lo, x1_hi, x2_lo, x2_hi]``.
Unknown keys are rejected.
"""
from __future__ import annotations

import json
import logging
import time
import traceback
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..neuralcore import TrainConfig
from ..scoring import PredictiveSamples, score_report
from ..spatial_models import KINDS
from .data import (
    Dataset,
    GridSpec,
    RectangleHoldout,
    generate_eggholder_dataset,
    kfold_split,
    load_csv,
    rectangle_holdout,
    write_rows,
    write_scores_csv,
    write_surface_csv,
)
from .pipeline import BasisOptions, ModelConfig, SpatialRegressor

log = logging.getLogger(__name__)

POOLED_HEADER = ["model", "n", "mse", "crps", "icr", "interval_score"]
PER_LOCATION_HEADER = ["model", "fold", "location_id", "x1", "x2", "y", "mean", "sd", "crps",
                       "lower", "upper", "covered", "interval_score"]


class ConfigError(ValueError):
    pass


def _build(cls, d, what):
    if not isinstance(d, dict):
        raise ConfigError(f"{what}: expected an object, got {type(d).__name__}")
    names = {f.name for f in fields(cls)}
    extra = set(d) - names
    if extra:
        raise ConfigError(f"{what}: unknown keys {sorted(extra)}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _grid(d, what) -> GridSpec:
    d = dict(d)
    if "bounds" in d:
        d["bounds"] = tuple(float(b) for b in d["bounds"])
    return _build(GridSpec, d, what)


@dataclass
class DataSource:
    source: str = "eggholder"
    grid: GridSpec | None = field(default_factory=lambda: GridSpec(60, 60))
    path: str | None = None

    def load(self) -> Dataset:
        if self.source == "eggholder":
            return generate_eggholder_dataset(self.grid)
        return load_csv(self.path)


@dataclass
class SplitConfig:
    type: str = "cv"
    k: int = 5
    seed: int = 0
    rect: tuple = RectangleHoldout().rect


@dataclass
class ExperimentConfig:
    data: DataSource = field(default_factory=DataSource)
    models: list[ModelConfig] = field(default_factory=lambda: [ModelConfig(k) for k in KINDS])
    basis: BasisOptions = field(default_factory=BasisOptions)
    train: TrainConfig = field(default_factory=TrainConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    n_mc_samples: int = 100
    alpha: float = 0.05
    standard_interval_score: bool = False
    surface_grid: GridSpec | None = field(default_factory=lambda: GridSpec(40, 40))
    save_models: bool = True
    seed: int = 0
    output_dir: str = "runs/out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.data.source not in ("eggholder", "csv"):
            raise ConfigError(f"data.source must be 'eggholder' or 'csv', got {self.data.source!r}")
        if self.data.source == "eggholder" and self.data.grid is None:
            raise ConfigError("eggholder data needs a grid")
        if self.data.source == "csv" and not self.data.path:
            raise ConfigError("csv data needs a path")
        if not self.models:
            raise ConfigError("at least one model is required")
        for m in self.models:
            if m.kind not in KINDS:
                raise ConfigError(f"unknown model kind {m.kind!r}; expected one of {KINDS}")
            if not 0.0 <= m.dropout_rate < 1.0 or m.hidden_width < 1 or m.n_filters < 1:
                raise ConfigError(f"invalid model settings {asdict(m)}")
        if self.split.type not in ("cv", "holdout"):
            raise ConfigError(f"split.type must be 'cv' or 'holdout', got {self.split.type!r}")
        if self.split.type == "cv" and self.split.k < 2:
            raise ConfigError("split.k must be >= 2")
        if self.split.type == "holdout":
            try:
                RectangleHoldout(tuple(self.split.rect))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.n_mc_samples < 1:
            raise ConfigError("n_mc_samples must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0, 1)")
        # fails early on a bad basis rather than inside every cell
        try:
            self.basis.resolve((0.0, 1.0, 0.0, 1.0))
        except ValueError as exc:
            raise ConfigError(f"basis: {exc}") from None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown top-level keys {sorted(extra)}")
        kw = {}
        if "data" in d:
            data = dict(d.pop("data"))
            if "grid" in data and data["grid"] is not None:
                data["grid"] = _grid(data["grid"], "data.grid")
            kw["data"] = _build(DataSource, data, "data")
        if "models" in d:
            models = d.pop("models")
            kw["models"] = [_build(ModelConfig, {"kind": m} if isinstance(m, str) else m, "models[]")
                            for m in models]
        if "basis" in d:
            kw["basis"] = _build(BasisOptions, d.pop("basis"), "basis")
        if "train" in d:
            kw["train"] = _build(TrainConfig, d.pop("train"), "train")
        if "split" in d:
            split = dict(d.pop("split"))
            if "rect" in split:
                split["rect"] = tuple(float(v) for v in split["rect"])
            kw["split"] = _build(SplitConfig, split, "split")
        if "surface_grid" in d:
            sg = d.pop("surface_grid")
            kw["surface_grid"] = None if sg is None else _grid(sg, "surface_grid")
        kw.update(d)
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("surface_grid",):
            if d[key] is not None:
                d[key]["bounds"] = list(d[key]["bounds"])
        if d["data"]["grid"] is not None:
            d["data"]["grid"]["bounds"] = list(d["data"]["grid"]["bounds"])
        d["split"]["rect"] = list(d["split"]["rect"])
        return d


@dataclass
class CellResult:
    model: str
    fold: str
    report: object = None
    samples: np.ndarray | None = None
    test_idx: np.ndarray | None = None
    error: str | None = None
    seconds: float = 0.0


@dataclass
class ExperimentResult:
    cells: list[CellResult]
    pooled: dict
    output_dir: Path

    def score_rows(self) -> list[dict]:
        rows = []
        for c in self.cells:
            r = c.report
            nan = float("nan")
            rows.append({"model": c.model, "fold": c.fold,
                         "mse": r.mse if r else nan, "crps": r.crps_mean if r else nan,
                         "icr": r.icr if r else nan, "interval_score": r.interval_score_mean if r else nan})
        return rows

    @property
    def errors(self) -> list[CellResult]:
        return [c for c in self.cells if c.error]


def cell_rng(seed: int, model_index: int, fold_index: int) -> np.random.Generator:
    """Independent stream per (model, fold) cell, so cells can run in any order."""
    return np.random.default_rng(np.random.SeedSequence([seed, model_index, fold_index]))


def _splits(config: ExperimentConfig, data: Dataset, observed: np.ndarray):
    """Yield (label, train_idx, test_idx) in dataset row indices."""
    if config.split.type == "cv":
        folds = kfold_split(len(observed), config.split.k, config.split.seed)
        for f in range(folds.k):
            yield str(f), observed[folds.train_indices(f)], observed[folds.test_indices(f)]
    else:
        sub = data.subset(observed)
        train, test = rectangle_holdout(sub, config.split.rect)
        yield "holdout", observed[train], observed[test]


def _run_cell(config, mc: ModelConfig, data: Dataset, train_idx, test_idx, rng, model_path):
    reg = SpatialRegressor(mc, config.basis)
    reg.fit(data.locations[train_idx], data.responses[train_idx], config.train, rng)
    samples = reg.predict_samples(data.locations[test_idx], config.n_mc_samples, rng)
    if model_path is not None:
        reg.save(model_path)
    return reg, samples


def run_experiment(config: ExperimentConfig, output_dir=None, write: bool = True) -> ExperimentResult:
    """Run every (model, split) cell and write the CSV outputs.

    A failing cell is recorded with its diagnostic and scored as NaN; the
    remaining cells still run. The surface for each model comes from its
    first split's fitted model.
    """
    out = Path(output_dir if output_dir is not None else config.output_dir)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "config.json", "w") as fh:
            json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
    data = config.data.load()
    observed = np.flatnonzero(data.observed)
    if observed.size < 2:
        raise ConfigError("need at least two observed rows")
    splits = list(_splits(config, data, observed))

    cells, surfaces = [], {}
    for mi, mc in enumerate(config.models):
        for fi, (label, train_idx, test_idx) in enumerate(splits):
            cell = CellResult(mc.kind, label, test_idx=test_idx)
            t0 = time.perf_counter()
            model_path = out / f"model_{mc.kind}_{label}.npz" if write and config.save_models else None
            try:
                rng = cell_rng(config.seed, mi, fi)
                reg, cell.samples = _run_cell(config, mc, data, train_idx, test_idx, rng, model_path)
                ids = [data.location_ids[i] for i in test_idx]
                cell.report = score_report(PredictiveSamples(cell.samples, ids), data.responses[test_idx],
                                           config.alpha, config.standard_interval_score)
                if fi == 0 and config.surface_grid is not None:
                    pts = config.surface_grid.points()
                    s = reg.predict_samples(pts, config.n_mc_samples, cell_rng(config.seed, mi, len(splits)))
                    sd = s.std(axis=1, ddof=1) if s.shape[1] > 1 else np.zeros(len(pts))
                    surfaces[mc.kind] = (pts, s.mean(axis=1), sd)
            except Exception as exc:  # one bad cell must not sink the rest
                cell.error = f"{type(exc).__name__}: {exc}"
                log.error("cell (%s, %s) failed: %s\n%s", mc.kind, label, cell.error, traceback.format_exc())
            cell.seconds = time.perf_counter() - t0
            log.info("cell (%s, %s) done in %.1fs", mc.kind, label, cell.seconds)
            cells.append(cell)

    pooled = _pool(cells, data, config)
    result = ExperimentResult(cells, pooled, out)
    if write:
        _write_outputs(result, data, surfaces)
    return result


def _pool(cells, data, config) -> dict:
    """Score each model over the union of its test sets (every observation once)."""
    pooled = {}
    for kind in dict.fromkeys(c.model for c in cells):
        mine = [c for c in cells if c.model == kind]
        if any(c.error for c in mine):
            continue
        idx = np.concatenate([c.test_idx for c in mine])
        samples = np.vstack([c.samples for c in mine])
        rep = score_report(samples, data.responses[idx], config.alpha, config.standard_interval_score)
        pooled[kind] = (len(idx), rep)
    return pooled


def _write_outputs(result: ExperimentResult, data: Dataset, surfaces: dict) -> None:
    out = result.output_dir
    write_scores_csv(out / "scores.csv", result.score_rows())
    write_rows(out / "pooled_scores.csv", POOLED_HEADER,
               ([k, n, r.mse, r.crps_mean, r.icr, r.interval_score_mean] for k, (n, r) in result.pooled.items()))
    rows = []
    for c in result.cells:
        if c.report is None:
            continue
        sd = c.samples.std(axis=1, ddof=1) if c.samples.shape[1] > 1 else np.zeros(len(c.test_idx))
        for j, (i, pl) in enumerate(zip(c.test_idx, c.report.per_location)):
            x = data.locations[i]
            rows.append([c.model, c.fold, pl["location_id"], x[0], x[1], pl["obs"], pl["mean"], sd[j],
                         pl["crps"], pl["lower"], pl["upper"], pl["covered"], pl["interval_score"]])
    write_rows(out / "per_location_scores.csv", PER_LOCATION_HEADER, rows)
    write_rows(out / "errors.csv", ["model", "fold", "error"],
               ([c.model, c.fold, c.error] for c in result.errors))
    for kind, (pts, mean, sd) in surfaces.items():
        write_surface_csv(out / f"surface_{kind}.csv", pts, mean, sd)


__all__ = ["CellResult", "ConfigError", "DataSource", "ExperimentConfig", "ExperimentResult",
           "SplitConfig", "cell_rng", "run_experiment"]
