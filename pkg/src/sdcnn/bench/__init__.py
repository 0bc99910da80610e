"""Experiment harness: data, splits, fit/predict wrapper, experiment runs."""
from .data import (
    Dataset,
    DataError,
    FoldSplit,
    GridSpec,
    RectangleHoldout,
    ScaleState,
    eggholder,
    generate_eggholder_dataset,
    kfold_split,
    load_csv,
    minmax_scale,
    minmax_unscale,
    rectangle_holdout,
    write_scores_csv,
    write_surface_csv,
)
from .experiment import ConfigError, ExperimentConfig, ExperimentResult, run_experiment
from .pipeline import BasisOptions, ModelConfig, SpatialRegressor
