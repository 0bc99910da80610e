"""Spatial deep convolutional networks (SDCNN) with MC-dropout uncertainty.

Subpackages and modules
-----------------------
basisgen        multi-resolution RBF knot grids and basis images
neuralcore      float64 numpy engine: layers, backprop, Adam, early stopping
spatial_models  Baseline DNN, DeepKriging and SDCNN builders plus MC prediction
scoring         MSE, CRPS, interval coverage and interval score
bench           Eggholder data, splits, experiment runs and the CLI
"""
from . import basisgen, neuralcore, scoring, spatial_models
from .spatial_models import KINDS, ModelInput, ModelSpec, build_model, forward, mc_predict

__version__ = "0.1.0"

__all__ = ["KINDS", "ModelInput", "ModelSpec", "basisgen", "build_model", "forward", "mc_predict",
           "neuralcore", "scoring", "spatial_models"]
