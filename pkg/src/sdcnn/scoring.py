"""Scores for Monte-Carlo predictive ensembles.

CRPS is reported in the positively oriented form
``0.5 * E|X - X'| - E|X - x|`` (larger is better, values are <= 0). The
interval score penalty coefficient defaults to ``alpha / 2``; pass
``standard=True`` for the usual ``2 / alpha``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PredictiveSamples:
    values: np.ndarray
    location_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise ValueError(f"samples must be an (N, S>=1) matrix, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("samples contain non-finite values")
        if not self.location_ids:
            self.location_ids = list(range(self.values.shape[0]))
        if len(self.location_ids) != self.values.shape[0]:
            raise ValueError("location_ids length disagrees with the number of sample rows")


@dataclass
class ScoreReport:
    mse: float
    crps_mean: float
    icr: float
    interval_score_mean: float
    alpha: float
    per_location: list[dict] | None = None


def _as_matrix(samples):
    if isinstance(samples, PredictiveSamples):
        return samples.values
    m = np.asarray(samples, dtype=np.float64)
    return m.reshape(1, -1) if m.ndim == 1 else m


def mse(pred_mean, obs) -> float:
    pred_mean = np.asarray(pred_mean, dtype=np.float64).reshape(-1)
    obs = np.asarray(obs, dtype=np.float64).reshape(-1)
    if pred_mean.shape != obs.shape:
        raise ValueError(f"length mismatch: {pred_mean.shape} vs {obs.shape}")
    if pred_mean.size == 0:
        raise ValueError("mse of an empty vector")
    r = obs - pred_mean
    return float(np.sum(r * r) / r.size)


def crps_rows(samples, obs) -> np.ndarray:
    """Per-row CRPS via the sorted-sample identity, O(S log S) per row.

    ``sum_ij |x_i - x_j| = 2 sum_k (2k - S - 1) x_(k)`` for sorted ``x_(1..S)``.
    """
    x = np.sort(_as_matrix(samples), axis=1)
    obs = np.asarray(obs, dtype=np.float64).reshape(-1)
    n, s = x.shape
    if s == 0:
        raise ValueError("CRPS needs at least one sample")
    if obs.shape[0] != n:
        raise ValueError(f"{n} sample rows but {obs.shape[0]} observations")
    w = 2.0 * np.arange(1, s + 1) - s - 1.0
    spread = np.sum(x * w, axis=1) / (s * s)
    miss = np.sum(np.abs(x - obs[:, None]), axis=1) / s
    return spread - miss


def crps_empirical(samples, obs: float) -> float:
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if samples.size == 0:
        raise ValueError("CRPS needs at least one sample")
    return float(crps_rows(samples[None, :], [obs])[0])


def crps_bruteforce(samples, obs: float) -> float:
    """Direct O(S^2) double sum; reference for :func:`crps_empirical`."""
    x = [float(v) for v in np.asarray(samples).reshape(-1)]
    s = len(x)
    pair = sum(abs(a - b) for a in x for b in x)
    miss = sum(abs(a - obs) for a in x)
    return 0.5 * pair / (s * s) - miss / s


def empirical_quantile(samples, q):
    """Linear-interpolation ("type 7") quantile along the last axis."""
    q_arr = np.asarray(q, dtype=np.float64)
    if np.any((q_arr < 0) | (q_arr > 1)):
        raise ValueError(f"quantile level outside [0, 1]: {q}")
    x = np.asarray(samples, dtype=np.float64)
    if x.shape[-1] == 0:
        raise ValueError("quantile of an empty sample")
    out = np.quantile(x, q_arr, axis=-1, method="linear")
    return float(out) if np.ndim(out) == 0 else out


def interval_bounds(samples, alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    x = _as_matrix(samples)
    lo = np.quantile(x, alpha / 2.0, axis=1, method="linear")
    hi = np.quantile(x, 1.0 - alpha / 2.0, axis=1, method="linear")
    return lo, hi


def coverage_rows(samples, obs, alpha: float) -> np.ndarray:
    lo, hi = interval_bounds(samples, alpha)
    obs = np.asarray(obs, dtype=np.float64).reshape(-1)
    if obs.shape != lo.shape:
        raise ValueError(f"{lo.shape[0]} sample rows but {obs.shape[0]} observations")
    return (lo <= obs) & (obs <= hi)


def icr(samples_matrix, obs, alpha: float) -> float:
    """Share of observations inside their central (1 - alpha) interval ``[L, U]``."""
    return float(np.mean(coverage_rows(samples_matrix, obs, alpha)))


def interval_score_from_bounds(lo, hi, obs, alpha: float, standard: bool = False):
    lo, hi, obs = (np.asarray(v, dtype=np.float64) for v in (lo, hi, obs))
    coef = 2.0 / alpha if standard else alpha / 2.0
    below = np.where(obs < lo, lo - obs, 0.0)
    above = np.where(obs > hi, obs - hi, 0.0)
    return (hi - lo) + coef * below + coef * above


def interval_score_rows(samples, obs, alpha: float, standard: bool = False) -> np.ndarray:
    lo, hi = interval_bounds(samples, alpha)
    obs = np.asarray(obs, dtype=np.float64).reshape(-1)
    return interval_score_from_bounds(lo, hi, obs, alpha, standard)


def interval_score(samples, obs: float, alpha: float, standard: bool = False) -> float:
    samples = np.asarray(samples, dtype=np.float64).reshape(1, -1)
    return float(interval_score_rows(samples, [obs], alpha, standard)[0])


def score_report(samples_matrix, obs, alpha: float = 0.05, standard_interval_score: bool = False,
                 point_prediction=None) -> ScoreReport:
    """Aggregate scores over locations.

    The point prediction for MSE is the per-location sample mean unless
    ``point_prediction`` is given (e.g. a dropout-off forward pass).
    """
    ids = samples_matrix.location_ids if isinstance(samples_matrix, PredictiveSamples) else None
    x = _as_matrix(samples_matrix)
    obs = np.asarray(obs, dtype=np.float64).reshape(-1)
    if x.shape[0] != obs.shape[0]:
        raise ValueError(f"{x.shape[0]} sample rows but {obs.shape[0]} observations")
    mean = x.mean(axis=1) if point_prediction is None else np.asarray(point_prediction, dtype=np.float64)
    crps = crps_rows(x, obs)
    lo, hi = interval_bounds(x, alpha)
    covered = (lo <= obs) & (obs <= hi)
    isc = interval_score_from_bounds(lo, hi, obs, alpha, standard_interval_score)
    sq = (obs - mean) ** 2
    ids = ids if ids is not None else list(range(len(obs)))
    rows = [
        {"location_id": ids[i], "obs": obs[i], "mean": mean[i], "sq_error": sq[i], "crps": crps[i],
         "lower": lo[i], "upper": hi[i], "covered": bool(covered[i]), "interval_score": isc[i]}
        for i in range(len(obs))
    ]
    return ScoreReport(
        mse=mse(mean, obs),
        crps_mean=float(np.mean(crps)),
        icr=float(np.mean(covered)),
        interval_score_mean=float(np.mean(isc)),
        alpha=alpha,
        per_location=rows,
    )
