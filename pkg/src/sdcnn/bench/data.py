"""Datasets, the Eggholder surface, scaling, splits and CSV I/O."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    pass


def eggholder(x1, x2):
    """Eggholder test surface; works on scalars or arrays."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    a = x2 + 47.0
    out = -a * np.sin(np.sqrt(np.abs(x2 + x1 / 2.0 + 47.0))) - x1 * np.sin(np.sqrt(np.abs(x1 - a)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GridSpec:
    n_x1: int
    n_x2: int
    bounds: tuple[float, float, float, float] = (-500.0, 500.0, -500.0, 500.0)

    def __post_init__(self):
        if self.n_x1 < 1 or self.n_x2 < 1:
            raise DataError("grid sizes must be positive")
        x1_min, x1_max, x2_min, x2_max = self.bounds
        if (self.n_x1 > 1 and not x1_min < x1_max) or (self.n_x2 > 1 and not x2_min < x2_max):
            raise DataError(f"degenerate grid bounds {self.bounds}")

    def points(self) -> np.ndarray:
        """(n_x1 * n_x2, 2) grid with x1 varying fastest."""
        x1_min, x1_max, x2_min, x2_max = self.bounds
        g1 = np.linspace(x1_min, x1_max, self.n_x1)
        g2 = np.linspace(x2_min, x2_max, self.n_x2)
        xx1, xx2 = np.meshgrid(g1, g2)
        return np.column_stack([xx1.ravel(), xx2.ravel()])


@dataclass
class ScaleState:
    mins: np.ndarray
    maxs: np.ndarray

    def to_dict(self):
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mins"], dtype=np.float64), np.asarray(d["maxs"], dtype=np.float64))


def minmax_scale(values, state: ScaleState | None = None):
    """Map each column to [0, 1] using ``state`` (fitted from ``values`` if absent).

    Returns ``(scaled, state)``. Points outside the fitted range land outside
    [0, 1]; that is intended for prediction locations.
    """
    v = np.asarray(values, dtype=np.float64)
    one_d = v.ndim == 1
    v2 = v.reshape(-1, 1) if one_d else v
    if state is None:
        if v2.shape[0] == 0:
            raise DataError("cannot fit scaling on an empty array")
        state = ScaleState(v2.min(axis=0), v2.max(axis=0))
    span = state.maxs - state.mins
    if np.any(span <= 0):
        raise DataError(f"constant axis cannot be min-max scaled (ranges {span.tolist()})")
    out = (v2 - state.mins) / span
    return (out.reshape(-1) if one_d else out), state


def minmax_unscale(scaled, state: ScaleState):
    s = np.asarray(scaled, dtype=np.float64)
    one_d = s.ndim == 1
    s2 = s.reshape(-1, 1) if one_d else s
    out = s2 * (state.maxs - state.mins) + state.mins
    return out.reshape(-1) if one_d else out


@dataclass
class Dataset:
    locations: np.ndarray
    responses: np.ndarray
    scale_state: ScaleState | None = None
    location_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.locations = np.asarray(self.locations, dtype=np.float64).reshape(-1, 2)
        self.responses = np.asarray(self.responses, dtype=np.float64).reshape(-1)
        if len(self.locations) == 0:
            raise DataError("dataset is empty")
        if len(self.locations) != len(self.responses):
            raise DataError("locations and responses differ in length")
        if not np.all(np.isfinite(self.locations)):
            raise DataError("non-finite coordinates")
        if not self.location_ids:
            self.location_ids = list(range(len(self.responses)))
        if self.scale_state is None:
            _, self.scale_state = minmax_scale(self.locations)

    def __len__(self):
        return len(self.responses)

    @property
    def scaled_locations(self) -> np.ndarray:
        return minmax_scale(self.locations, self.scale_state)[0]

    @property
    def observed(self) -> np.ndarray:
        """Mask of rows with a response; NaN rows are prediction-only."""
        return np.isfinite(self.responses)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.locations[idx], self.responses[idx], self.scale_state,
                       [self.location_ids[i] for i in idx])


def generate_eggholder_dataset(grid: GridSpec) -> Dataset:
    pts = grid.points()
    return Dataset(pts, eggholder(pts[:, 0], pts[:, 1]))


@dataclass
class FoldSplit:
    assignments: np.ndarray
    k: int
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def kfold_split(n: int, k: int = 5, seed: int = 0) -> FoldSplit:
    """Seeded shuffle then contiguous chunks; fold sizes differ by at most one."""
    if k < 2:
        raise DataError("k must be >= 2")
    if n < k:
        raise DataError(f"cannot split {n} rows into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    for fold, chunk in enumerate(np.array_split(perm, k)):
        assignments[chunk] = fold
    return FoldSplit(assignments, k, seed)


@dataclass(frozen=True)
class RectangleHoldout:
    rect: tuple[float, float, float, float] = (-100.0, 100.0, -100.0, 100.0)

    def __post_init__(self):
        x1_lo, x1_hi, x2_lo, x2_hi = self.rect
        if not (x1_lo < x1_hi and x2_lo < x2_hi):
            raise DataError(f"rectangle needs lo < hi on both axes, got {self.rect}")


def rectangle_holdout(dataset: Dataset, rect: RectangleHoldout | tuple) -> tuple[np.ndarray, np.ndarray]:
    """Split into (train, test) indices; test is every point strictly inside the rectangle."""
    if not isinstance(rect, RectangleHoldout):
        rect = RectangleHoldout(tuple(rect))
    x1_lo, x1_hi, x2_lo, x2_hi = rect.rect
    loc = dataset.locations
    bx1_lo, bx2_lo = loc.min(axis=0)
    bx1_hi, bx2_hi = loc.max(axis=0)
    if x1_hi < bx1_lo or x1_lo > bx1_hi or x2_hi < bx2_lo or x2_lo > bx2_hi:
        raise DataError(f"rectangle {rect.rect} does not intersect the data bounding box")
    inside = (loc[:, 0] > x1_lo) & (loc[:, 0] < x1_hi) & (loc[:, 1] > x2_lo) & (loc[:, 1] < x2_hi)
    test, train = np.flatnonzero(inside), np.flatnonzero(~inside)
    if test.size == 0:
        raise DataError("rectangle contains no points")
    if train.size == 0:
        raise DataError("rectangle leaves no training points")
    return train, test


# CSV ---------------------------------------------------------------------------

def fmt(v) -> str:
    """17 significant digits, enough to round-trip any float64."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NaN"
        return format(v, ".17g")
    return str(v)


def load_csv(path) -> Dataset:
    """Read ``x1,x2,y`` columns (extra columns ignored). Empty or NaN ``y`` marks a prediction-only row."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        cols = [h.strip() for h in header]
        try:
            i1, i2, iy = cols.index("x1"), cols.index("x2"), cols.index("y")
        except ValueError:
            raise DataError(f"{path}: header must contain x1, x2, y (got {cols})") from None
        ident = cols.index("location_id") if "location_id" in cols else None
        locs, ys, ids = [], [], []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(cols):
                raise DataError(f"{path}:{lineno}: expected {len(cols)} fields, got {len(row)}")
            try:
                x1, x2 = float(row[i1]), float(row[i2])
                yv = row[iy].strip()
                y = float(yv) if yv else float("nan")
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if not (math.isfinite(x1) and math.isfinite(x2)):
                raise DataError(f"{path}:{lineno}: non-finite coordinate")
            if math.isinf(y):
                raise DataError(f"{path}:{lineno}: infinite response")
            locs.append((x1, x2))
            ys.append(y)
            ids.append(row[ident] if ident is not None else len(ids))
    if not locs:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(locs), np.array(ys), location_ids=ids)


def write_rows(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_dataset_csv(path, dataset: Dataset) -> None:
    write_rows(path, ["location_id", "x1", "x2", "y"],
               ([i, x[0], x[1], y] for i, x, y in zip(dataset.location_ids, dataset.locations, dataset.responses)))


SURFACE_HEADER = ["x1", "x2", "mean", "sd"]
SCORE_HEADER = ["model", "fold", "mse", "crps", "icr", "interval_score"]


def write_surface_csv(path, points, mean, sd) -> None:
    write_rows(path, SURFACE_HEADER, ([p[0], p[1], m, s] for p, m, s in zip(points, mean, sd)))


def write_scores_csv(path, rows: list[dict]) -> None:
    write_rows(path, SCORE_HEADER, ([r[h] for h in SCORE_HEADER] for r in rows))


def read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [r for r in reader if r]
