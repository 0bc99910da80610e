"""Multi-resolution radial basis functions laid on regular knot grids.

Each resolution is an ``rows x cols`` grid of knots sharing one scale. Evaluated
at a location, a resolution yields a small matrix (a "basis image") that the
convolutional model consumes directly; the flattened concatenation over all
resolutions is the feature vector used by the DeepKriging-style model.

Kernels
-------
gaussian : ``exp(-d / (2 sigma^2))`` with ``d`` the *unsquared* Euclidean
    distance. ``squared_exponent=True`` switches to ``exp(-d^2 / (2 sigma^2))``.
wendland : ``(1 - r)^6 (35 r^2 + 18 r + 3) / 3`` for ``r = d / sigma <= 1``,
    zero beyond.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

KERNELS = ("gaussian", "wendland")
DEFAULT_KNOT_BUDGET = 4096


class BasisConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Location:
    x1: float
    x2: float

    def __post_init__(self):
        if not (np.isfinite(self.x1) and np.isfinite(self.x2)):
            raise ValueError(f"non-finite location ({self.x1}, {self.x2})")


@dataclass(frozen=True)
class Knot:
    center: Location
    row_index: int
    col_index: int


@dataclass(frozen=True)
class Kernel:
    """Kernel family plus the exponent convention for the Gaussian."""

    name: str = "gaussian"
    squared_exponent: bool = False

    def __post_init__(self):
        if self.name not in KERNELS:
            raise BasisConfigError(f"unknown kernel {self.name!r}; expected one of {KERNELS}")


@dataclass
class Resolution:
    """One knot grid. Rows run along x2, columns along x1."""

    level: int
    rows: int
    cols: int
    sigma: float
    x1_knots: np.ndarray
    x2_knots: np.ndarray

    @property
    def knots(self) -> list[Knot]:
        """Knots in row-major order."""
        return [
            Knot(Location(float(self.x1_knots[c]), float(self.x2_knots[r])), r, c)
            for r in range(self.rows)
            for c in range(self.cols)
        ]

    @property
    def n_knots(self) -> int:
        return self.rows * self.cols

    @property
    def spacing(self) -> tuple[float, float]:
        """Knot spacing along (x1, x2)."""
        return (
            float((self.x1_knots[-1] - self.x1_knots[0]) / (self.cols - 1)),
            float((self.x2_knots[-1] - self.x2_knots[0]) / (self.rows - 1)),
        )

    def centers(self) -> np.ndarray:
        """Knot coordinates as a ``(rows, cols, 2)`` array."""
        x1 = np.broadcast_to(self.x1_knots[None, :], (self.rows, self.cols))
        x2 = np.broadcast_to(self.x2_knots[:, None], (self.rows, self.cols))
        return np.stack([x1, x2], axis=-1)


@dataclass
class BasisConfig:
    bounding_box: tuple[float, float, float, float]
    num_resolutions: int = 3
    base_knots_per_axis: int = 3
    growth_factor: int = 2
    margin_fraction: float = 0.1
    scale_multiplier: float = 1.5
    kernel: str = "gaussian"
    squared_exponent: bool = False
    knot_budget: int = DEFAULT_KNOT_BUDGET

    def __post_init__(self):
        self.bounding_box = tuple(float(v) for v in self.bounding_box)
        x1_min, x1_max, x2_min, x2_max = self.bounding_box
        if not x1_min < x1_max or not x2_min < x2_max:
            raise BasisConfigError(f"degenerate bounding box {self.bounding_box}")
        if self.num_resolutions < 1:
            raise BasisConfigError("num_resolutions must be >= 1")
        if self.base_knots_per_axis < 2:
            raise BasisConfigError("base_knots_per_axis must be >= 2")
        if self.growth_factor < 2:
            raise BasisConfigError("growth_factor must be >= 2 so finer levels are strictly denser")
        if self.margin_fraction < 0:
            raise BasisConfigError("margin_fraction must be nonnegative")
        if self.scale_multiplier <= 0:
            raise BasisConfigError("scale_multiplier must be positive")
        Kernel(self.kernel, self.squared_exponent)

    @property
    def kernel_spec(self) -> Kernel:
        return Kernel(self.kernel, self.squared_exponent)

    def to_dict(self) -> dict:
        return {
            "bounding_box": list(self.bounding_box),
            "num_resolutions": self.num_resolutions,
            "base_knots_per_axis": self.base_knots_per_axis,
            "growth_factor": self.growth_factor,
            "margin_fraction": self.margin_fraction,
            "scale_multiplier": self.scale_multiplier,
            "kernel": self.kernel,
            "squared_exponent": self.squared_exponent,
            "knot_budget": self.knot_budget,
        }


def build_resolutions(config: BasisConfig) -> list[Resolution]:
    """Lay out the knot grids, coarsest first.

    Level ``k`` has ``base * growth**(k-1)`` knots per axis spread uniformly
    over the bounding box widened by ``margin_fraction`` of its extent on every
    side. The scale is ``scale_multiplier`` times the knot spacing along the
    shorter axis.
    """
    x1_min, x1_max, x2_min, x2_max = config.bounding_box
    finest = config.base_knots_per_axis * config.growth_factor ** (config.num_resolutions - 1)
    if finest * finest > config.knot_budget:
        raise BasisConfigError(
            f"finest resolution needs {finest}x{finest}={finest * finest} knots, "
            f"over the budget of {config.knot_budget}"
        )
    pad1 = config.margin_fraction * (x1_max - x1_min)
    pad2 = config.margin_fraction * (x2_max - x2_min)
    lo1, hi1 = x1_min - pad1, x1_max + pad1
    lo2, hi2 = x2_min - pad2, x2_max + pad2

    out = []
    for level in range(1, config.num_resolutions + 1):
        n = config.base_knots_per_axis * config.growth_factor ** (level - 1)
        x1_knots = np.linspace(lo1, hi1, n)
        x2_knots = np.linspace(lo2, hi2, n)
        spacing = min((hi1 - lo1) / (n - 1), (hi2 - lo2) / (n - 1))
        out.append(Resolution(level, n, n, config.scale_multiplier * spacing, x1_knots, x2_knots))
    return out


def _gaussian(dist, sigma, squared_exponent=False):
    if squared_exponent:
        return np.exp(-(dist * dist) / (2.0 * sigma * sigma))
    return np.exp(-dist / (2.0 * sigma * sigma))


def _wendland(r):
    r = np.asarray(r, dtype=np.float64)
    inside = r <= 1.0
    rc = np.where(inside, r, 1.0)
    # explicit products: pow() rounds differently for scalars and arrays
    t = 1.0 - rc
    t2 = t * t
    val = t2 * t2 * t2 * (35.0 * rc * rc + 18.0 * rc + 3.0) / 3.0
    return np.where(inside, val, 0.0)


def _distance(dx, dy):
    return np.sqrt(dx * dx + dy * dy)


def gaussian_rbf(s: Location, c: Location, sigma: float, squared_exponent: bool = False) -> float:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    d = _distance(np.float64(s.x1) - np.float64(c.x1), np.float64(s.x2) - np.float64(c.x2))
    return float(_gaussian(d, np.float64(sigma), squared_exponent))


def wendland_rbf(r: float) -> float:
    if r < 0:
        raise ValueError("r must be nonnegative")
    return float(_wendland(np.float64(r)))


def kernel_value(s: Location, c: Location, sigma: float, kernel: Kernel) -> float:
    """Single kernel evaluation between a location and a knot."""
    if kernel.name == "gaussian":
        return gaussian_rbf(s, c, sigma, kernel.squared_exponent)
    d = _distance(np.float64(s.x1) - np.float64(c.x1), np.float64(s.x2) - np.float64(c.x2))
    return float(_wendland(d / np.float64(sigma)))


def basis_images(coords: np.ndarray, res: Resolution, kernel: Kernel = Kernel()) -> np.ndarray:
    """Evaluate one resolution at many locations.

    Parameters
    ----------
    coords : (N, 2) array
    res : Resolution
    kernel : Kernel

    Returns
    -------
    (N, rows, cols) array of kernel values in [0, 1].
    """
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
    dx = coords[:, 0, None, None] - res.x1_knots[None, None, :]
    dy = coords[:, 1, None, None] - res.x2_knots[None, :, None]
    dx, dy = np.broadcast_arrays(dx, dy)
    d = _distance(dx, dy)
    sigma = np.float64(res.sigma)
    if kernel.name == "gaussian":
        return _gaussian(d, sigma, kernel.squared_exponent)
    return _wendland(d / sigma)


def evaluate_basis_image(s: Location, res: Resolution, kernel: Kernel = Kernel()) -> np.ndarray:
    """The ``rows x cols`` basis image at one location."""
    return basis_images(np.array([[s.x1, s.x2]]), res, kernel)[0]


def basis_vectors(coords: np.ndarray, resolutions: Sequence[Resolution], kernel: Kernel = Kernel()) -> np.ndarray:
    """Row-major flattened basis images concatenated coarsest first, shape (N, sum of knots)."""
    if not resolutions:
        raise ValueError("need at least one resolution")
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
    parts = [basis_images(coords, r, kernel).reshape(len(coords), -1) for r in resolutions]
    return np.concatenate(parts, axis=1)


def evaluate_basis_vector(s: Location, resolutions: Sequence[Resolution], kernel: Kernel = Kernel()) -> np.ndarray:
    return basis_vectors(np.array([[s.x1, s.x2]]), resolutions, kernel)[0]


def resolution_shapes(resolutions: Sequence[Resolution]) -> list[tuple[int, int]]:
    return [(r.rows, r.cols) for r in resolutions]
