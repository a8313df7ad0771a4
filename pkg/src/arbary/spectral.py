"""Frequency grids, discretized PSDs, the circular ground cost and baseline distances."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DegenerateInput, InvalidArgument

TWO_PI = 2.0 * np.pi
DIV_FLOOR = 1e-12


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid of ``n_bins`` angular frequencies on [-pi, pi)."""

    n_bins: int

    def __post_init__(self):
        if not isinstance(self.n_bins, (int, np.integer)) or self.n_bins < 2:
            raise InvalidArgument(f"n_bins must be an integer >= 2, got {self.n_bins!r}")
        object.__setattr__(self, "n_bins", int(self.n_bins))

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n_bins

    @cached_property
    def points(self) -> np.ndarray:
        pts = -np.pi + self.spacing * np.arange(self.n_bins)
        pts.setflags(write=False)
        return pts


def make_grid(n_bins: int) -> FrequencyGrid:
    return FrequencyGrid(n_bins)


@dataclass(frozen=True, eq=False)
class Psd:
    """Nonnegative spectral mass on a frequency grid.

    ``normalized`` is only set by :func:`normalize` (or by constructors that
    guarantee unit mass); it is checked against the actual sum.
    """

    grid: FrequencyGrid
    mass: np.ndarray
    normalized: bool = field(default=False)

    def __post_init__(self):
        mass = np.array(self.mass, dtype=float)
        if mass.shape != (self.grid.n_bins,):
            raise InvalidArgument(
                f"mass has shape {mass.shape}, grid expects ({self.grid.n_bins},)"
            )
        if not np.all(np.isfinite(mass)):
            raise InvalidArgument("PSD mass must be finite")
        if np.any(mass < 0):
            raise InvalidArgument("PSD mass must be nonnegative")
        if self.normalized and abs(mass.sum() - 1.0) > 1e-12:
            raise InvalidArgument(f"PSD flagged normalized but sums to {mass.sum()!r}")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def __len__(self):
        return self.grid.n_bins


def circular_cost(w1, w2):
    """Squared geodesic distance on the unit circle; broadcasts over arrays."""
    d = np.abs(np.asarray(w1, dtype=float) - np.asarray(w2, dtype=float))
    d = np.mod(d, TWO_PI)
    d = np.minimum(d, TWO_PI - d)
    out = d * d
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GroundCost:
    grid: FrequencyGrid
    matrix: np.ndarray


def build_cost(grid: FrequencyGrid) -> GroundCost:
    w = grid.points
    mat = circular_cost(w[:, None], w[None, :])
    # exact symmetry regardless of floating-point ordering
    mat = 0.5 * (mat + mat.T)
    np.fill_diagonal(mat, 0.0)
    mat.setflags(write=False)
    return GroundCost(grid, mat)


def normalize(psd: Psd) -> Psd:
    if psd.normalized:
        return psd
    total = psd.mass.sum()
    if not total > 0:
        raise DegenerateInput("cannot normalize a PSD with zero total mass")
    mass = psd.mass / total
    # one correction pass keeps |sum - 1| at rounding level
    mass = mass / mass.sum()
    return Psd(psd.grid, mass, normalized=True)


def _check_same_grid(p: Psd, q: Psd):
    if p.grid != q.grid:
        raise InvalidArgument(f"grid mismatch: {p.grid.n_bins} vs {q.grid.n_bins} bins")


def baseline_distance(kind: str, p: Psd, q: Psd) -> float:
    """L2, generalized KL or Itakura-Saito distance from ``p`` to ``q``.

    L2 is weighted by the grid spacing; KL and IS act on the raw mass vectors
    with a floor of 1e-12 added to both arguments inside logs and ratios.
    """
    _check_same_grid(p, q)
    kind = kind.upper()
    if kind == "L2":
        d = p.mass - q.mass
        return float(np.sum(d * d) * p.grid.spacing)
    pf = p.mass + DIV_FLOOR
    qf = q.mass + DIV_FLOOR
    ratio = pf / qf
    if kind == "KL":
        val = np.sum(p.mass * np.log(ratio) - p.mass + q.mass)
    elif kind == "IS":
        val = np.sum(ratio - np.log(ratio) - 1.0)
    else:
        raise InvalidArgument(f"unknown baseline distance {kind!r}")
    return max(float(val), 0.0)


def arithmetic_mean_centroid(psds: Sequence[Psd]) -> Psd:
    if len(psds) == 0:
        raise InvalidArgument("arithmetic mean of an empty set")
    grid = psds[0].grid
    for p in psds[1:]:
        _check_same_grid(psds[0], p)
    mass = np.mean([p.mass for p in psds], axis=0)
    if all(p.normalized for p in psds):
        mass = mass / mass.sum()
        return Psd(grid, mass, normalized=True)
    return Psd(grid, mass)
