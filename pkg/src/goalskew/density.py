"""Generative models over low-dimensional boxes, fit by weighted maximum likelihood.

Two families are provided: a regular-grid histogram and a Gaussian kernel
density estimate. Both keep their density bounded away from zero everywhere
inside the bounding box (a configurable fraction of the uniform density), so
inverse-density weights stay finite for any skew exponent. Models are
immutable after fitting and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, ndtr, ndtri

from .errors import InvalidInputError, OutOfBoundsError
from .rng import as_generator

__all__ = [
    "Box",
    "GridHistogramModel",
    "KdeModel",
    "fit_histogram",
    "fit_kde",
    "grid_cells",
    "model_from_dict",
    "model_from_json",
]

# Cell masses must renormalize cleanly; anything worse than this is a bug upstream.
_MASS_TOL = 1e-9


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with closed bounds; the support of every model and metric."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(np.asarray(self.lo, dtype=float)))
        hi = tuple(float(v) for v in np.atleast_1d(np.asarray(self.hi, dtype=float)))
        if len(lo) != len(hi):
            raise InvalidInputError("box lo/hi must have the same dimension")
        if any(h <= l for l, h in zip(lo, hi)):
            raise InvalidInputError("box must have positive extent on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def square(cls, side: float, ndim: int = 2) -> "Box":
        return cls(lo=(0.0,) * ndim, hi=(float(side),) * ndim)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return ((pts >= lo) & (pts <= hi)).all(axis=1)


def _as_points(points, ndim: int):
    """Coerce to an (n, ndim) float array; remember whether input was a single point."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != ndim:
        raise InvalidInputError(f"points must have shape (n, {ndim}), got {pts.shape}")
    return pts, single


def _as_shape(resolution, ndim: int) -> tuple:
    if np.isscalar(resolution):
        shape = (int(resolution),) * ndim
    else:
        shape = tuple(int(r) for r in resolution)
    if len(shape) != ndim or any(r < 1 for r in shape):
        raise InvalidInputError(f"resolution must give >=1 cells on each of {ndim} axes")
    return shape


def grid_cells(points, bounds: Box, resolution) -> np.ndarray:
    """Flat C-order cell index of each point on a regular grid over ``bounds``.

    Cells are half-open; a point exactly on an interior cell boundary belongs
    to the lower-index cell, and points on the outer boundary belong to the
    first/last cell, so every point inside the box gets a valid index.
    """
    pts, single = _as_points(points, bounds.ndim)
    inside = bounds.contains(pts)
    if not inside.all():
        bad = pts[~inside][0]
        raise OutOfBoundsError(f"point {tuple(bad)} lies outside bounds {bounds.lo}..{bounds.hi}")
    shape = _as_shape(resolution, bounds.ndim)
    lo = np.asarray(bounds.lo)
    cell_w = bounds.widths / np.asarray(shape)
    t = (pts - lo) / cell_w
    k = np.floor(t).astype(np.int64)
    on_edge = (t == k) & (k > 0)
    k = np.where(on_edge, k - 1, k)
    k = np.clip(k, 0, np.asarray(shape) - 1)
    flat = np.ravel_multi_index(tuple(k.T), shape)
    return flat[0] if single else flat


def _check_weights(samples: np.ndarray, weights) -> np.ndarray:
    if weights is None:
        return np.ones(len(samples))
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != len(samples):
        raise InvalidInputError("weights must match the number of samples")
    if np.any(w < 0):
        raise InvalidInputError("weights must be nonnegative")
    if w.sum() <= 0:
        raise InvalidInputError("weights must not all be zero")
    return w


class GridHistogramModel:
    """Piecewise-constant density on a regular grid over a box.

    ``cell_mass`` is a flat C-order probability vector over the grid cells.
    ``floor`` is the fraction of total mass reserved for a uniform component,
    so every cell keeps at least ``floor / n_cells`` mass and the minimum
    density anywhere is ``floor`` times the uniform density over the box.
    """

    def __init__(self, bounds: Box, resolution, cell_mass, floor: float = 0.0):
        self.bounds = bounds
        self.shape = _as_shape(resolution, bounds.ndim)
        self.floor = float(floor)
        if not 0.0 <= self.floor < 1.0:
            raise InvalidInputError("floor must lie in [0, 1)")
        mass = np.asarray(cell_mass, dtype=float).reshape(-1)
        if mass.shape[0] != self.n_cells:
            raise InvalidInputError(
                f"cell_mass has {mass.shape[0]} entries, grid has {self.n_cells} cells"
            )
        if np.any(mass < 0):
            raise InvalidInputError("cell masses must be nonnegative")
        total = mass.sum()
        if abs(total - 1.0) > _MASS_TOL:
            raise InvalidInputError(f"cell masses sum to {total}, expected 1")
        mass = mass / total
        if self.floor > 0 and mass.min() < self.floor / self.n_cells - _MASS_TOL:
            raise InvalidInputError("cell mass below the configured floor")
        self.cell_mass = mass
        self.cell_mass.setflags(write=False)
        with np.errstate(divide="ignore"):
            self._log_mass = np.log(self.cell_mass)
        self._log_cell_volume = math.log(self.cell_volume)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.bounds.volume / self.n_cells

    def cell_index(self, points) -> np.ndarray:
        return grid_cells(points, self.bounds, self.shape)

    def log_density(self, points):
        """Natural log of the density at each point; raises OutOfBoundsError outside."""
        idx = self.cell_index(points)
        out = self._log_mass[idx] - self._log_cell_volume
        return float(out) if np.isscalar(idx) or out.ndim == 0 else out

    def density(self, points):
        return np.exp(self.log_density(points))

    def sample(self, n: int, seed=None) -> np.ndarray:
        """Draw ``n`` points: a cell by mass, then uniform inside the cell."""
        if n < 1:
            raise InvalidInputError("need n >= 1 samples")
        rng = as_generator(seed)
        cells = rng.choice(self.n_cells, size=n, p=self.cell_mass)
        coords = np.column_stack(np.unravel_index(cells, self.shape)).astype(float)
        offsets = rng.random((n, self.bounds.ndim))
        cell_w = self.bounds.widths / np.asarray(self.shape)
        return np.asarray(self.bounds.lo) + (coords + offsets) * cell_w

    def refit(self, samples, weights=None) -> "GridHistogramModel":
        """Weighted-MLE fit of a fresh model with this model's grid and floor."""
        return fit_histogram(
            samples, weights, bounds=self.bounds, resolution=self.shape, floor=self.floor
        )

    def to_dict(self) -> dict:
        return {
            "family": "grid_histogram",
            "bounds": {"lo": list(self.bounds.lo), "hi": list(self.bounds.hi)},
            "resolution": list(self.shape),
            "cell_mass": self.cell_mass.tolist(),
            "floor": self.floor,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "GridHistogramModel":
        bounds = Box(lo=tuple(doc["bounds"]["lo"]), hi=tuple(doc["bounds"]["hi"]))
        return cls(bounds, tuple(doc["resolution"]), doc["cell_mass"], doc["floor"])


def fit_histogram(samples, weights=None, *, bounds: Box, resolution, floor: float = 1e-3):
    """Weighted maximum-likelihood histogram: normalized weighted counts, floored.

    With ``floor == 0`` this reproduces the exact normalized weighted histogram
    of the inputs; otherwise the MLE masses are mixed with the uniform grid
    distribution (weight ``floor``) so no cell mass falls below ``floor / n_cells``.
    """
    pts, _ = _as_points(samples, bounds.ndim)
    if pts.shape[0] == 0:
        raise InvalidInputError("cannot fit a model to an empty sample list")
    w = _check_weights(pts, weights)
    shape = _as_shape(resolution, bounds.ndim)
    idx = grid_cells(pts, bounds, shape)
    raw = np.bincount(np.atleast_1d(idx), weights=w, minlength=int(np.prod(shape)))
    mass = raw / raw.sum()
    if floor > 0:
        mass = (1.0 - floor) * mass + floor / mass.shape[0]
    return GridHistogramModel(bounds, shape, mass, floor)


class KdeModel:
    """Gaussian kernel density over a box, mixed with a uniform floor component.

    Kernels are truncated to the box (per-axis renormalization), so the density
    integrates to one over the bounds even for centers near the boundary. The
    ``uniform_mix`` fraction guarantees density >= uniform_mix * uniform density
    everywhere inside the box.
    """

    def __init__(self, centers, center_weights, bandwidth: float, uniform_mix: float,
                 bounds: Box):
        pts, _ = _as_points(centers, bounds.ndim)
        if pts.shape[0] == 0:
            raise InvalidInputError("KDE needs at least one center")
        if not bounds.contains(pts).all():
            raise OutOfBoundsError("KDE centers must lie inside the bounds")
        w = np.asarray(center_weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise InvalidInputError("center_weights must match the number of centers")
        if np.any(w < 0) or abs(w.sum() - 1.0) > _MASS_TOL:
            raise InvalidInputError("center weights must be nonnegative and sum to 1")
        if bandwidth <= 0:
            raise InvalidInputError("bandwidth must be positive")
        if not 0.0 < uniform_mix < 1.0:
            raise InvalidInputError("uniform_mix must lie in (0, 1)")
        self.bounds = bounds
        self.centers = pts
        self.center_weights = w / w.sum()
        self.center_weights.setflags(write=False)
        self.bandwidth = float(bandwidth)
        self.uniform_mix = float(uniform_mix)
        lo = np.asarray(bounds.lo)
        hi = np.asarray(bounds.hi)
        # Per-axis truncated-Gaussian CDF window for each center, reused by
        # evaluation and sampling.
        self._cdf_lo = ndtr((lo - self.centers) / self.bandwidth)
        self._cdf_hi = ndtr((hi - self.centers) / self.bandwidth)
        self._log_trunc = np.log(self._cdf_hi - self._cdf_lo)
        self._log_uniform = math.log(uniform_mix) - math.log(bounds.volume)

    def log_density(self, points):
        pts, single = _as_points(points, self.bounds.ndim)
        inside = self.bounds.contains(pts)
        if not inside.all():
            bad = pts[~inside][0]
            raise OutOfBoundsError(f"point {tuple(bad)} lies outside the KDE bounds")
        z = (pts[:, None, :] - self.centers[None, :, :]) / self.bandwidth
        comp = (
            -0.5 * np.sum(z * z, axis=2)
            - self.bounds.ndim * (math.log(self.bandwidth) + 0.5 * math.log(2 * math.pi))
            - self._log_trunc.sum(axis=1)[None, :]
        )
        kde_part = logsumexp(comp + np.log(self.center_weights)[None, :], axis=1)
        out = np.logaddexp(math.log1p(-self.uniform_mix) + kde_part, self._log_uniform)
        return float(out[0]) if single else out

    def density(self, points):
        return np.exp(self.log_density(points))

    def sample(self, n: int, seed=None) -> np.ndarray:
        if n < 1:
            raise InvalidInputError("need n >= 1 samples")
        rng = as_generator(seed)
        from_uniform = rng.random(n) < self.uniform_mix
        comp = rng.choice(len(self.centers), size=n, p=self.center_weights)
        u = rng.random((n, self.bounds.ndim))
        # Inverse-CDF draw from each truncated kernel; exact, no rejection loop.
        # The CDF argument is clamped away from {0, 1} so ndtri stays finite,
        # and results are clipped to the box against last-ulp overshoot.
        span_lo = self._cdf_lo[comp]
        span_hi = self._cdf_hi[comp]
        arg = np.clip(span_lo + u * (span_hi - span_lo),
                      np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
        lo = np.asarray(self.bounds.lo)
        hi = np.asarray(self.bounds.hi)
        kde_pts = np.clip(self.centers[comp] + self.bandwidth * ndtri(arg), lo, hi)
        uni_pts = lo + rng.random((n, self.bounds.ndim)) * self.bounds.widths
        return np.where(from_uniform[:, None], uni_pts, kde_pts)

    def refit(self, samples, weights=None) -> "KdeModel":
        return fit_kde(
            samples,
            weights,
            bounds=self.bounds,
            bandwidth=self.bandwidth,
            uniform_mix=self.uniform_mix,
        )

    def to_dict(self) -> dict:
        return {
            "family": "kde",
            "bounds": {"lo": list(self.bounds.lo), "hi": list(self.bounds.hi)},
            "centers": self.centers.tolist(),
            "center_weights": self.center_weights.tolist(),
            "bandwidth": self.bandwidth,
            "uniform_mix": self.uniform_mix,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "KdeModel":
        bounds = Box(lo=tuple(doc["bounds"]["lo"]), hi=tuple(doc["bounds"]["hi"]))
        return cls(doc["centers"], doc["center_weights"], doc["bandwidth"],
                   doc["uniform_mix"], bounds)


def fit_kde(samples, weights=None, *, bounds: Box, bandwidth: float = 0.25,
            uniform_mix: float = 1e-3) -> KdeModel:
    """Weighted KDE fit: centers are the samples, center weights follow the weights."""
    pts, _ = _as_points(samples, bounds.ndim)
    if pts.shape[0] == 0:
        raise InvalidInputError("cannot fit a model to an empty sample list")
    w = _check_weights(pts, weights)
    return KdeModel(pts, w / w.sum(), bandwidth, uniform_mix, bounds)


_FAMILIES = {"grid_histogram": GridHistogramModel, "kde": KdeModel}


def model_from_dict(doc: dict):
    try:
        family = _FAMILIES[doc["family"]]
    except KeyError:
        raise InvalidInputError(f"unknown model family {doc.get('family')!r}") from None
    return family.from_dict(doc)


def model_from_json(text: str):
    return model_from_dict(json.loads(text))
