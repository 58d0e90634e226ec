"""Coverage metrics: grid-discretized entropy and the per-iteration record."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import Box, grid_cells
from .errors import InvalidInputError

__all__ = ["grid_entropy", "cells_visited", "EntropyReport", "REPORT_COLUMNS"]


def _occupancy(states, bounds: Box, resolution) -> np.ndarray:
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[0] == 0:
        raise InvalidInputError("need at least one state to compute occupancy")
    idx = np.atleast_1d(grid_cells(states, bounds, resolution))
    res = (resolution,) * bounds.ndim if np.isscalar(resolution) else tuple(resolution)
    return np.bincount(idx, minlength=int(np.prod(res)))


def grid_entropy(states, bounds: Box, resolution=11) -> float:
    """Empirical entropy (nats) of state visits discretized onto a regular grid.

    Empty cells contribute nothing; the value ranges from 0 (all states in one
    cell) to log(n_cells) (one state per cell).
    """
    counts = _occupancy(states, bounds, resolution)
    freqs = counts[counts > 0] / counts.sum()
    return float(-(freqs * np.log(freqs)).sum() + 0.0)


def cells_visited(states, bounds: Box, resolution=11) -> int:
    """Number of distinct grid cells occupied by the given states."""
    return int((_occupancy(states, bounds, resolution) > 0).sum())


REPORT_COLUMNS = ("iteration", "alpha", "entropy_nats", "cells_visited", "z_alpha", "seed")


@dataclass(frozen=True)
class EntropyReport:
    """One outer-loop iteration's coverage record (one CSV row)."""

    iteration: int
    alpha: float
    entropy_nats: float
    cells_visited: int
    z_alpha: float
    seed: int

    def row(self) -> tuple:
        return (self.iteration, self.alpha, self.entropy_nats,
                self.cells_visited, self.z_alpha, self.seed)
