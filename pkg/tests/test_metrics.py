import math

import numpy as np
import pytest

from goalskew.density import Box
from goalskew.errors import InvalidInputError
from goalskew.metrics import EntropyReport, REPORT_COLUMNS, cells_visited, grid_entropy

WORLD = Box.square(11.0)


class TestGridEntropy:
    def test_single_cell_zero(self):
        states = np.tile([[3.2, 4.1]], (50, 1))
        assert grid_entropy(states, WORLD) == 0.0

    def test_one_state_per_cell(self):
        xs = (np.arange(11) + 0.5)
        grid = np.stack(np.meshgrid(xs, xs), axis=-1).reshape(-1, 2)
        assert grid_entropy(grid, WORLD) == pytest.approx(math.log(121), abs=1e-12)

    def test_two_cell_even_split(self):
        states = np.vstack([np.tile([[0.5, 0.5]], (500, 1)),
                            np.tile([[10.5, 10.5]], (500, 1))])
        assert grid_entropy(states, WORLD) == pytest.approx(math.log(2), abs=1e-12)

    def test_empty_states_rejected(self):
        with pytest.raises(InvalidInputError):
            grid_entropy(np.empty((0, 2)), WORLD)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        states = rng.random((1000, 2)) * 11
        shuffled = states[rng.permutation(1000)]
        assert grid_entropy(states, WORLD) == grid_entropy(shuffled, WORLD)

    def test_non_default_resolution(self):
        states = np.array([[0.1, 0.1], [10.9, 10.9]])
        assert grid_entropy(states, WORLD, resolution=2) == pytest.approx(math.log(2))


class TestCellsVisited:
    def test_counts_distinct_cells(self):
        states = np.array([[0.5, 0.5], [0.6, 0.6], [10.5, 0.5]])
        assert cells_visited(states, WORLD) == 2

    def test_bounded_by_grid(self):
        rng = np.random.default_rng(1)
        states = rng.random((100_000, 2)) * 11
        assert cells_visited(states, WORLD) == 121


class TestEntropyReport:
    def test_row_matches_columns(self):
        rep = EntropyReport(iteration=3, alpha=-1.0, entropy_nats=2.5,
                            cells_visited=40, z_alpha=123.4, seed=7)
        assert len(rep.row()) == len(REPORT_COLUMNS)
        assert rep.row() == (3, -1.0, 2.5, 40, 123.4, 7)

    def test_entropy_within_grid_ceiling(self):
        rng = np.random.default_rng(2)
        states = rng.random((5000, 2)) * 11
        h = grid_entropy(states, WORLD)
        assert 0.0 <= h <= math.log(121)
