"""Simulated worlds: a four-room point world with an oracle goal reacher, and a
discrete labyrinth for joint goal-setting and goal-reaching.

Both are immutable descriptions plus pure transition functions; episodes can
run concurrently with independent RNG streams. Labyrinth layouts load from a
plain-text map ('#' wall, '.' free, 'S' start).
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .density import Box
from .errors import InvalidInputError
from .rng import as_generator

__all__ = ["FourRooms", "Labyrinth", "SPIRAL_MAP_15"]


class FourRooms:
    """Square world split into four rooms by unit-thick midline walls, with one
    unit-wide doorway centered on each half wall.

    The oracle reacher adds Gaussian noise (std ``noise_sigma``) to the
    commanded goal and returns the nearest free-space point. The noise is far
    smaller than a room, so coverage cannot come from stochasticity alone.
    ``reach_mode='stop_at_wall'`` switches to the alternative semantics where
    the agent teleports from the start toward the noisy goal and halts at the
    first wall it would cross.
    """

    def __init__(self, side: float = 11.0, noise_sigma: float = 0.0605,
                 wall_thickness: float = 1.0, door_width: float = 1.0,
                 reach_mode: str = "project", free_rects=None, start=None):
        if side <= 0 or noise_sigma < 0:
            raise InvalidInputError("side must be positive and noise_sigma nonnegative")
        if reach_mode not in ("project", "stop_at_wall"):
            raise InvalidInputError(f"unknown reach_mode {reach_mode!r}")
        self.side = float(side)
        self.noise_sigma = float(noise_sigma)
        self.reach_mode = reach_mode
        self.bounds = Box.square(side)
        if free_rects is None:
            free_rects, wall_rects = _four_rooms_layout(side, wall_thickness, door_width)
        else:
            free_rects = [(np.asarray(lo, float), np.asarray(hi, float))
                          for lo, hi in free_rects]
            wall_rects = []
        self._free_lo = np.array([lo for lo, _ in free_rects])
        self._free_hi = np.array([hi for _, hi in free_rects])
        self._wall_rects = wall_rects
        if start is None:
            # center of the bottom-right room
            wall_lo = (side - wall_thickness) / 2.0
            wall_hi = (side + wall_thickness) / 2.0
            start = ((wall_hi + side) / 2.0, wall_lo / 2.0)
        self.start = np.asarray(start, dtype=float)

    # -- geometry ---------------------------------------------------------

    def is_free(self, points) -> np.ndarray:
        """True where a point lies in some room or doorway (closed rectangles)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        in_rect = ((pts[:, None, :] >= self._free_lo[None]) &
                   (pts[:, None, :] <= self._free_hi[None])).all(axis=2)
        return in_rect.any(axis=1)

    def project(self, points) -> np.ndarray:
        """Nearest free-space point (Euclidean). Exact: free space is a union of
        rectangles, so the projection is the closest of the per-rectangle clips;
        ties go to the lowest rectangle index.

        Points that actually move land exactly on a rectangle face shared with
        the wall; those are nudged one float ulp into the rectangle interior so
        grid discretizations never attribute reached states to wall cells."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        clipped = np.clip(pts[:, None, :], self._free_lo[None], self._free_hi[None])
        d2 = ((pts[:, None, :] - clipped) ** 2).sum(axis=2)
        best = d2.argmin(axis=1)
        rows = np.arange(len(pts))
        out = clipped[rows, best]
        moved = d2[rows, best] > 0
        if moved.any():
            center = 0.5 * (self._free_lo[best] + self._free_hi[best])
            clamped = out != pts
            nudge = moved[:, None] & clamped
            out = np.where(nudge, np.nextafter(out, center), out)
        return out if np.asarray(points).ndim > 1 else out[0]

    def _stop_at_wall(self, targets: np.ndarray) -> np.ndarray:
        """Teleport from start toward each target, halting at the first wall."""
        p0 = self.start
        d = targets - p0
        t_min = np.ones(len(targets))
        for lo, hi in self._wall_rects:
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (lo - p0) / d
                t2 = (hi - p0) / d
            t_near = np.where(np.isnan(t1), -np.inf, np.minimum(t1, t2)).max(axis=1)
            t_far = np.where(np.isnan(t2), np.inf, np.maximum(t1, t2)).min(axis=1)
            parallel_outside = (d == 0) & ((p0 < lo) | (p0 > hi))
            hit = (~parallel_outside.any(axis=1)) & (t_near <= t_far) & \
                  (t_near >= 0.0) & (t_near <= 1.0)
            t_min = np.where(hit, np.minimum(t_min, t_near), t_min)
        # halt one ulp before the wall face so the stop point stays in free space
        t_stop = np.where(t_min < 1.0, np.nextafter(t_min, 0.0), t_min)
        return p0 + t_stop[:, None] * d

    # -- episodes ---------------------------------------------------------

    def reach(self, goals, seed=None) -> np.ndarray:
        """Final state for each goal under the oracle goal-reaching policy.

        A Gaussian perturbation is applied to the goal first; the result is
        then projected into free space (or the teleport is stopped at the first
        wall, depending on ``reach_mode``). Deterministic given the seed; total
        for any goal inside the world square.
        """
        pts = np.atleast_2d(np.asarray(goals, dtype=float))
        rng = as_generator(seed)
        noisy = pts + rng.normal(0.0, self.noise_sigma, size=pts.shape) \
            if self.noise_sigma > 0 else pts.copy()
        if self.reach_mode == "stop_at_wall":
            lo = np.asarray(self.bounds.lo)
            hi = np.asarray(self.bounds.hi)
            stopped = self._stop_at_wall(np.clip(noisy, lo, hi))
            out = self.project(stopped)  # boundary hits are already free; no-op guard
        else:
            out = self.project(noisy)
        return out if np.asarray(goals).ndim > 1 else out[0]

    def valid_cells(self, resolution: int = 11):
        """Grid cells (ix, iy) whose center lies in free space."""
        widths = self.bounds.widths / resolution
        lo = np.asarray(self.bounds.lo)
        ix, iy = np.meshgrid(np.arange(resolution), np.arange(resolution), indexing="ij")
        centers = lo + (np.column_stack([ix.ravel(), iy.ravel()]) + 0.5) * widths
        free = self.is_free(centers)
        return {(int(i), int(j)) for i, j, ok in zip(ix.ravel(), iy.ravel(), free) if ok}


def _four_rooms_layout(side: float, thickness: float, door: float):
    """Default rooms/doorways/walls for the four-room world.

    Walls are two axis-aligned slabs crossing at the center; each half wall has
    one doorway of width ``door`` centered on it. Returns (free, wall) rect
    lists as (lo, hi) arrays.
    """
    w_lo = (side - thickness) / 2.0
    w_hi = (side + thickness) / 2.0
    c_low = w_lo / 2.0               # center of the lower/left half wall
    c_high = (w_hi + side) / 2.0     # center of the upper/right half wall
    d = door / 2.0
    rooms = [
        ((0.0, 0.0), (w_lo, w_lo)),        # bottom-left
        ((w_hi, 0.0), (side, w_lo)),       # bottom-right
        ((0.0, w_hi), (w_lo, side)),       # top-left
        ((w_hi, w_hi), (side, side)),      # top-right
    ]
    doors = [
        ((w_lo, c_low - d), (w_hi, c_low + d)),    # vertical wall, lower doorway
        ((w_lo, c_high - d), (w_hi, c_high + d)),  # vertical wall, upper doorway
        ((c_low - d, w_lo), (c_low + d, w_hi)),    # horizontal wall, left doorway
        ((c_high - d, w_lo), (c_high + d, w_hi)),  # horizontal wall, right doorway
    ]
    walls = [
        ((w_lo, 0.0), (w_hi, c_low - d)),
        ((w_lo, c_low + d), (w_hi, c_high - d)),
        ((w_lo, c_high + d), (w_hi, side)),
        ((0.0, w_lo), (c_low - d, w_hi)),
        ((c_low + d, w_lo), (c_high - d, w_hi)),
        ((c_high + d, w_lo), (side, w_hi)),
    ]
    as_arrays = lambda rects: [(np.asarray(lo, float), np.asarray(hi, float))
                               for lo, hi in rects]
    return as_arrays(rooms + doors), as_arrays(walls)


# 15x15 spiral corridor; walls wind inward so the only route between the start
# (center) and the outer ring is the full corridor.
SPIRAL_MAP_15 = """\
...............
.#############.
.#...........#.
.#.#########.#.
.#.#.......#.#.
.#.#.#####.#.#.
.#.#.#...#.#.#.
.#.#.#.S.#.#.#.
.#.#.#.#.#.#.#.
.#.#.#.#...#.#.
.#.#.#.#####.#.
.#.#.#.......#.
.#.#.#########.
.#.#...........
.##############
"""

ACTIONS = {0: (-1, 0), 1: (1, 0), 2: (0, 1), 3: (0, -1)}  # N, S, E, W
ACTION_NAMES = {0: "N", 1: "S", 2: "E", 3: "W"}


class Labyrinth:
    """Deterministic gridworld with 4-neighborhood moves; walls stop the agent
    in place. Reward is the negative Euclidean distance (in cell units) from
    the resulting cell to the goal cell, so it is 0 exactly at the goal."""

    def __init__(self, walls: np.ndarray, start, horizon: int = 60):
        walls = np.asarray(walls, dtype=bool)
        if walls.ndim != 2:
            raise InvalidInputError("walls must be a 2-D boolean grid")
        self.walls = walls
        self.walls.setflags(write=False)
        self.height, self.width = walls.shape
        self.start_cell = (int(start[0]), int(start[1]))
        if walls[self.start_cell]:
            raise InvalidInputError("start cell lies inside a wall")
        if horizon < 1:
            raise InvalidInputError("horizon must be >= 1")
        self.horizon = int(horizon)
        self.bounds = Box(lo=(0.0, 0.0), hi=(float(self.width), float(self.height)))
        self._reachable = self._bfs_cells(self.start_cell)
        free = {(r, c) for r, c in zip(*np.nonzero(~walls))}
        if free - self._reachable:
            pocket = sorted(free - self._reachable)[0]
            raise InvalidInputError(
                f"free cell {pocket} is unreachable from the start (enclosed pocket)"
            )
        self._valid_list = sorted(free)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_text(cls, text: str, horizon: int = 60) -> "Labyrinth":
        """Parse a map: '#' wall, '.' free, 'S' free start cell."""
        rows = [line for line in text.splitlines() if line.strip()]
        if not rows or len(set(map(len, rows))) != 1:
            raise InvalidInputError("map rows must be nonempty and equal length")
        start = None
        walls = np.zeros((len(rows), len(rows[0])), dtype=bool)
        for r, line in enumerate(rows):
            for c, ch in enumerate(line):
                if ch == "#":
                    walls[r, c] = True
                elif ch == "S":
                    if start is not None:
                        raise InvalidInputError("map must contain exactly one start 'S'")
                    start = (r, c)
                elif ch != ".":
                    raise InvalidInputError(f"unknown map character {ch!r}")
        if start is None:
            raise InvalidInputError("map must contain a start cell 'S'")
        return cls(walls, start, horizon)

    @classmethod
    def from_file(cls, path, horizon: int = 60) -> "Labyrinth":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read(), horizon)

    @classmethod
    def spiral_default(cls, horizon: int = 60) -> "Labyrinth":
        return cls.from_text(SPIRAL_MAP_15, horizon)

    # -- dynamics ---------------------------------------------------------

    def step(self, state, action, goal, steps_taken: int = 0):
        """Apply one move; blocked moves leave the state unchanged.

        Returns (next_state, reward, done) with done when the goal is reached
        or the episode horizon is exhausted.
        """
        if action not in ACTIONS:
            raise InvalidInputError(f"action must be one of {sorted(ACTIONS)}, got {action!r}")
        r, c = state
        dr, dc = ACTIONS[action]
        nr, nc = r + dr, c + dc
        if 0 <= nr < self.height and 0 <= nc < self.width and not self.walls[nr, nc]:
            nxt = (nr, nc)
        else:
            nxt = (r, c)
        reward = -float(np.hypot(nxt[0] - goal[0], nxt[1] - goal[1]))
        done = nxt == tuple(goal) or steps_taken + 1 >= self.horizon
        return nxt, reward, done

    def distance(self, cell, goal) -> float:
        return float(np.hypot(cell[0] - goal[0], cell[1] - goal[1]))

    def valid_cells(self):
        """All free cells, every one reachable from the start by construction."""
        return list(self._valid_list)

    def cell_center(self, cell) -> np.ndarray:
        """Continuous (x, y) coordinates of a cell center for density models."""
        return np.array([cell[1] + 0.5, cell[0] + 0.5])

    def cell_centers(self, cells) -> np.ndarray:
        arr = np.asarray(list(cells), dtype=float)
        return np.column_stack([arr[:, 1] + 0.5, arr[:, 0] + 0.5])

    def nearest_valid_cell(self, point) -> tuple:
        """Snap a continuous point to the closest free cell (by center distance)."""
        pt = np.asarray(point, dtype=float)
        centers = self.cell_centers(self._valid_list)
        d2 = ((centers - pt) ** 2).sum(axis=1)
        return self._valid_list[int(d2.argmin())]

    def _bfs_cells(self, origin) -> set:
        seen = {origin}
        queue = deque([origin])
        while queue:
            r, c = queue.popleft()
            for dr, dc in ACTIONS.values():
                nr, nc = r + dr, c + dc
                if (0 <= nr < self.height and 0 <= nc < self.width
                        and not self.walls[nr, nc] and (nr, nc) not in seen):
                    seen.add((nr, nc))
                    queue.append((nr, nc))
        return seen

    def shortest_path_lengths(self, origin=None) -> dict:
        """BFS step counts from ``origin`` (default: the start) to every free cell."""
        origin = self.start_cell if origin is None else (int(origin[0]), int(origin[1]))
        dist = {origin: 0}
        queue = deque([origin])
        while queue:
            r, c = queue.popleft()
            for dr, dc in ACTIONS.values():
                nr, nc = r + dr, c + dc
                if (0 <= nr < self.height and 0 <= nc < self.width
                        and not self.walls[nr, nc] and (nr, nc) not in dist):
                    dist[(nr, nc)] = dist[(r, c)] + 1
                    queue.append((nr, nc))
        return dist

    @property
    def start(self) -> np.ndarray:
        """Continuous start coordinates (for seeding goal models)."""
        return self.cell_center(self.start_cell)
