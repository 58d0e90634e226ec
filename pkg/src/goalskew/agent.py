"""Tabular goal-conditioned Q-learning with hindsight relabeling, driven by
skewed goal proposals.

The agent learns q(state, goal, action) with epsilon-greedy collection and
standard one-step backups. Half of the training goals are replaced by draws
from the current skewed state distribution, 30% by future states of the same
episode, and the rest keep the original goal, so the value table densifies
around both achieved and proposed-rare states.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .density import fit_histogram
from .errors import InvalidInputError
from .metrics import EntropyReport, grid_entropy
from .rng import as_generator
from .skew import (GoalSource, SkewConfig, SkewedEmpirical, build_skewed_empirical,
                   skew_log_weights, skewed_from_log_weights)

__all__ = ["Transition", "ReplayBuffer", "GoalQTable", "relabel", "train_joint",
           "JointTrainResult", "RELABEL_SKEWED", "RELABEL_FUTURE", "RELABEL_ORIGINAL"]

N_ACTIONS = 4

# Relabeling mix: skewed-proposal / future-state / keep-original.
RELABEL_SKEWED = 0.5
RELABEL_FUTURE = 0.3
RELABEL_ORIGINAL = 0.2


@dataclass(frozen=True)
class Transition:
    state: tuple
    action: int
    next_state: tuple
    goal: tuple
    reward: float
    done: bool
    future_states: tuple = ()


class ReplayBuffer:
    """FIFO ring buffer of transitions; oldest entries are evicted first."""

    def __init__(self, capacity: int = 100_000):
        if capacity < 1:
            raise InvalidInputError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._items = deque(maxlen=self.capacity)

    def push(self, transition: Transition):
        self._items.append(transition)

    def sample(self, seed=None) -> Transition:
        if not self._items:
            raise InvalidInputError("cannot sample from an empty buffer")
        rng = as_generator(seed)
        return self._items[int(rng.integers(len(self._items)))]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


class GoalQTable:
    """Action values indexed by (state cell, goal cell, action) over the valid cells."""

    def __init__(self, env, learning_rate: float = 0.1, discount: float = 0.95,
                 epsilon: float = 0.2):
        if not 0.0 <= learning_rate <= 1.0:
            raise InvalidInputError("learning_rate must lie in [0, 1]")
        if not 0.0 < discount < 1.0:
            raise InvalidInputError("discount must lie in (0, 1)")
        if not 0.0 <= epsilon <= 1.0:
            raise InvalidInputError("epsilon must lie in [0, 1]")
        self.env = env
        self.learning_rate = float(learning_rate)
        self.discount = float(discount)
        self.epsilon = float(epsilon)
        self.cells = list(env.valid_cells())
        self.index = {cell: i for i, cell in enumerate(self.cells)}
        self.table = np.zeros((len(self.cells), len(self.cells), N_ACTIONS))

    def _si(self, cell) -> int:
        try:
            return self.index[tuple(cell)]
        except KeyError:
            raise InvalidInputError(f"{tuple(cell)} is not a valid cell") from None

    def values(self, state, goal) -> np.ndarray:
        return self.table[self._si(state), self._si(goal)]

    def select_action(self, state, goal, seed=None) -> int:
        """Epsilon-greedy action; greedy ties break toward the lowest action index."""
        rng = as_generator(seed)
        if rng.random() < self.epsilon:
            return int(rng.integers(N_ACTIONS))
        return int(np.argmax(self.values(state, goal)))

    def update(self, state, action, next_state, goal, reward, done) -> float:
        """One-step backup toward ``r + discount * max_a' q(s', g, a')``."""
        si, gi = self._si(state), self._si(goal)
        target = reward
        if not done:
            target += self.discount * float(self.table[self._si(next_state), gi].max())
        eta = self.learning_rate
        self.table[si, gi, action] = (1.0 - eta) * self.table[si, gi, action] + eta * target
        return float(self.table[si, gi, action])

    def greedy_rollout(self, start, goal, max_steps=None):
        """Follow the greedy policy from start; returns the visited cell path."""
        max_steps = self.env.horizon if max_steps is None else max_steps
        path = [tuple(start)]
        state = tuple(start)
        for t in range(max_steps):
            action = int(np.argmax(self.values(state, goal)))
            state, _, done = self.env.step(state, action, goal, t)
            path.append(state)
            if state == tuple(goal):
                break
        return path


def relabel(transition: Transition, episode_future_states, skewed_dist: SkewedEmpirical,
            seed=None, *, snap=None):
    """Draw a training goal: skewed proposal (0.5), an episode future state (0.3),
    or the original goal (0.2).

    When the episode has no future states that branch's mass goes back to the
    original goal. ``snap`` maps a continuous skewed atom to a valid goal cell;
    identity if omitted.
    """
    if skewed_dist is None or len(skewed_dist) == 0:
        raise InvalidInputError("skewed distribution must be nonempty")
    rng = as_generator(seed)
    u = rng.random()
    if u < RELABEL_SKEWED:
        atom = skewed_dist.resample(1, rng)[0]
        return snap(atom) if snap is not None else tuple(atom)
    if u < RELABEL_SKEWED + RELABEL_FUTURE and len(episode_future_states) > 0:
        pick = int(rng.integers(len(episode_future_states)))
        return tuple(episode_future_states[pick])
    return tuple(transition.goal)


@dataclass
class JointTrainResult:
    qtable: GoalQTable
    reports: list
    coverage: list  # distinct cells ever visited, per epoch

    @property
    def final_coverage(self) -> int:
        return self.coverage[-1] if self.coverage else 0


def train_joint(env, skew_config: SkewConfig, epochs: int, seed=0, *,
                learning_rate: float = 0.1, discount: float = 0.95,
                epsilon: float = 0.2, buffer_capacity: int = 100_000,
                updates_per_transition: int = 2, model_floor: float = 1e-3,
                grid_resolution: int | None = None) -> JointTrainResult:
    """Alternate goal-driven episode collection, relabeled Q-updates, and a
    skewed refit of the goal model on episode terminal states.

    Each epoch runs ``skew_config.n_collect`` episodes whose goals come from
    the current skewed terminal-state distribution (or the fitted model,
    depending on the config), pushes their transitions into the replay buffer,
    and performs relabeled backups on buffer samples. The epoch ends by
    reweighting the pooled terminal states by ``density ** alpha`` and refitting
    the goal model to a resample. Coverage counts distinct cells ever visited.
    """
    if epochs < 0:
        raise InvalidInputError("epochs must be >= 0")
    rng = as_generator(seed)
    report_seed = seed if isinstance(seed, (int, np.integer)) else 0
    qtable = GoalQTable(env, learning_rate, discount, epsilon)
    buffer = ReplayBuffer(buffer_capacity)
    resolution = (env.width, env.height) if grid_resolution is None else grid_resolution

    start_pt = env.cell_center(env.start_cell)
    model = fit_histogram(start_pt[None, :], bounds=env.bounds,
                          resolution=resolution, floor=model_floor)
    skewed = build_skewed_empirical(start_pt[None, :], np.ones(1))
    terminal_pool = [start_pt]

    visited = {env.start_cell}
    reports, coverage = [], []

    for epoch in range(epochs):
        epoch_terminals = []
        for _ in range(skew_config.n_collect):
            if skew_config.goal_source is GoalSource.FROM_SKEWED_EMPIRICAL:
                goal_pt = skewed.resample(1, rng)[0]
            else:
                goal_pt = model.sample(1, rng)[0]
            goal = env.nearest_valid_cell(goal_pt)

            state = env.start_cell
            episode = []
            for t in range(env.horizon):
                action = qtable.select_action(state, goal, rng)
                nxt, reward, done = env.step(state, action, goal, t)
                episode.append((state, action, nxt, goal, reward, done))
                visited.add(nxt)
                state = nxt
                if done:
                    break
            epoch_terminals.append(state)

            future_cells = [tr[2] for tr in episode]
            for i, (s, a, nxt, g, r, done) in enumerate(episode):
                buffer.push(Transition(s, a, nxt, g, r, done,
                                       future_states=tuple(future_cells[i:])))
            for _ in range(updates_per_transition * len(episode)):
                tr = buffer.sample(rng)
                goal2 = relabel(tr, tr.future_states, skewed, rng,
                                snap=env.nearest_valid_cell)
                reward2 = -env.distance(tr.next_state, goal2)
                done2 = tr.next_state == tuple(goal2)
                qtable.update(tr.state, tr.action, tr.next_state, goal2, reward2, done2)

        # skewed refit on everything reached at episode ends so far; the weight
        # base is the fresh density estimate of that pool (see skew_refit_iteration)
        terminal_pool.extend(env.cell_center(c) for c in epoch_terminals)
        pool_pts = np.asarray(terminal_pool)
        density_estimate = model.refit(pool_pts)
        logw = skew_log_weights(density_estimate, pool_pts, skew_config.alpha)
        skewed = skewed_from_log_weights(pool_pts, logw)
        resampled = skewed.resample(skew_config.effective_resample_size, rng)
        model = model.refit(resampled)

        epoch_pts = env.cell_centers(epoch_terminals)
        reports.append(EntropyReport(
            iteration=epoch,
            alpha=skew_config.alpha,
            entropy_nats=grid_entropy(epoch_pts, env.bounds, resolution),
            cells_visited=len(visited),
            z_alpha=skewed.z_alpha,
            seed=report_seed,
        ))
        coverage.append(len(visited))

    return JointTrainResult(qtable=qtable, reports=reports, coverage=coverage)
