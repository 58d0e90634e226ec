"""Density-skewed resampling: weights, the skewed empirical distribution, and
the propose-collect-skew-refit outer loop.

Collected states are reweighted by ``density ** alpha`` with ``alpha <= 0`` so
rare states gain mass, then a new generative model is fit to a resample drawn
from the weighted atoms (sampling importance resampling). Iterating this drives
the fitted goal distribution toward uniform over the reachable states.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .density import GridHistogramModel, fit_histogram
from .errors import CollectorError, InvalidInputError
from .metrics import EntropyReport, cells_visited, grid_entropy
from .rng import as_generator

__all__ = [
    "GoalSource",
    "SkewConfig",
    "SkewedEmpirical",
    "skew_weights",
    "skew_log_weights",
    "build_skewed_empirical",
    "skewed_from_log_weights",
    "sir_resample",
    "weighted_loglik_grad",
    "skew_refit_iteration",
    "SkewRefitStep",
    "SkewRefitRun",
    "run_skew_refit",
]

ALPHA_MIN = -10.0


class GoalSource(enum.Enum):
    """Where the next iteration's goals are drawn from."""

    FROM_MODEL = "model"
    FROM_SKEWED_EMPIRICAL = "skewed_empirical"

    @classmethod
    def parse(cls, value) -> "GoalSource":
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value == value or member.name == value:
                return member
        raise InvalidInputError(f"unknown goal source {value!r}")


@dataclass(frozen=True)
class SkewConfig:
    """Knobs of one skewed-resampling iteration.

    alpha:          skew exponent, in [-10, 0]; 0 disables skewing entirely.
    n_collect:      states collected per iteration.
    resample_size:  atoms drawn when refitting the model (defaults to n_collect).
    goal_source:    sample goals from the fitted model or from the previous
                    skewed empirical distribution (the default; both work).
    """

    alpha: float = -1.0
    n_collect: int = 500
    resample_size: int | None = None
    goal_source: GoalSource = GoalSource.FROM_SKEWED_EMPIRICAL

    def __post_init__(self):
        if not ALPHA_MIN <= self.alpha <= 0.0:
            raise InvalidInputError(f"alpha must lie in [{ALPHA_MIN}, 0], got {self.alpha}")
        if self.n_collect < 1:
            raise InvalidInputError("n_collect must be >= 1")
        if self.resample_size is not None and self.resample_size < 1:
            raise InvalidInputError("resample_size must be >= 1")
        object.__setattr__(self, "goal_source", GoalSource.parse(self.goal_source))

    @property
    def effective_resample_size(self) -> int:
        return self.n_collect if self.resample_size is None else self.resample_size


@dataclass(frozen=True)
class SkewedEmpirical:
    """Finite weighted atom set: atoms, normalized probabilities, and the
    normalizer z_alpha (the raw weight total). Duplicate atoms stay distinct."""

    atoms: np.ndarray
    probs: np.ndarray
    z_alpha: float

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if atoms.shape[0] != probs.shape[0]:
            raise InvalidInputError("atoms and probs must have the same length")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise InvalidInputError("probs must be nonnegative and sum to 1")
        if not self.z_alpha > 0:
            raise InvalidInputError("z_alpha must be positive")
        atoms.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return self.atoms.shape[0]

    def resample(self, m: int, seed=None) -> np.ndarray:
        """``m`` i.i.d. categorical draws from (atoms, probs)."""
        if m < 1:
            raise InvalidInputError("need m >= 1 draws")
        rng = as_generator(seed)
        idx = rng.choice(len(self), size=m, p=self.probs)
        return self.atoms[idx]


def skew_weights(model, samples, alpha: float) -> np.ndarray:
    """Per-sample weight ``density(sample) ** alpha`` with ``alpha <= 0``.

    The model's density floor keeps every weight finite and positive. With
    alpha = 0 all weights are exactly 1 and the skew step is a no-op.
    """
    return np.exp(skew_log_weights(model, samples, alpha))


def skew_log_weights(model, samples, alpha: float) -> np.ndarray:
    if alpha > 0:
        raise InvalidInputError(f"skew exponent must be <= 0, got {alpha}")
    logd = np.atleast_1d(model.log_density(samples))
    if alpha == 0:  # exact no-op even for floorless models with -inf log densities
        return np.zeros_like(logd)
    return alpha * logd


def build_skewed_empirical(samples, weights) -> SkewedEmpirical:
    """Normalize raw weights into a skewed empirical distribution.

    z_alpha is exactly ``sum(weights)``; probabilities are weights / z_alpha.
    """
    atoms = np.atleast_2d(np.asarray(samples, dtype=float))
    w = np.asarray(weights, dtype=float).reshape(-1)
    if atoms.shape[0] != w.shape[0]:
        raise InvalidInputError("weights must match the number of samples")
    if atoms.shape[0] == 0:
        raise InvalidInputError("cannot build a distribution over zero atoms")
    if np.any(w < 0):
        raise InvalidInputError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise InvalidInputError("total weight must be positive")
    return SkewedEmpirical(atoms=atoms, probs=w / total, z_alpha=float(total))


def skewed_from_log_weights(samples, log_weights) -> SkewedEmpirical:
    """Overflow-safe variant: probabilities via max-subtracted exponentials.

    Needed for strongly negative exponents, where raw weights can overflow
    even though their ratios are benign.
    """
    atoms = np.atleast_2d(np.asarray(samples, dtype=float))
    logw = np.asarray(log_weights, dtype=float).reshape(-1)
    if atoms.shape[0] != logw.shape[0] or atoms.shape[0] == 0:
        raise InvalidInputError("log_weights must match a nonempty sample list")
    shifted = np.exp(logw - logw.max())
    probs = shifted / shifted.sum()
    return SkewedEmpirical(atoms=atoms, probs=probs, z_alpha=float(np.exp(logsumexp(logw))))


def sir_resample(dist: SkewedEmpirical, m: int, seed=None) -> np.ndarray:
    """Sampling importance resampling: draw ``m`` atoms by their skewed probabilities."""
    return dist.resample(m, seed)


def weighted_loglik_grad(logits, cell_idx, weights, n_cells: int | None = None) -> np.ndarray:
    """Gradient of ``sum_i w_i * log q(s_i)`` for a logit-parameterized histogram.

    The histogram's cell masses are ``softmax(logits)`` on an equal-area grid,
    so the gradient has the closed form ``counts_w - sum(w) * softmax(logits)``
    where ``counts_w[k]`` is the total weight of samples in cell k. This is the
    importance-weighted update whose variance the resampling route avoids.
    """
    theta = np.asarray(logits, dtype=float).reshape(-1)
    idx = np.asarray(cell_idx).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if idx.shape[0] != w.shape[0]:
        raise InvalidInputError("weights must match the number of samples")
    n = theta.shape[0] if n_cells is None else int(n_cells)
    probs = np.exp(theta - logsumexp(theta))
    counts = np.bincount(idx, weights=w, minlength=n)
    return counts - w.sum() * probs


@dataclass(frozen=True)
class SkewRefitStep:
    """Everything one outer-loop iteration produced."""

    model: object
    skewed: SkewedEmpirical
    report: EntropyReport
    states: np.ndarray


def skew_refit_iteration(model, collector, config: SkewConfig, seed=None, *,
                         prev_skewed: SkewedEmpirical | None = None,
                         state_pool: np.ndarray | None = None,
                         grid_resolution: int = 11,
                         iteration: int = 0,
                         report_seed: int = 0) -> SkewRefitStep:
    """One iteration: propose goals, collect states, skew, resample, refit.

    ``collector(goals, rng) -> states`` runs the goal-reaching procedure on a
    batch of goals. Goals come from ``prev_skewed`` when the config asks for the
    skewed-empirical source and one exists, else from the model. When
    ``state_pool`` is given, the skewed distribution and the refit cover the
    pool plus this iteration's states (everything collected so far), not just
    the fresh batch; the entropy report always describes the fresh batch.

    The skew weights use the model family's fresh MLE fit of the collected set
    as the density estimate. Weighting by the goal model of the previous round
    instead makes the exact-refit loop invert itself every iteration (the fit
    already *is* the skewed distribution), which oscillates rather than
    spreading; the fresh fit keeps the weight base aligned with the states
    being weighted, turning the update into the convergent tempering map.
    """
    rng = as_generator(seed)
    n = config.n_collect
    use_skewed = (
        config.goal_source is GoalSource.FROM_SKEWED_EMPIRICAL and prev_skewed is not None
    )
    goals = prev_skewed.resample(n, rng) if use_skewed else model.sample(n, rng)
    try:
        states = np.atleast_2d(np.asarray(collector(goals, rng), dtype=float))
    except Exception as exc:
        raise CollectorError(f"state collection failed: {exc}") from exc
    if states.shape[0] != n:
        raise CollectorError(
            f"collector returned {states.shape[0]} states for {n} goals"
        )

    fit_set = states if state_pool is None else np.vstack([state_pool, states])
    density_estimate = model.refit(fit_set)
    logw = skew_log_weights(density_estimate, fit_set, config.alpha)
    skewed = skewed_from_log_weights(fit_set, logw)
    resampled = skewed.resample(config.effective_resample_size, rng)
    next_model = model.refit(resampled)

    report = EntropyReport(
        iteration=iteration,
        alpha=config.alpha,
        entropy_nats=grid_entropy(states, model.bounds, grid_resolution),
        cells_visited=cells_visited(states, model.bounds, grid_resolution),
        z_alpha=skewed.z_alpha,
        seed=report_seed,
    )
    return SkewRefitStep(model=next_model, skewed=skewed, report=report, states=states)


@dataclass
class SkewRefitRun:
    """Chained iteration results: per-iteration reports and model checkpoints."""

    reports: list = field(default_factory=list)
    models: list = field(default_factory=list)

    @property
    def final_model(self):
        return self.models[-1] if self.models else None


def _default_initial_model(env, resolution, floor):
    """Concentrate the first goal distribution at the start state when the
    world has one; otherwise start from the uniform histogram."""
    start = getattr(env, "start", None)
    if start is None:
        shape = (resolution,) * env.bounds.ndim if np.isscalar(resolution) else tuple(resolution)
        n = int(np.prod(shape))
        return GridHistogramModel(env.bounds, shape, np.full(n, 1.0 / n), floor)
    pts = np.atleast_2d(np.asarray(start, dtype=float))
    return fit_histogram(pts, bounds=env.bounds, resolution=resolution, floor=floor)


def run_skew_refit(env, policy, config: SkewConfig, iterations: int, seed=0, *,
                   initial_model=None, grid_resolution: int = 11,
                   model_resolution: int = 11, floor: float = 1e-3,
                   pool_states: bool = False) -> SkewRefitRun:
    """Run the outer loop for ``iterations`` rounds and record coverage.

    ``env`` only needs a ``bounds`` box (and optionally a ``start`` point used
    to seed the initial model); ``policy(goals, rng) -> states`` is the
    goal-reaching procedure, e.g. a bound environment method. By default each
    round's model is fit to that round's collected states alone; with
    ``pool_states`` the skew and refit instead cover everything collected so
    far, which damps per-round fit noise at the cost of slower adaptation.
    """
    if iterations < 0:
        raise InvalidInputError("iterations must be >= 0")
    rng = as_generator(seed)
    report_seed = seed if isinstance(seed, (int, np.integer)) else 0
    model = initial_model
    if model is None:
        model = _default_initial_model(env, model_resolution, floor)
    run = SkewRefitRun()
    pool = np.empty((0, env.bounds.ndim)) if pool_states else None
    prev_skewed = None
    for t in range(iterations):
        step = skew_refit_iteration(
            model, policy, config, rng,
            prev_skewed=prev_skewed,
            state_pool=pool if pool_states else None,
            grid_resolution=grid_resolution,
            iteration=t,
            report_seed=report_seed,
        )
        model = step.model
        prev_skewed = step.skewed
        if pool_states:
            pool = np.vstack([pool, step.states])
        run.reports.append(step.report)
        run.models.append(step.model)
    return run
