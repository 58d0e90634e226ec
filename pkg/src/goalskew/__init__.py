"""Maximum-entropy goal sampling via density-skewed resampling.

The package splits into:

* :mod:`goalskew.density`  - histogram / KDE generative models with floors
* :mod:`goalskew.skew`     - skew weights, the skewed empirical distribution,
  resampling, and the propose-collect-skew-refit loop
* :mod:`goalskew.envs`     - four-room point world and discrete labyrinths
* :mod:`goalskew.agent`    - goal-conditioned tabular Q-learning with relabeling
* :mod:`goalskew.theory`   - exact finite-distribution verifiers
* :mod:`goalskew.metrics`  - grid-entropy coverage metrics
* :mod:`goalskew.ablation` - importance-sampling vs resampling gradient variance
* :mod:`goalskew.runner`   - seeded experiment grids, CSV/JSON emission, CLI
"""

__version__ = "0.1.0"

from .density import Box, GridHistogramModel, KdeModel, fit_histogram, fit_kde
from .envs import FourRooms, Labyrinth
from .errors import (AbsoluteContinuityViolation, CollectorError, InvalidInputError,
                     OutOfBoundsError, PreconditionUnmet)
from .metrics import EntropyReport, cells_visited, grid_entropy
from .skew import (GoalSource, SkewConfig, SkewedEmpirical, build_skewed_empirical,
                   run_skew_refit, sir_resample, skew_weights, skew_refit_iteration)
from .theory import (DiscreteDist, cov_log_densities, entropy, exact_skew,
                     iterate_power_normalize, verify_entropy_derivative,
                     verify_entropy_gain)

__all__ = [
    "__version__",
    "Box", "GridHistogramModel", "KdeModel", "fit_histogram", "fit_kde",
    "FourRooms", "Labyrinth",
    "AbsoluteContinuityViolation", "CollectorError", "InvalidInputError",
    "OutOfBoundsError", "PreconditionUnmet",
    "EntropyReport", "cells_visited", "grid_entropy",
    "GoalSource", "SkewConfig", "SkewedEmpirical", "build_skewed_empirical",
    "run_skew_refit", "sir_resample", "skew_weights", "skew_refit_iteration",
    "DiscreteDist", "cov_log_densities", "entropy", "exact_skew",
    "iterate_power_normalize", "verify_entropy_derivative", "verify_entropy_gain",
]
