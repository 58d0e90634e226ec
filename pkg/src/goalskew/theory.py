"""Exact finite-distribution checks for the skewing analysis.

Everything here works on explicit probability vectors, so the skew update,
its entropy behaviour near alpha = 0, and the power-normalize iteration can be
verified numerically without any sampling error:

* skewing a distribution by ``q ** alpha`` has entropy derivative
  ``-Cov[log p, log q]`` at alpha = 0, so a positive covariance guarantees an
  entropy gain for small negative alpha;
* the idealized update ``p <- p ** gamma / Z`` with gamma in [0, 1) increases
  entropy monotonically and converges to the uniform distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AbsoluteContinuityViolation, InvalidInputError, PreconditionUnmet
from .rng import as_generator

__all__ = [
    "DiscreteDist",
    "entropy",
    "exact_skew",
    "cov_log_densities",
    "DerivativeCheck",
    "verify_entropy_derivative",
    "EntropyGainCheck",
    "verify_entropy_gain",
    "PowerIterationRun",
    "iterate_power_normalize",
    "random_full_support",
    "DEFAULT_ALPHA_GRID",
]

_SUM_TOL = 1e-12


def _as_probs(p) -> np.ndarray:
    if isinstance(p, DiscreteDist):
        return p.probs
    v = np.asarray(p, dtype=float).reshape(-1)
    if v.size == 0 or np.any(v < 0):
        raise InvalidInputError("probabilities must be a nonempty nonnegative vector")
    total = v.sum()
    if abs(total - 1.0) > _SUM_TOL:
        raise InvalidInputError(f"probabilities sum to {total}, expected 1")
    return v


@dataclass(frozen=True)
class DiscreteDist:
    """Validated probability vector over k atoms."""

    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.probs, dtype=float).reshape(-1)
        if v.size == 0 or np.any(v < 0):
            raise InvalidInputError("probabilities must be a nonempty nonnegative vector")
        total = v.sum()
        if total <= 0:
            raise InvalidInputError("probabilities must have positive total mass")
        v = v / total
        v.setflags(write=False)
        object.__setattr__(self, "probs", v)

    @classmethod
    def from_weights(cls, weights) -> "DiscreteDist":
        """Normalize arbitrary nonnegative weights; rescaling by c > 0 is a no-op."""
        return cls(np.asarray(weights, dtype=float))

    def __len__(self) -> int:
        return self.probs.shape[0]


def entropy(p) -> float:
    """Shannon entropy in nats; 0 for a point mass, log k for uniform."""
    v = _as_probs(p)
    nz = v[v > 0]
    return float(-(nz * np.log(nz)).sum() + 0.0)


def exact_skew(p, q, alpha: float) -> np.ndarray:
    """Atomwise ``p * q**alpha / Z``: the infinite-sample skewed distribution.

    Requires q > 0 wherever p > 0; raises AbsoluteContinuityViolation
    otherwise. alpha = 0 returns p unchanged, and a uniform q changes nothing
    for any alpha because the constant factor cancels in the normalizer.
    """
    pv = _as_probs(p)
    qv = _as_probs(q)
    if pv.shape != qv.shape:
        raise InvalidInputError("p and q must have the same number of atoms")
    support = pv > 0
    if np.any(qv[support] == 0):
        raise AbsoluteContinuityViolation(
            "q assigns zero mass to an atom where p has positive mass"
        )
    weights = np.zeros_like(pv)
    weights[support] = pv[support] * qv[support] ** alpha
    return weights / weights.sum()


def cov_log_densities(p, q) -> float:
    """``Cov_{X~p}[log p(X), log q(X)]`` over the support of p."""
    pv = _as_probs(p)
    qv = _as_probs(q)
    support = pv > 0
    if np.any(qv[support] == 0):
        raise AbsoluteContinuityViolation(
            "q assigns zero mass to an atom where p has positive mass"
        )
    pp = pv[support]
    logp = np.log(pp)
    logq = np.log(qv[support])
    mp = float((pp * logp).sum())
    mq = float((pp * logq).sum())
    return float((pp * (logp - mp) * (logq - mq)).sum())


@dataclass(frozen=True)
class DerivativeCheck:
    """Finite-difference check of the entropy derivative at alpha = 0."""

    derivative_fd: float
    neg_covariance: float
    abs_error: float
    tolerance: float
    step: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "derivative_fd": self.derivative_fd,
            "neg_covariance": self.neg_covariance,
            "abs_error": self.abs_error,
            "tolerance": self.tolerance,
            "step": self.step,
            "passed": self.passed,
        }


def verify_entropy_derivative(p, q, h: float = 1e-4) -> DerivativeCheck:
    """Compare the central difference of ``alpha -> H(skew(p, q, alpha))`` at 0
    against ``-cov_log_densities(p, q)``.

    The tolerance ``max(1e-6, 10 h^2)`` absorbs the O(h^2) truncation error of
    the central difference.
    """
    if not 0.0 < h <= 1e-3:
        raise InvalidInputError("finite-difference step must lie in (0, 1e-3]")
    upper = entropy(exact_skew(p, q, +h))
    lower = entropy(exact_skew(p, q, -h))
    fd = (upper - lower) / (2.0 * h)
    expected = -cov_log_densities(p, q)
    tol = max(1e-6, 10.0 * h * h)
    err = abs(fd - expected)
    return DerivativeCheck(
        derivative_fd=float(fd),
        neg_covariance=float(expected),
        abs_error=float(err),
        tolerance=float(tol),
        step=float(h),
        passed=bool(err <= tol),
    )


DEFAULT_ALPHA_GRID = (-1.0, -0.5, -0.25, -0.1, -0.01, -1e-3, -1e-4, -1e-5)


@dataclass(frozen=True)
class EntropyGainCheck:
    """Grid scan for an interval [a, 0) on which skewing strictly gains entropy."""

    alpha_grid: tuple
    base_entropy: float
    skewed_entropies: tuple
    covariance: float
    verified_alpha: float | None
    passed: bool

    def to_dict(self) -> dict:
        return {
            "alpha_grid": list(self.alpha_grid),
            "base_entropy": self.base_entropy,
            "skewed_entropies": list(self.skewed_entropies),
            "covariance": self.covariance,
            "verified_alpha": self.verified_alpha,
            "passed": self.passed,
        }


def verify_entropy_gain(p, q, alpha_grid=DEFAULT_ALPHA_GRID) -> EntropyGainCheck:
    """Check that some interval [a, 0) of skew exponents strictly increases entropy.

    Applicable only when ``cov_log_densities(p, q) > 0`` (raises
    PreconditionUnmet otherwise, e.g. for uniform q where the covariance is 0).
    The reported ``verified_alpha`` is the most negative grid point such that
    every grid point between it and 0 gained entropy; the guarantee is for the
    grid, not the continuum.
    """
    grid = tuple(sorted(float(a) for a in alpha_grid))
    if not grid or grid[0] < -1.0 or grid[-1] >= 0.0:
        raise InvalidInputError("alpha_grid must lie inside [-1, 0)")
    cov = cov_log_densities(p, q)
    if cov <= 0:
        raise PreconditionUnmet(
            f"cov[log p, log q] = {cov:.3g} is not positive; the entropy-gain "
            "guarantee does not apply"
        )
    h0 = entropy(p)
    gains = [entropy(exact_skew(p, q, a)) for a in grid]
    verified = None
    for a, h in sorted(zip(grid, gains), reverse=True):  # from 0 toward -1
        if h > h0:
            verified = a
        else:
            break
    return EntropyGainCheck(
        alpha_grid=grid,
        base_entropy=float(h0),
        skewed_entropies=tuple(float(h) for h in gains),
        covariance=float(cov),
        verified_alpha=verified,
        passed=verified is not None,
    )


@dataclass(frozen=True)
class PowerIterationRun:
    """Trajectory of the idealized update ``p <- p**gamma / Z``."""

    dists: tuple
    entropies: tuple
    iterations_to_converge: int | None

    @property
    def converged(self) -> bool:
        return self.iterations_to_converge is not None


def iterate_power_normalize(p0, gamma: float, max_iters: int = 500,
                            tol: float = 1e-6) -> PowerIterationRun:
    """Iterate the exact tempering update until uniform, tracking entropy.

    Each step raises the vector to ``gamma in [0, 1)`` and renormalizes; the
    entropy must never decrease (checked with 1e-12 slack each step) and the
    sequence stops once the total-variation distance to uniform drops below
    ``tol``. Returns the visited distributions and the converging step count
    (None if max_iters was exhausted first).
    """
    if not 0.0 <= gamma < 1.0:
        raise InvalidInputError("gamma must lie in [0, 1)")
    p = _as_probs(p0)
    if np.any(p == 0):
        raise InvalidInputError("p0 must have full support")
    k = p.shape[0]
    uniform = np.full(k, 1.0 / k)
    dists = [p]
    entropies = [entropy(p)]
    converged_at = None
    for t in range(1, max_iters + 1):
        nxt = p ** gamma
        nxt = nxt / nxt.sum()
        h = entropy(nxt)
        if h < entropies[-1] - 1e-12:
            raise RuntimeError(f"entropy decreased at step {t}: {entropies[-1]} -> {h}")
        dists.append(nxt)
        entropies.append(h)
        p = nxt
        if 0.5 * np.abs(p - uniform).sum() < tol:
            converged_at = t
            break
    return PowerIterationRun(
        dists=tuple(dists),
        entropies=tuple(entropies),
        iterations_to_converge=converged_at,
    )


def random_full_support(k: int, seed=None, floor: float = 1e-6) -> np.ndarray:
    """Flat-Dirichlet draw mixed with uniform so every atom keeps >= floor mass."""
    rng = as_generator(seed)
    raw = rng.dirichlet(np.ones(k))
    mix = k * floor
    if not 0 < mix < 1:
        raise InvalidInputError("floor too large for this atom count")
    return (1.0 - mix) * raw + floor
