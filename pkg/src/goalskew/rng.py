"""Seed handling: every stochastic entry point accepts a seed or a Generator."""

import numpy as np


def as_generator(seed) -> np.random.Generator:
    """Return ``seed`` unchanged if it already is a Generator, else seed a new one."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
