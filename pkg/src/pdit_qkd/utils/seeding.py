"""Derived seeds so that trial i of a run is reproducible on its own."""

import numpy as np


def derive_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


def trial_generators(seed: int, count: int) -> list[np.random.Generator]:
    """One independent generator per trial, independent of execution order."""
    return [np.random.default_rng(child) for child in derive_seeds(seed, count)]
