"""Deterministic random streams.

Every random draw in the package comes from a Philox (counter-based) generator
keyed by a 64-bit integer. Sweeps derive one key per (master seed, grid point,
trial, purpose) tuple so results do not depend on scheduling.
"""
import numpy as np

# Purpose tags keep the path and the sensing-error streams of a trial disjoint.
PATH_STREAM = 0
SENSING_STREAM = 1


def make_rng(seed: int) -> np.random.Generator:
    """Generator for a single integer key"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def derive_seed(master_seed: int, *keys: int) -> int:
    """Map (master_seed, *keys) to a 64-bit stream key."""
    sequence = np.random.SeedSequence([int(master_seed), *(int(k) for k in keys)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
