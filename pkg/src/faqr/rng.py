"""Deterministic random streams.

Every randomized routine in the package derives its generator from a user
seed plus an integer path (replicate index, purpose tag, ...) using
numpy's SeedSequence spawn keys on top of the counter-based Philox
engine.  A given (seed, path) pair yields the same stream no matter in
which order, or on how many threads, the tasks run; that is what makes
Monte Carlo runs reproducible and parallelizable at the same time.
"""

import numpy as np

# Recorded in every randomized output so results can be reproduced by
# other tooling that speaks numpy's bit-generator names.
ALGORITHM = "philox4x64-10+seedseq"


def stream(seed, *path):
    """Return a Generator for the stream identified by (seed, *path).

    Parameters
    ----------
    seed : int
        Non-negative 64-bit user seed.
    *path : int
        Integer path components, e.g. a replicate index or a purpose tag.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *path):
    """Deterministically derive a child seed, for APIs that take a seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])
