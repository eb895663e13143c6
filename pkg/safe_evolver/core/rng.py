import numpy as np

MUTATION = 0
EVALUATION = 1


def stream(seed: int, generation: int, parent: int, child: int, purpose: int) -> np.random.Generator:
    """
    Independent generator for one (generation, parent, child, purpose) slot.

    Streams are derived from the root seed by key, not drawn in sequence, so
    the order in which candidates are processed never changes the numbers.
    """
    key = np.random.SeedSequence(seed, spawn_key=(generation, parent, child, purpose))
    return np.random.default_rng(key)
