"""Seeded random number generation.

All randomness in the package flows through `make_rng`, which wraps numpy's
Philox generator: a counter-based 64-bit generator with a fixed algorithm,
so identical seeds produce bitwise-identical streams across platforms and
process boundaries.  The algorithm identifier is recorded in CSV metadata.
"""

import numpy as np

RNG_ALGORITHM = "numpy-philox4x64-10"


def make_rng(seed: int) -> np.random.Generator:
    """Return a counter-based generator keyed directly by `seed`."""
    return np.random.Generator(np.random.Philox(key=seed))
