"""Seeded, splittable random streams.

Every stream is a Philox counter-based generator keyed by ``(seed, stream)``,
so replica ``k`` of a run with seed ``s`` is reproducible on its own.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    key = ((stream & _MASK64) << 64) | (seed & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def spawn(seed: int, n: int, offset: int = 0) -> list:
    """Independent generators for ``n`` replicas."""
    return [make_rng(seed, offset + k) for k in range(n)]
