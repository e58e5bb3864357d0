# utils/permutations.py

from __future__ import annotations

from typing import Sequence

import numpy as np

from utils.errors import ValidationError


def as_permutation(sigma: Sequence[int], n: int) -> np.ndarray:
    """Validate ``sigma`` as a bijection on ``{0..n-1}``; ``sigma[i]`` is the new label of ``i``."""
    perm = np.asarray(sigma, dtype=np.int64)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValidationError(f"not a permutation of {n} elements: {list(sigma)}")
    return perm


def inverse(sigma: np.ndarray) -> np.ndarray:
    inv = np.empty_like(sigma)
    inv[sigma] = np.arange(sigma.size)
    return inv


def random_permutation(n: int, rng: np.random.Generator, fix_first: bool = False) -> np.ndarray:
    if not fix_first:
        return rng.permutation(n)
    return np.concatenate(([0], 1 + rng.permutation(n - 1)))
