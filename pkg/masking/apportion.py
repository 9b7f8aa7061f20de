"""Largest-remainder integerization, computed with exact rationals so ties are real ties."""

from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from utils.errors import ContractError


def exact(value: float) -> Fraction:
    """Rational for the shortest decimal that round-trips ``value`` (0.15 -> 3/20)."""
    return Fraction(repr(float(value)))


def apportion(total: int, weights: Sequence[float], capacity: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Split ``total`` units proportionally to ``weights``.

    Each share starts at floor(total * w_i / sum(w)) capped at its capacity; the
    leftover goes one unit at a time by descending fractional part (ties to the
    smaller index), skipping shares already at capacity, cycling until spent.
    Zero total weight falls back to weighting by capacity.
    """
    size = len(weights)
    caps = [total] * size if capacity is None else [int(c) for c in capacity]
    if total < 0 or total > sum(caps):
        raise ContractError(f"cannot apportion {total} units over capacity {sum(caps)}")
    if size == 0:
        return np.zeros(0, dtype=np.int64)
    ws = [exact(w) for w in weights]
    if sum(ws) <= 0:
        ws = [Fraction(c) for c in caps]
    weight_sum = sum(ws)
    if weight_sum == 0:
        return np.zeros(size, dtype=np.int64)
    targets = [Fraction(total) * w / weight_sum for w in ws]
    counts = [min(int(t), caps[i]) for i, t in enumerate(targets)]
    order = sorted(range(size), key=lambda i: (-(targets[i] - int(targets[i])), i))
    remaining = total - sum(counts)
    while remaining > 0:
        for i in order:
            if remaining == 0:
                break
            if counts[i] < caps[i]:
                counts[i] += 1
                remaining -= 1
    return np.asarray(counts, dtype=np.int64)
