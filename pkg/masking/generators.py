"""
Per-granularity mask generators.

All masks are length-N uint8 vectors with 1 = masked, 0 = visible, and every
generator returns exactly k masked positions.
"""

import logging
import math
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from masking.apportion import apportion, exact
from utils.errors import ContractError

logger = logging.getLogger(__name__)

# blend weights snap to the nearest rational with at most this denominator
BLEND_DENOMINATOR_LIMIT = 10**6


def _check_count(k: int, n: int) -> None:
    if not 0 <= k <= n:
        raise ContractError(f"cannot mask {k} of {n} positions")


def _mask_from(positions: np.ndarray, n: int) -> np.ndarray:
    mask = np.zeros(n, dtype=np.uint8)
    mask[positions] = 1
    return mask


def blend_weights(alpha_i: float, alpha_s: float) -> tuple[int, int, int]:
    """
    Integer weights proportional to (1 - a_I - a_S, a_I, a_S) on a common denominator.

    1/3 stays 1/3 and the random weight is exactly 1 - a_I - a_S, so equal blends
    score equal and reach the seeded tie-break.
    """
    a_i = exact(alpha_i).limit_denominator(BLEND_DENOMINATOR_LIMIT)
    a_s = exact(alpha_s).limit_denominator(BLEND_DENOMINATOR_LIMIT)
    weights = (max(Fraction(0), 1 - a_i - a_s), a_i, a_s)
    common = math.lcm(*(w.denominator for w in weights))
    return tuple(int(w * common) for w in weights)


def random_mask(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    _check_count(k, n)
    return _mask_from(rng.choice(n, size=k, replace=False), n)


def region_quotas(labels: np.ndarray, k: int, class_weights: Optional[Sequence[float]] = None) -> dict[int, int]:
    """
    Masked count per present class region.

    Quotas are floor(k * w_c|region_c| / sum_j w_j|region_j|); the remainder goes one
    unit at a time by descending fractional part, ties to the smaller class id,
    skipping regions that are already fully masked.
    """
    labels = np.asarray(labels, dtype=np.int64)
    _check_count(k, labels.size)
    present, sizes = np.unique(labels, return_counts=True)
    if class_weights is None:
        weights = np.ones(present.size)
    else:
        if present.size and present.max() >= len(class_weights):
            raise ContractError(f"class id {present.max()} has no weight among {len(class_weights)}")
        weights = np.asarray(class_weights, dtype=np.float64)[present]
    shares = [float(exact(w) * int(s)) for w, s in zip(weights, sizes)]
    quotas = apportion(k, shares, capacity=sizes)
    return {int(c): int(q) for c, q in zip(present, quotas)}


def semantic_guided_mask(
    labels: np.ndarray, k: int, class_weights: Optional[Sequence[float]], rng: np.random.Generator
) -> np.ndarray:
    """Mask each semantic region in proportion to its weighted area, uniformly inside the region."""
    labels = np.asarray(labels, dtype=np.int64)
    quotas = region_quotas(labels, k, class_weights)
    chosen = [rng.choice(np.flatnonzero(labels == c), size=q, replace=False) for c, q in sorted(quotas.items())]
    positions = np.concatenate(chosen) if chosen else np.zeros(0, dtype=np.int64)
    return _mask_from(positions, labels.size)


def instance_split(object_count: int, background_count: int, k: int, alpha: float) -> tuple[int, int]:
    """(object, background) masked counts; any shortfall spills over to the side with room."""
    _check_count(k, object_count + background_count)
    k_obj = min(math.floor(exact(alpha) * k), object_count)
    k_bg = min(k - k_obj, background_count)
    k_obj += k - k_obj - k_bg
    return k_obj, k_bg


def instance_guided_mask(object_flags: np.ndarray, k: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Mask about ``alpha`` of k inside object patches, the rest in background patches."""
    flags = np.asarray(object_flags, dtype=bool)
    objects = np.flatnonzero(flags)
    background = np.flatnonzero(~flags)
    k_obj, k_bg = instance_split(objects.size, background.size, k, alpha)
    positions = np.concatenate(
        [rng.choice(objects, size=k_obj, replace=False), rng.choice(background, size=k_bg, replace=False)]
    )
    return _mask_from(positions, flags.size)


def compose_progressive_mask(
    random: np.ndarray,
    instance: np.ndarray,
    semantic: np.ndarray,
    alpha_i: float,
    alpha_s: float,
    k: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Blend three k-masks with weights (1 - a_I - a_S, a_I, a_S) and keep the k
    highest-scoring positions, ties broken by rank in a seeded permutation.
    Scores are compared exactly on integer weights from ``blend_weights``.
    """
    masks = [np.asarray(m, dtype=np.int64) for m in (random, instance, semantic)]
    n = masks[0].size
    _check_count(k, n)
    for name, mask in zip(("random", "instance", "semantic"), masks):
        if mask.shape != (n,) or int(mask.sum()) != k:
            raise ContractError(f"{name} mask must have exactly {k} of {n} positions masked, got {int(mask.sum())}")
    if alpha_i < 0 or alpha_s < 0 or alpha_i + alpha_s > 1.0 + 1e-12:
        raise ContractError(f"blend weights ({alpha_i}, {alpha_s}) violate 0 <= alphas, sum <= 1")
    w_r, w_i, w_s = blend_weights(alpha_i, alpha_s)
    score = w_r * masks[0] + w_i * masks[1] + w_s * masks[2]
    rank = np.empty(n, dtype=np.int64)
    rank[rng.permutation(n)] = np.arange(n)
    order = np.lexsort((rank, -score))
    return _mask_from(order[:k], n)
