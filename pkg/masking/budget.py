import logging
from dataclasses import dataclass

import numpy as np

from config.configuration import GRANULARITIES
from masking.apportion import apportion
from utils.errors import ContractError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RatioSample:
    """Visible tokens per granularity; they always sum to the total budget V."""

    visible_counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.visible_counts.values())

    def masked_count(self, granularity: str, n: int) -> int:
        return n - self.visible_counts[granularity]


def sample_visible_budget(rng: np.random.Generator, V: int, N: int, concentration: float = 1.0) -> RatioSample:
    """
    Split the visible budget V across S, I, R with a symmetric Dirichlet draw.

    Targets V*lambda_m are integerized by largest remainder; counts above N are
    clamped and their overflow re-apportioned among the unclamped granularities.
    """
    if not 0 <= V <= 3 * N:
        raise ContractError(f"visible budget must satisfy 0 <= V <= 3N, got V={V}, N={N}")
    lam = rng.dirichlet(np.full(len(GRANULARITIES), concentration))
    counts = apportion(V, lam)
    while np.any(counts > N):
        over = counts > N
        overflow = int((counts[over] - N).sum())
        counts[over] = N
        free = counts < N
        counts = counts + apportion(overflow, lam * free, capacity=np.where(free, N - counts, 0))
    return RatioSample(visible_counts={g: int(c) for g, c in zip(GRANULARITIES, counts)})


def budget_for_ratio(mask_ratio: float, N: int) -> int:
    """Visible tokens for an overall mask ratio over 3N tokens (0.833 -> 98 at N=196)."""
    return int(round((1.0 - mask_ratio) * 3 * N))
