from dataclasses import dataclass, field

import numpy as np

from config.configuration import GRANULARITIES
from numerics.tensor import Tensor
from utils.errors import DimensionError


@dataclass(frozen=True)
class TokenLayout:
    """Geometry of the 3N-token sequence: spans S=[0,N), I=[N,2N), R=[2N,3N)."""

    image_size: int
    patch_size: int
    n: int = field(init=False)

    def __post_init__(self):
        if self.patch_size <= 0 or self.image_size % self.patch_size:
            raise DimensionError(f"image size {self.image_size} is not divisible by patch size {self.patch_size}")
        object.__setattr__(self, "n", (self.image_size // self.patch_size) ** 2)

    @property
    def grid(self) -> int:
        return self.image_size // self.patch_size

    @property
    def total(self) -> int:
        return 3 * self.n

    @property
    def spans(self) -> dict[str, tuple[int, int]]:
        return {g: (k * self.n, (k + 1) * self.n) for k, g in enumerate(GRANULARITIES)}

    def span(self, granularity: str) -> tuple[int, int]:
        return self.spans[granularity]

    def patch_origin(self, p: int) -> tuple[int, int]:
        """Top-left pixel (row, col) of row-major patch ``p``."""
        return (p // self.grid) * self.patch_size, (p % self.grid) * self.patch_size


@dataclass
class TokenBatch:
    """Visible tokens in original sequence order together with their absolute positions."""

    tokens: Tensor
    source_positions: np.ndarray

    def __len__(self) -> int:
        return int(self.source_positions.size)
