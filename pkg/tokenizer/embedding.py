from typing import TYPE_CHECKING, Mapping

import numpy as np

from config.configuration import GRANULARITIES
from numerics.functional import linear
from numerics.tensor import Tensor, concat
from tokenizer.layout import TokenBatch, TokenLayout
from utils.errors import ContractError, DimensionError

if TYPE_CHECKING:
    from masking.plan import MaskPlan


def embed(patches: np.ndarray, weight: Tensor, bias: Tensor, pos: np.ndarray) -> Tensor:
    """Granularity-specific linear projection plus the fixed positional rows (N×D)."""
    if patches.ndim != 2 or patches.shape[1] != weight.shape[0]:
        raise DimensionError(f"patch features {patches.shape} do not match projection {weight.shape}")
    if pos.shape != (patches.shape[0], weight.shape[1]):
        raise DimensionError(f"positional table {pos.shape} does not match output ({patches.shape[0]}, {weight.shape[1]})")
    return linear(Tensor(patches), weight, bias) + Tensor(pos)


def visible_positions(plan: "MaskPlan", layout: TokenLayout) -> np.ndarray:
    """Absolute indices of unmasked tokens, in span order S, I, R."""
    chunks = []
    for g in GRANULARITIES:
        mask = np.asarray(plan.masks[g])
        if mask.shape != (layout.n,):
            raise DimensionError(f"mask for {g} has shape {mask.shape}, expected ({layout.n},)")
        chunks.append(np.flatnonzero(mask == 0) + layout.span(g)[0])
    return np.concatenate(chunks).astype(np.int64)


def gather_visible(embedded: Mapping[str, Tensor], plan: "MaskPlan", layout: TokenLayout) -> TokenBatch:
    """Keep the rows whose mask bit is 0 (visible), concatenated S, I, R."""
    positions = visible_positions(plan, layout)
    sequence = concat([embedded[g] for g in GRANULARITIES], axis=0)
    return TokenBatch(tokens=sequence[positions], source_positions=positions)


def scatter_full(encoded: TokenBatch, mask_token: Tensor, layout: TokenLayout, pos_table: np.ndarray) -> Tensor:
    """
    Rebuild the 3N×D sequence: encoded rows go back to their source positions,
    every other row is the shared mask token plus that position's positional row.
    """
    positions = np.asarray(encoded.source_positions, dtype=np.int64)
    if positions.size and (positions.min() < 0 or positions.max() >= layout.total):
        raise ContractError(f"source positions must lie in [0, {layout.total})")
    if np.unique(positions).size != positions.size:
        raise ContractError("duplicate source positions in encoded batch")
    if pos_table.shape[0] != layout.total:
        raise DimensionError(f"positional table has {pos_table.shape[0]} rows, expected {layout.total}")

    masked = np.setdiff1d(np.arange(layout.total), positions)
    width = mask_token.shape[-1]
    mask_rows = mask_token.reshape(1, width) + Tensor(pos_table[masked])
    stacked = concat([encoded.tokens, mask_rows], axis=0)
    # row p of the output is row inverse[p] of the stacked rows
    inverse = np.argsort(np.concatenate([positions, masked]), kind="stable")
    return stacked[inverse]
