from .embedding import embed, gather_visible, scatter_full, visible_positions
from .layout import TokenBatch, TokenLayout
from .patches import from_patches, one_hot, patch_targets, patchify, to_patches
from .position import sequence_table, sincos_2d

__all__ = [
    "TokenLayout",
    "TokenBatch",
    "patchify",
    "patch_targets",
    "to_patches",
    "from_patches",
    "one_hot",
    "embed",
    "gather_visible",
    "scatter_full",
    "visible_positions",
    "sincos_2d",
    "sequence_table",
]
