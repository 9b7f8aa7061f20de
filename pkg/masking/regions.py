import numpy as np

from synthdata.scene import MultiGranularSample
from tokenizer.patches import one_hot, to_patches


def patch_semantic_labels(sample: MultiGranularSample, patch_size: int, class_count: int) -> np.ndarray:
    """Majority class per patch; ties go to the smaller class id."""
    pixels = to_patches(sample.semantic[..., None], patch_size)
    counts = one_hot(pixels, class_count).sum(axis=1)
    return counts.argmax(axis=1).astype(np.int64)


def patch_object_flags(sample: MultiGranularSample, patch_size: int, threshold: float = 0.25) -> np.ndarray:
    """True where at least ``threshold`` of the patch's pixels belong to some instance."""
    pixels = to_patches(sample.instance[..., None], patch_size)
    covered = (pixels > 0).sum(axis=1)
    return covered >= threshold * patch_size * patch_size
