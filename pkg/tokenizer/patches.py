import numpy as np

from objective.canonical import canonicalize_instances
from synthdata.scene import MultiGranularSample
from utils.errors import ContractError, DimensionError


def to_patches(image: np.ndarray, patch_size: int) -> np.ndarray:
    """H×W×C -> N×(P·P·C), patches row-major, pixels row-major inside a patch, channels fastest."""
    height, width, channels = image.shape
    if height % patch_size or width % patch_size:
        raise DimensionError(f"image {height}x{width} is not divisible by patch size {patch_size}")
    gh, gw = height // patch_size, width // patch_size
    blocks = image.reshape(gh, patch_size, gw, patch_size, channels).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(gh * gw, patch_size * patch_size * channels)


def from_patches(patches: np.ndarray, patch_size: int, image_size: int, channels: int) -> np.ndarray:
    grid = image_size // patch_size
    blocks = patches.reshape(grid, grid, patch_size, patch_size, channels).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(image_size, image_size, channels)


def one_hot(labels: np.ndarray, classes: int) -> np.ndarray:
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise ContractError(f"label ids must lie in [0, {classes}), got range [{labels.min()}, {labels.max()}]")
    return np.eye(classes)[labels.astype(np.int64)]


def patchify(sample: MultiGranularSample, patch_size: int, class_count: int, k_max: int) -> dict[str, np.ndarray]:
    """Per-granularity patch features: S one-hot over C classes, I one-hot over k_max+1 canonical labels, R raw RGB."""
    canonical = canonicalize_instances(sample.instance, k_max)
    return {
        "S": to_patches(one_hot(sample.semantic, class_count), patch_size),
        "I": to_patches(one_hot(canonical, k_max + 1), patch_size),
        "R": to_patches(sample.rgb, patch_size),
    }


def patch_targets(sample: MultiGranularSample, patch_size: int, k_max: int) -> dict[str, np.ndarray]:
    """Per-pixel reconstruction targets grouped by patch: class ids for S/I, RGB values for R."""
    canonical = canonicalize_instances(sample.instance, k_max)
    return {
        "S": to_patches(sample.semantic[..., None], patch_size).astype(np.int64),
        "I": to_patches(canonical[..., None], patch_size).astype(np.int64),
        "R": to_patches(sample.rgb, patch_size),
    }
