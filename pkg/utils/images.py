"""Small helpers that turn label maps and score matrices into displayable rasters."""

import numpy as np

# fixed palette; label ids past its end wrap around
_PALETTE = np.array(
    [
        (0.36, 0.55, 0.24),
        (0.47, 0.66, 0.94),
        (0.86, 0.22, 0.20),
        (0.20, 0.30, 0.85),
        (0.92, 0.80, 0.18),
        (0.60, 0.35, 0.70),
        (0.95, 0.55, 0.10),
        (0.10, 0.70, 0.70),
        (0.50, 0.50, 0.50),
    ]
)


def colorize(labels: np.ndarray) -> np.ndarray:
    """H×W integer labels -> H×W×3 RGB in [0, 1]; label 0 maps to the first palette entry."""
    return _PALETTE[np.asarray(labels, dtype=np.int64) % len(_PALETTE)]


def to_unit_gray(values: np.ndarray) -> np.ndarray:
    """Min-max scale into [0, 1]; a constant input maps to zeros."""
    values = np.asarray(values, dtype=np.float64)
    low, high = float(values.min()), float(values.max())
    if high <= low:
        return np.zeros_like(values)
    return (values - low) / (high - low)


def to_gray8(values: np.ndarray) -> np.ndarray:
    return np.round(to_unit_gray(values) * 255.0).astype(np.int64)


def upscale(image: np.ndarray, factor: int) -> np.ndarray:
    """Nearest-neighbour enlargement along the first two axes."""
    return np.repeat(np.repeat(image, factor, axis=0), factor, axis=1)


def shade_masked(image: np.ndarray, pixel_mask: np.ndarray, level: float = 0.5) -> np.ndarray:
    """Blend masked pixels of an H×W×3 image toward mid-gray."""
    out = np.array(image, dtype=np.float64, copy=True)
    out[pixel_mask] = level * out[pixel_mask] + (1.0 - level) * 0.5
    return out
