import numpy as np

from utils.errors import DimensionError


def _sincos_1d(dim: int, positions: np.ndarray) -> np.ndarray:
    omega = np.arange(dim // 2, dtype=np.float64) / (dim / 2.0)
    omega = 1.0 / 10000**omega
    angles = np.outer(positions.reshape(-1), omega)
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


def sincos_2d(dim: int, grid: int) -> np.ndarray:
    """Fixed 2-D sine-cosine table of shape (grid*grid, dim), row-major like the patches."""
    if dim % 4:
        raise DimensionError(f"sine-cosine embedding width must be divisible by 4, got {dim}")
    rows, cols = np.meshgrid(np.arange(grid, dtype=np.float64), np.arange(grid, dtype=np.float64), indexing="ij")
    return np.concatenate([_sincos_1d(dim // 2, rows), _sincos_1d(dim // 2, cols)], axis=1)


def sequence_table(dim: int, grid: int) -> np.ndarray:
    """Positional rows for all 3N tokens; granularities at the same spatial index share a row."""
    return np.tile(sincos_2d(dim, grid), (3, 1))
