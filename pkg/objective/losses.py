"""
Reconstruction losses over masked patches.

Cross-entropy for the semantic and instance maps, plain-pixel MSE for RGB; each
is averaged over every pixel (or element) of the masked patches and is 0 when
nothing is masked.
"""

from typing import Mapping, Union

import numpy as np

from config.configuration import GRANULARITIES, LossWeights
from numerics.functional import log_softmax_lastdim
from numerics.tensor import Tensor
from utils.errors import ContractError, DimensionError

Scalar = Union[Tensor, float]


def _selected_rows(mask: np.ndarray, rows: int, all_patches: bool) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.shape != (rows,):
        raise DimensionError(f"mask of shape {mask.shape} does not match {rows} patches")
    return np.arange(rows) if all_patches else np.flatnonzero(mask == 1)


def _cross_entropy(logits: Tensor, target: np.ndarray, mask: np.ndarray, classes: int, all_patches: bool) -> Tensor:
    target = np.asarray(target, dtype=np.int64)
    rows, width = logits.shape
    if target.ndim != 2 or target.shape[0] != rows or target.shape[1] * classes != width:
        raise DimensionError(f"logits {logits.shape} do not match targets {target.shape} over {classes} classes")
    if target.size and (target.min() < 0 or target.max() >= classes):
        raise ContractError(f"target ids must lie in [0, {classes}), got range [{target.min()}, {target.max()}]")
    selected = _selected_rows(mask, rows, all_patches)
    if selected.size == 0:
        return Tensor(0.0)
    pixels = target.shape[1]
    flat = logits[selected].reshape(selected.size * pixels, classes)
    labels = target[selected].reshape(-1)
    log_probs = log_softmax_lastdim(flat)
    return -log_probs[np.arange(labels.size), labels].mean()


def semantic_loss(
    logits: Tensor, target: np.ndarray, mask: np.ndarray, class_count: int, all_patches: bool = False
) -> Tensor:
    """Per-pixel cross-entropy over class_count semantic classes."""
    return _cross_entropy(logits, target, mask, class_count, all_patches)


def instance_loss(logits: Tensor, target: np.ndarray, mask: np.ndarray, k_max: int, all_patches: bool = False) -> Tensor:
    """Per-pixel cross-entropy over the k_max + 1 canonical instance labels."""
    return _cross_entropy(logits, target, mask, k_max + 1, all_patches)


def rgb_loss(pred: Tensor, target: np.ndarray, mask: np.ndarray, all_patches: bool = False) -> Tensor:
    if pred.shape != np.shape(target):
        raise DimensionError(f"prediction {pred.shape} does not match target {np.shape(target)}")
    selected = _selected_rows(mask, pred.shape[0], all_patches)
    if selected.size == 0:
        return Tensor(0.0)
    diff = pred[selected] - Tensor(np.asarray(target)[selected])
    return (diff * diff).mean()


def total_loss(l_s: Scalar, l_i: Scalar, l_r: Scalar, weights: LossWeights) -> Scalar:
    return weights.lambda_s * l_s + weights.lambda_i * l_i + weights.lambda_r * l_r


def reconstruction_losses(
    predictions: Mapping[str, Tensor],
    targets: Mapping[str, np.ndarray],
    masks: Mapping[str, np.ndarray],
    class_count: int,
    k_max: int,
    all_patches: bool = False,
) -> dict[str, Tensor]:
    """All three losses for one sample, keyed by granularity."""
    missing = [g for g in GRANULARITIES if g not in predictions]
    if missing:
        raise ContractError(f"missing predictions for {missing}")
    return {
        "S": semantic_loss(predictions["S"], targets["S"], masks["S"], class_count, all_patches),
        "I": instance_loss(predictions["I"], targets["I"], masks["I"], k_max, all_patches),
        "R": rgb_loss(predictions["R"], targets["R"], masks["R"], all_patches),
    }
