"""AdamW with decoupled weight decay and optional global-norm gradient clipping."""

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from config.configuration import TrainConfig
from model.params import ModelParams, decays
from utils.errors import ContractError, NumericError

logger = logging.getLogger(__name__)


@dataclass
class OptimState:
    """First/second moment buffers per parameter name, plus the number of updates taken."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "OptimState":
        return cls(
            m={name: np.zeros_like(t.data) for name, t in params.items()},
            v={name: np.zeros_like(t.data) for name, t in params.items()},
        )


def collect_grads(params: ModelParams) -> dict[str, np.ndarray]:
    """Leaf gradients by name; parameters that took no part in the loss get zeros."""
    return {name: t.grad if t.grad is not None else np.zeros_like(t.data) for name, t in params.items()}


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values()))


def clip_by_global_norm(grads: Mapping[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return dict(grads), norm
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}, norm


def optimizer_step(
    params: ModelParams,
    grads: Mapping[str, np.ndarray],
    state: OptimState,
    lr: float,
    cfg: TrainConfig,
    clip: Optional[float] = None,
) -> OptimState:
    """
    One AdamW update in place.

    Decay multiplies the parameter by (1 - lr * weight_decay) before the moment
    step and is skipped for norm gains, biases and the mask token. A non-finite
    gradient aborts the update before anything is written.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            logger.error("Non-finite gradient for parameter %s", name)
            raise NumericError(f"non-finite gradient for parameter {name}")
    if clip is None:
        clip = cfg.grad_clip
    if clip is not None:
        grads, norm = clip_by_global_norm(grads, clip)
        logger.debug("Gradient global norm %.4g (clip %.4g)", norm, clip)

    beta1, beta2 = cfg.betas
    state.step += 1
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for name, tensor in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != tensor.shape or state.m[name].shape != tensor.shape:
            raise ContractError(f"gradient/buffer shape mismatch for {name}: {g.shape} vs {tensor.shape}")
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * g * g
        state.m[name], state.v[name] = m.astype(tensor.data.dtype), v.astype(tensor.data.dtype)
        data = tensor.data
        if decays(name):
            data = data * (1.0 - lr * cfg.weight_decay)
        update = (m / correction1) / (np.sqrt(v / correction2) + cfg.eps)
        tensor.data = (data - lr * update).astype(tensor.data.dtype)
    return state
