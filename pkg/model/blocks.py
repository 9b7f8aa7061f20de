"""Pre-norm transformer sublayers shared by the encoder and the decoder stages."""

import math
from typing import Optional

import numpy as np

from model.params import ModelParams
from numerics.functional import gelu, layer_norm, linear, matmul, softmax_lastdim
from numerics.tensor import Tensor

AttentionRecord = Optional[dict[str, np.ndarray]]


def norm(x: Tensor, params: ModelParams, prefix: str) -> Tensor:
    return layer_norm(x, params[f"{prefix}.gain"], params[f"{prefix}.bias"])


def _project(x: Tensor, params: ModelParams, prefix: str) -> Tensor:
    bias = params[f"{prefix}.bias"] if f"{prefix}.bias" in params else None
    return linear(x, params[f"{prefix}.weight"], bias)


def _split_heads(x: Tensor, heads: int) -> Tensor:
    rows, width = x.shape
    return x.reshape(rows, heads, width // heads).transpose(1, 0, 2)


def attention(
    queries: Tensor,
    keys_values: Tensor,
    params: ModelParams,
    prefix: str,
    heads: int,
    record: AttentionRecord = None,
) -> Tensor:
    """
    Multi-head scaled dot-product attention (Lq×D over Lk×D -> Lq×D).

    When ``record`` is given, the post-softmax weights (heads×Lq×Lk) are stored under ``prefix``.
    """
    rows, width = queries.shape
    head_width = width // heads
    q = _split_heads(_project(queries, params, f"{prefix}.q"), heads)
    k = _split_heads(_project(keys_values, params, f"{prefix}.k"), heads)
    v = _split_heads(_project(keys_values, params, f"{prefix}.v"), heads)
    scores = matmul(q, k.transpose(0, 2, 1)) * (1.0 / math.sqrt(head_width))
    weights = softmax_lastdim(scores)
    if record is not None:
        record[prefix] = weights.data.copy()
    mixed = matmul(weights, v).transpose(1, 0, 2).reshape(rows, width)
    return _project(mixed, params, f"{prefix}.o")


def feed_forward(x: Tensor, params: ModelParams, prefix: str) -> Tensor:
    return _project(gelu(_project(x, params, f"{prefix}.fc1")), params, f"{prefix}.fc2")


def encoder_block(x: Tensor, params: ModelParams, prefix: str, heads: int, record: AttentionRecord = None) -> Tensor:
    normed = norm(x, params, f"{prefix}.norm1")
    x = x + attention(normed, normed, params, f"{prefix}.attn", heads, record)
    return x + feed_forward(norm(x, params, f"{prefix}.norm2"), params, f"{prefix}.ffn")
