"""Differentiable building blocks for the transformer: matmul, softmax, layer norm, GELU."""

import math
from typing import Optional

import numpy as np

from numerics.tensor import Function, MatMul, Tensor

LAYER_NORM_EPS = 1e-6
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_K = 0.044715


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes; leading axes must match exactly."""
    return MatMul.apply(a, b)


class SoftmaxLastDim(Function):
    def forward(self, x):
        shifted = x - x.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        self.out = e / e.sum(axis=-1, keepdims=True)
        return self.out

    def backward(self, grad):
        y = self.out
        return (y * (grad - (grad * y).sum(axis=-1, keepdims=True)),)


class LogSoftmaxLastDim(Function):
    def forward(self, x):
        shifted = x - x.max(axis=-1, keepdims=True)
        self.out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
        return self.out

    def backward(self, grad):
        return (grad - np.exp(self.out) * grad.sum(axis=-1, keepdims=True),)


class LayerNorm(Function):
    def forward(self, x, gain, bias, eps=LAYER_NORM_EPS):
        mu = x.mean(axis=-1, keepdims=True)
        var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(var + eps)
        self.xhat = (x - mu) * self.inv_std
        self.gain = gain
        return self.xhat * gain + bias

    def backward(self, grad):
        reduce_axes = tuple(range(grad.ndim - 1))
        d_gain = (grad * self.xhat).sum(axis=reduce_axes)
        d_bias = grad.sum(axis=reduce_axes)
        d_xhat = grad * self.gain
        d_x = self.inv_std * (
            d_xhat
            - d_xhat.mean(axis=-1, keepdims=True)
            - self.xhat * (d_xhat * self.xhat).mean(axis=-1, keepdims=True)
        )
        return d_x, d_gain, d_bias


class Gelu(Function):
    def forward(self, x):
        self.x = x
        self.t = np.tanh(_GELU_C * (x + _GELU_K * x**3))
        return 0.5 * x * (1.0 + self.t)

    def backward(self, grad):
        x, t = self.x, self.t
        d_inner = _GELU_C * (1.0 + 3.0 * _GELU_K * x**2)
        return (grad * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)


def softmax_lastdim(x: Tensor) -> Tensor:
    """Numerically stable softmax over the last axis (max-subtracted)."""
    return SoftmaxLastDim.apply(x)


def log_softmax_lastdim(x: Tensor) -> Tensor:
    return LogSoftmaxLastDim.apply(x)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalize each last-axis slice to zero mean / unit variance, then apply gain and bias."""
    return LayerNorm.apply(x, gain, bias, eps=eps)


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    return Gelu.apply(x)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = matmul(x, weight)
    return out if bias is None else out + bias
