from .functional import gelu, layer_norm, linear, log_softmax_lastdim, matmul, softmax_lastdim
from .gradcheck import finite_diff_check
from .precision import default_dtype, precision, set_default_dtype
from .tensor import Tensor, concat, is_grad_enabled, no_grad, ones, zeros

__all__ = [
    "Tensor",
    "concat",
    "no_grad",
    "is_grad_enabled",
    "zeros",
    "ones",
    "matmul",
    "softmax_lastdim",
    "log_softmax_lastdim",
    "layer_norm",
    "gelu",
    "linear",
    "finite_diff_check",
    "default_dtype",
    "precision",
    "set_default_dtype",
]
