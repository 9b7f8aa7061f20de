import logging
from collections import OrderedDict
from typing import Iterator

import numpy as np

from config.configuration import GRANULARITIES, ModelConfig
from numerics.tensor import Tensor
from utils.errors import ContractError, NumericError
from utils.rng import rng_stream

logger = logging.getLogger(__name__)

_NO_DECAY_SUFFIXES = (".bias", ".gain")
_NO_DECAY_NAMES = ("mask_token",)


def input_widths(patch_size: int, class_count: int, k_max: int) -> dict[str, int]:
    """Per-patch feature width of each granularity (also the predictor output width)."""
    pixels = patch_size * patch_size
    return {"S": pixels * class_count, "I": pixels * (k_max + 1), "R": pixels * 3}


class ModelParams:
    """Named trainable tensors in a fixed, deterministic order."""

    def __init__(self, tensors: "OrderedDict[str, Tensor]"):
        self._tensors = OrderedDict(tensors)

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._tensors[name]
        except KeyError:
            raise ContractError(f"unknown parameter {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self):
        return self._tensors.items()

    def tensors(self) -> list[Tensor]:
        return list(self._tensors.values())

    @property
    def element_count(self) -> int:
        return sum(t.data.size for t in self._tensors.values())

    def zero_grad(self) -> None:
        for tensor in self._tensors.values():
            tensor.zero_grad()

    def check_finite(self) -> None:
        for name, tensor in self._tensors.items():
            if not np.all(np.isfinite(tensor.data)):
                raise NumericError(f"parameter {name} has non-finite elements")

    def clone(self) -> "ModelParams":
        return ModelParams(
            OrderedDict((n, Tensor(t.data.copy(), requires_grad=True)) for n, t in self._tensors.items())
        )


def decays(name: str) -> bool:
    """Weight decay applies to projection matrices only."""
    return not (name.endswith(_NO_DECAY_SUFFIXES) or name in _NO_DECAY_NAMES)


def _attention_shapes(prefix: str, width: int) -> list[tuple[str, tuple[int, ...]]]:
    shapes = []
    for proj in ("q", "k", "v", "o"):
        shapes.append((f"{prefix}.{proj}.weight", (width, width)))
        # a key bias only shifts every score of a query by the same amount; softmax ignores it
        if proj != "k":
            shapes.append((f"{prefix}.{proj}.bias", (width,)))
    return shapes


def _norm_shapes(prefix: str, width: int) -> list[tuple[str, tuple[int, ...]]]:
    return [(f"{prefix}.gain", (width,)), (f"{prefix}.bias", (width,))]


def _ffn_shapes(prefix: str, width: int, ratio: int) -> list[tuple[str, tuple[int, ...]]]:
    hidden = width * ratio
    return [
        (f"{prefix}.fc1.weight", (width, hidden)),
        (f"{prefix}.fc1.bias", (hidden,)),
        (f"{prefix}.fc2.weight", (hidden, width)),
        (f"{prefix}.fc2.bias", (width,)),
    ]


def parameter_shapes(cfg: ModelConfig, class_count: int, k_max: int) -> list[tuple[str, tuple[int, ...]]]:
    """Every parameter name with its shape, in manifest order."""
    widths = input_widths(cfg.patch_size, class_count, k_max)
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for g in GRANULARITIES:
        shapes += [(f"embed.{g}.weight", (widths[g], cfg.d_enc)), (f"embed.{g}.bias", (cfg.d_enc,))]
    for layer in range(cfg.enc_depth):
        prefix = f"encoder.{layer}"
        shapes += _norm_shapes(f"{prefix}.norm1", cfg.d_enc)
        shapes += _attention_shapes(f"{prefix}.attn", cfg.d_enc)
        shapes += _norm_shapes(f"{prefix}.norm2", cfg.d_enc)
        shapes += _ffn_shapes(f"{prefix}.ffn", cfg.d_enc, cfg.ffn_ratio)
    shapes += [("decoder.embed.weight", (cfg.d_enc, cfg.d_dec)), ("decoder.embed.bias", (cfg.d_dec,))]
    shapes.append(("mask_token", (cfg.d_dec,)))
    # stage parameters are keyed by task, not by stage index, so reordering tasks keeps them
    for g in GRANULARITIES:
        for block in range(cfg.dec_subblocks_per_stage):
            prefix = f"decoder.{g}.{block}"
            shapes += _norm_shapes(f"{prefix}.norm1", cfg.d_dec)
            shapes += _attention_shapes(f"{prefix}.self_attn", cfg.d_dec)
            shapes += _norm_shapes(f"{prefix}.norm_kv", cfg.d_dec)
            if cfg.cross_attention:
                shapes += _norm_shapes(f"{prefix}.norm2", cfg.d_dec)
                shapes += _attention_shapes(f"{prefix}.cross_attn", cfg.d_dec)
            shapes += _norm_shapes(f"{prefix}.norm3", cfg.d_dec)
            shapes += _ffn_shapes(f"{prefix}.ffn", cfg.d_dec, cfg.ffn_ratio)
        shapes += _norm_shapes(f"decoder.{g}.norm", cfg.d_dec)
    for g in GRANULARITIES:
        shapes += [(f"predictor.{g}.weight", (cfg.d_dec, widths[g])), (f"predictor.{g}.bias", (widths[g],))]
    return shapes


def init_params(cfg: ModelConfig, class_count: int, k_max: int, seed: int = 0) -> ModelParams:
    """Normal(0, init_std) matrices and mask token, unit gains, zero biases."""
    rng = rng_stream(seed, "init")
    tensors: "OrderedDict[str, Tensor]" = OrderedDict()
    for name, shape in parameter_shapes(cfg, class_count, k_max):
        if name.endswith(".gain"):
            data = np.ones(shape)
        elif name.endswith(".bias"):
            data = np.zeros(shape)
        else:
            data = rng.normal(0.0, cfg.init_std, size=shape)
        tensors[name] = Tensor(data, requires_grad=True)
    params = ModelParams(tensors)
    logger.debug("Initialized %d parameter tensors (%d elements)", len(params), params.element_count)
    return params
