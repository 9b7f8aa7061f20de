"""
Shared encoder over visible tokens and the three-stage task decoder.

In cascaded mode the stages run in ``task_order``; each stage's output is added
onto the keys/values of the next stage at the previous task's span. Parallel
mode runs every stage against the unfused sequence.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from config.configuration import GRANULARITIES, DecoderMode, ModelConfig
from masking.plan import MaskPlan
from model.blocks import AttentionRecord, attention, encoder_block, feed_forward, norm
from model.params import ModelParams, init_params, input_widths
from numerics.functional import linear
from numerics.tensor import Tensor, concat
from synthdata.scene import MultiGranularSample
from tokenizer.embedding import embed, gather_visible, scatter_full, visible_positions
from tokenizer.layout import TokenBatch, TokenLayout
from tokenizer.patches import patchify
from tokenizer.position import sequence_table
from utils.errors import ContractError, DimensionError

logger = logging.getLogger(__name__)


@lru_cache(maxsize=16)
def _position_table(dim: int, grid: int) -> np.ndarray:
    table = sequence_table(dim, grid)
    table.setflags(write=False)
    return table


def fuse_kv(H: Tensor, F_prev: Optional[Tensor], prev_span: tuple[int, int]) -> Tensor:
    """H with rows [i, j) incremented by F_prev; every other row is passed through untouched."""
    i, j = prev_span
    total = H.shape[0]
    if not 0 <= i <= j <= total:
        raise ContractError(f"span [{i}, {j}) out of bounds for {total} rows")
    if F_prev is None:
        return H
    if F_prev.shape != (j - i, H.shape[1]):
        raise ContractError(f"previous stage output {F_prev.shape} does not fit span [{i}, {j}) of width {H.shape[1]}")
    return concat([H[:i], H[i:j] + F_prev, H[j:]], axis=0)


@dataclass
class ForwardResult:
    predictions: dict[str, Tensor]
    stage_outputs: dict[str, Tensor]
    attention: dict[str, np.ndarray] = field(default_factory=dict)
    visible: Optional[np.ndarray] = None


class MultiGranularMAE:
    """Geometry plus parameters; every method is a pure function of its inputs and ``params``."""

    def __init__(
        self,
        cfg: ModelConfig,
        image_size: int,
        class_count: int,
        k_max: int,
        params: Optional[ModelParams] = None,
        seed: int = 0,
    ):
        self.cfg = cfg
        self.layout = TokenLayout(image_size, cfg.patch_size)
        self.class_count = class_count
        self.k_max = k_max
        self.params = params if params is not None else init_params(cfg, class_count, k_max, seed)
        self._check_widths()

    def _check_widths(self) -> None:
        widths = input_widths(self.cfg.patch_size, self.class_count, self.k_max)
        for g in GRANULARITIES:
            if self.params[f"predictor.{g}.weight"].shape[1] != widths[g]:
                raise DimensionError(f"predictor {g} emits {self.params[f'predictor.{g}.weight'].shape[1]}, expected {widths[g]}")

    @property
    def enc_positions(self) -> np.ndarray:
        return _position_table(self.cfg.d_enc, self.layout.grid)

    @property
    def dec_positions(self) -> np.ndarray:
        return _position_table(self.cfg.d_dec, self.layout.grid)

    def embed_visible(self, sample: MultiGranularSample, plan: MaskPlan) -> TokenBatch:
        patches = patchify(sample, self.cfg.patch_size, self.class_count, self.k_max)
        pos = self.enc_positions
        embedded = {}
        for g in GRANULARITIES:
            i, j = self.layout.span(g)
            embedded[g] = embed(patches[g], self.params[f"embed.{g}.weight"], self.params[f"embed.{g}.bias"], pos[i:j])
        return gather_visible(embedded, plan, self.layout)

    def encode(self, visible: TokenBatch, record: AttentionRecord = None) -> Tensor:
        tokens = visible.tokens if isinstance(visible, TokenBatch) else visible
        if tokens.shape[0] < 1:
            raise ContractError("encoder needs at least one visible token")
        x = tokens
        for layer in range(self.cfg.enc_depth):
            x = encoder_block(x, self.params, f"encoder.{layer}", self.cfg.enc_heads, record)
        return x

    def assemble_full_sequence(self, H_enc: Tensor, plan: MaskPlan) -> Tensor:
        """Project encoder rows to decoder width and put them back among the mask tokens (3N×D_dec)."""
        positions = visible_positions(plan, self.layout)
        if H_enc.shape[0] != positions.size:
            raise ContractError(f"{H_enc.shape[0]} encoded rows for {positions.size} visible positions")
        pos = self.dec_positions
        projected = linear(H_enc, self.params["decoder.embed.weight"], self.params["decoder.embed.bias"])
        projected = projected + Tensor(pos[positions])
        return scatter_full(TokenBatch(projected, positions), self.params["mask_token"], self.layout, pos)

    def decode_stage(
        self,
        k: int,
        H: Tensor,
        F_prev: Optional[Tensor],
        record: AttentionRecord = None,
    ) -> Tensor:
        """
        Stage k (1-based) of ``task_order``: queries are H's rows at the task's span,
        keys/values are H with the previous stage's output fused at its span.
        """
        if not 1 <= k <= len(self.cfg.task_order):
            raise ContractError(f"stage index {k} out of range 1..{len(self.cfg.task_order)}")
        task = self.cfg.task_order[k - 1]
        i, j = self.layout.span(task)
        prev_span = self.layout.span(self.cfg.task_order[k - 2]) if k > 1 else (i, j)
        kv = fuse_kv(H, F_prev, prev_span)
        q = H[i:j]
        heads = self.cfg.dec_heads
        for block in range(self.cfg.dec_subblocks_per_stage):
            prefix = f"decoder.{task}.{block}"
            normed = norm(q, self.params, f"{prefix}.norm1")
            context = norm(kv, self.params, f"{prefix}.norm_kv")
            if self.cfg.cross_attention:
                q = q + attention(normed, normed, self.params, f"{prefix}.self_attn", heads, record)
                normed = norm(q, self.params, f"{prefix}.norm2")
                q = q + attention(normed, context, self.params, f"{prefix}.cross_attn", heads, record)
            else:
                # one self-attention over [queries; fused sequence] replaces the self + cross pair
                joint = concat([normed, context], axis=0)
                q = q + attention(normed, joint, self.params, f"{prefix}.self_attn", heads, record)
            q = q + feed_forward(norm(q, self.params, f"{prefix}.norm3"), self.params, f"{prefix}.ffn")
        return norm(q, self.params, f"decoder.{task}.norm")

    def forward(self, sample: MultiGranularSample, plan: MaskPlan, record_attention: bool = False) -> ForwardResult:
        if sample.image_size != self.layout.image_size:
            raise DimensionError(f"sample size {sample.image_size} does not match model image size {self.layout.image_size}")
        record: AttentionRecord = {} if record_attention else None
        visible = self.embed_visible(sample, plan)
        H_enc = self.encode(visible, record)
        H = self.assemble_full_sequence(H_enc, plan)

        stage_outputs: dict[str, Tensor] = {}
        F_prev: Optional[Tensor] = None
        for k, task in enumerate(self.cfg.task_order, start=1):
            if self.cfg.decoder_mode == DecoderMode.PARALLEL:
                stage_outputs[task] = self.decode_stage(k, H, None, record)
            else:
                F_prev = self.decode_stage(k, H, F_prev, record)
                stage_outputs[task] = F_prev

        predictions = {
            g: linear(stage_outputs[g], self.params[f"predictor.{g}.weight"], self.params[f"predictor.{g}.bias"])
            for g in GRANULARITIES
        }
        return ForwardResult(
            predictions=predictions,
            stage_outputs=stage_outputs,
            attention=record or {},
            visible=visible.source_positions,
        )

    def attention_maps(self, sample: MultiGranularSample, plan: MaskPlan, layer: int, head: int) -> np.ndarray:
        """Post-softmax weights of one encoder head over the visible tokens (N_vis×N_vis)."""
        if not 0 <= layer < self.cfg.enc_depth:
            raise ContractError(f"encoder layer {layer} out of range 0..{self.cfg.enc_depth - 1}")
        if not 0 <= head < self.cfg.enc_heads:
            raise ContractError(f"head {head} out of range 0..{self.cfg.enc_heads - 1}")
        record: dict[str, np.ndarray] = {}
        self.encode(self.embed_visible(sample, plan), record)
        return record[f"encoder.{layer}.attn"][head]
