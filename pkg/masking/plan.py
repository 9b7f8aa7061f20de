"""Per-sample mask plans: budget split, three guided masks per granularity, progressive blend."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from config.configuration import GRANULARITIES, MaskConfig, MaskingMode
from masking.budget import RatioSample, sample_visible_budget
from masking.generators import (
    compose_progressive_mask,
    instance_guided_mask,
    random_mask,
    region_quotas,
    semantic_guided_mask,
)
from masking.regions import patch_object_flags, patch_semantic_labels
from masking.schedule import schedule_alphas
from synthdata.scene import MultiGranularSample
from tokenizer.layout import TokenLayout
from utils.errors import ContractError, FormatError
from utils.json_utils import dump_json, read_json
from utils.rng import rng_stream

logger = logging.getLogger(__name__)

FIXED_ALPHAS = {
    MaskingMode.RANDOM: (0.0, 0.0),
    MaskingMode.SEMANTIC: (0.0, 1.0),
    MaskingMode.INSTANCE: (1.0, 0.0),
}


@dataclass
class MaskPlan:
    masks: dict[str, np.ndarray]
    ratio: RatioSample
    alphas: tuple[float, float]
    u: float = 0.0
    index: int = 0
    # per-class masked quotas of the semantic-guided component, for inspection
    quotas: dict[str, dict[int, int]] = field(default_factory=dict)

    @property
    def masked_counts(self) -> dict[str, int]:
        return {g: int(np.asarray(self.masks[g]).sum()) for g in GRANULARITIES}

    @property
    def n(self) -> int:
        return int(np.asarray(self.masks[GRANULARITIES[0]]).size)

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "u": self.u,
            "alphas": list(self.alphas),
            "visible_counts": dict(self.ratio.visible_counts),
            "masked_counts": self.masked_counts,
            "masks": {g: [int(b) for b in self.masks[g]] for g in GRANULARITIES},
            "semantic_quotas": {g: {str(c): q for c, q in qs.items()} for g, qs in self.quotas.items()},
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "MaskPlan":
        try:
            masks = {g: np.asarray(payload["masks"][g], dtype=np.uint8) for g in GRANULARITIES}
            ratio = RatioSample(visible_counts={g: int(payload["visible_counts"][g]) for g in GRANULARITIES})
            quotas = {
                g: {int(c): int(q) for c, q in qs.items()} for g, qs in payload.get("semantic_quotas", {}).items()
            }
            plan = cls(
                masks=masks,
                ratio=ratio,
                alphas=(float(payload["alphas"][0]), float(payload["alphas"][1])),
                u=float(payload.get("u", 0.0)),
                index=int(payload.get("index", 0)),
                quotas=quotas,
            )
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed mask plan: {exc}") from exc
        for g in GRANULARITIES:
            if plan.masked_counts[g] != plan.n - ratio.visible_counts[g]:
                raise FormatError(f"mask plan for {g} masks {plan.masked_counts[g]} but declares {ratio.visible_counts[g]} visible")
        return plan

    def save(self, path: Path) -> None:
        dump_json(path, self.to_dict())

    @classmethod
    def load(cls, path: Path) -> "MaskPlan":
        try:
            return cls.from_dict(read_json(path))
        except FormatError as exc:
            if exc.path is None:
                raise FormatError(str(exc), path=str(path)) from exc
            raise


def alphas_for(mode: MaskingMode, u: float, cfg: MaskConfig) -> tuple[float, float]:
    if mode == MaskingMode.PROGRESSIVE:
        return schedule_alphas(u, cfg.schedule)
    return FIXED_ALPHAS[mode]


def build_mask_plan(
    sample: MultiGranularSample,
    cfg: MaskConfig,
    layout: TokenLayout,
    u: float,
    rng_root: int,
    class_count: int,
    mode: MaskingMode = MaskingMode.PROGRESSIVE,
    index: Optional[int] = None,
) -> MaskPlan:
    """
    Draw one sample's mask plan at training fraction u.

    Randomness comes from streams (rng_root, purpose, index, granularity), so the
    plan is a pure function of its arguments.
    """
    if sample.image_size != layout.image_size:
        raise ContractError(f"sample size {sample.image_size} does not match layout {layout.image_size}")
    index = sample.index if index is None else index
    n = layout.n
    budget = cfg.budget(n)
    ratio = sample_visible_budget(rng_stream(rng_root, "budget", index), budget, n, cfg.dirichlet_concentration)
    alpha_i, alpha_s = alphas_for(mode, u, cfg)

    labels = patch_semantic_labels(sample, layout.patch_size, class_count)
    flags = patch_object_flags(sample, layout.patch_size, cfg.object_patch_threshold)
    weights = cfg.class_weights

    masks: dict[str, np.ndarray] = {}
    quotas: dict[str, dict[int, int]] = {}
    for gi, g in enumerate(GRANULARITIES):
        k = ratio.masked_count(g, n)
        m_r = random_mask(n, k, rng_stream(rng_root, "random", index, gi))
        m_i = instance_guided_mask(flags, k, cfg.alpha, rng_stream(rng_root, "instance", index, gi))
        m_s = semantic_guided_mask(labels, k, weights, rng_stream(rng_root, "semantic", index, gi))
        masks[g] = compose_progressive_mask(m_r, m_i, m_s, alpha_i, alpha_s, k, rng_stream(rng_root, "blend", index, gi))
        quotas[g] = region_quotas(labels, k, weights)

    plan = MaskPlan(masks=masks, ratio=ratio, alphas=(alpha_i, alpha_s), u=u, index=index, quotas=quotas)
    logger.debug("mask plan sample=%d u=%.3f alphas=%s masked=%s", index, u, plan.alphas, plan.masked_counts)
    return plan
