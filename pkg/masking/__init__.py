from .apportion import apportion
from .budget import RatioSample, budget_for_ratio, sample_visible_budget
from .generators import (
    blend_weights,
    compose_progressive_mask,
    instance_guided_mask,
    instance_split,
    random_mask,
    region_quotas,
    semantic_guided_mask,
)
from .plan import FIXED_ALPHAS, MaskPlan, alphas_for, build_mask_plan
from .regions import patch_object_flags, patch_semantic_labels
from .schedule import schedule_alphas

__all__ = [
    "apportion",
    "RatioSample",
    "budget_for_ratio",
    "sample_visible_budget",
    "blend_weights",
    "compose_progressive_mask",
    "instance_guided_mask",
    "instance_split",
    "random_mask",
    "region_quotas",
    "semantic_guided_mask",
    "FIXED_ALPHAS",
    "MaskPlan",
    "alphas_for",
    "build_mask_plan",
    "patch_object_flags",
    "patch_semantic_labels",
    "schedule_alphas",
]
