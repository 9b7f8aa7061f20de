"""
Acceptance diagnostics: the whole-model gradient check on a miniature
configuration in 64-bit precision, and masked-patch reconstruction quality
for the overfit run.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from config.configuration import MaskConfig, ModelConfig, RunConfig, SceneConfig, TrainConfig
from masking.plan import build_mask_plan
from model.network import MultiGranularMAE
from numerics.gradcheck import finite_diff_check
from numerics.precision import precision
from numerics.tensor import no_grad
from objective.losses import reconstruction_losses, total_loss
from synthdata.scene import MultiGranularSample, generate_sample
from tokenizer.patches import patch_targets
from utils.errors import ContractError
from utils.rng import derive_seed, rng_stream

logger = logging.getLogger(__name__)

GRAD_CHECK_TOLERANCE = 1e-4
# fourth-order central stencil: truncation ~h^4, round-off ~eps/h
GRAD_CHECK_STEP = 1e-3
GRAD_CHECK_POINTS = 4


def grad_check_config(**model_overrides) -> RunConfig:
    """D_enc = D_dec = 8, one encoder block, an 8-pixel image cut into N = 4 patches."""
    model = {
        "patch_size": 4,
        "d_enc": 8,
        "enc_depth": 1,
        "enc_heads": 2,
        "d_dec": 8,
        "dec_heads": 2,
        "ffn_ratio": 2,
        # well above the training init
        "init_std": 0.3,
    }
    model.update(model_overrides)
    return RunConfig(
        scene=SceneConfig(image_size=8, shape_count_range=(1, 2), min_visible_pixels=2, k_max=2),
        # 3 of 12 tokens visible: every granularity keeps at least one masked patch
        mask=MaskConfig(visible_tokens=3),
        model=ModelConfig(**model),
        train=TrainConfig(precision="float64"),
    )


def model_grad_check(
    seed: int,
    cfg: Optional[RunConfig] = None,
    max_coords_per_param: Optional[int] = None,
) -> float:
    """
    Max relative error between backward() and central differences of the total
    loss with all three reconstruction terms active. Every coordinate is checked
    unless ``max_coords_per_param`` caps the count per tensor.
    """
    cfg = cfg or grad_check_config()
    scene = cfg.scene.model_copy(update={"seed": seed})
    with precision("float64"):
        model = MultiGranularMAE(cfg.model, scene.image_size, scene.class_count, scene.k_max, seed=seed)
        sample = generate_sample(scene, 0)
        u = float(rng_stream(seed, "gradcheck", 0).uniform())
        plan = build_mask_plan(sample, cfg.mask, model.layout, u, derive_seed(seed, "gradcheck"), scene.class_count)
        targets = patch_targets(sample, cfg.model.patch_size, scene.k_max)

        def objective(_params):
            result = model.forward(sample, plan)
            losses = reconstruction_losses(result.predictions, targets, plan.masks, scene.class_count, scene.k_max)
            return total_loss(losses["S"], losses["I"], losses["R"], cfg.train.loss_weights)

        error = finite_diff_check(
            objective,
            model.params.tensors(),
            h=GRAD_CHECK_STEP,
            points=GRAD_CHECK_POINTS,
            max_coords_per_param=max_coords_per_param,
            seed=seed,
            names=model.params.names(),
        )
    logger.info("Gradient check seed %d: max relative error %.3e", seed, error)
    return error


# overfit acceptance run: default scene, mask and model, all samples in every batch
OVERFIT_SAMPLES = 8
OVERFIT_STEPS = 500


def overfit_config(**model_overrides) -> RunConfig:
    """
    Defaults everywhere except the optimizer budget: one full-dataset batch per step,
    OVERFIT_STEPS steps, 5% warmup and a peak lr of 1e-3 (base_lr 0.032 at batch 8).
    """
    return RunConfig(
        model=ModelConfig(**model_overrides),
        train=TrainConfig(
            epochs=OVERFIT_STEPS,
            warmup_epochs=OVERFIT_STEPS // 20,
            batch_size=OVERFIT_SAMPLES,
            base_lr=0.032,
        ),
    )


@dataclass
class ReconstructionQuality:
    rgb_mse: float
    semantic_accuracy: float
    rgb_patches: int
    semantic_patches: int


def masked_reconstruction_quality(
    model: MultiGranularMAE,
    samples: Sequence[MultiGranularSample],
    cfg: RunConfig,
    u: float = 1.0,
    seed: int = 0,
) -> ReconstructionQuality:
    """
    RGB mean squared error and per-pixel semantic argmax accuracy on masked patches,
    pooled over ``samples`` with fresh mask plans drawn at training fraction ``u``.
    """
    scene = cfg.scene
    pixels = model.cfg.patch_size**2
    squared, rgb_values, rgb_patches = 0.0, 0, 0
    correct, semantic_pixels, semantic_patches = 0, 0, 0
    with precision(cfg.train.precision.value), no_grad():
        for i, sample in enumerate(samples):
            plan = build_mask_plan(
                sample,
                cfg.mask,
                model.layout,
                u,
                derive_seed(seed, "quality", i),
                scene.class_count,
                cfg.train.masking_mode,
            )
            result = model.forward(sample, plan)
            targets = patch_targets(sample, model.cfg.patch_size, scene.k_max)

            rows = plan.masks["R"] == 1
            diff = result.predictions["R"].data[rows].astype(np.float64) - targets["R"][rows]
            squared += float((diff**2).sum())
            rgb_values += diff.size
            rgb_patches += int(rows.sum())

            rows = plan.masks["S"] == 1
            logits = result.predictions["S"].data[rows].reshape(-1, pixels, scene.class_count)
            correct += int((logits.argmax(axis=-1) == targets["S"][rows]).sum())
            semantic_pixels += int(rows.sum()) * pixels
            semantic_patches += int(rows.sum())
    if not rgb_values or not semantic_pixels:
        raise ContractError("no masked RGB or semantic patches to score")
    quality = ReconstructionQuality(
        rgb_mse=squared / rgb_values,
        semantic_accuracy=correct / semantic_pixels,
        rgb_patches=rgb_patches,
        semantic_patches=semantic_patches,
    )
    logger.info("Masked reconstruction: rgb mse %.4f, semantic accuracy %.3f", quality.rgb_mse, quality.semantic_accuracy)
    return quality
