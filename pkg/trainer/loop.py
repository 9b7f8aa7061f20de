"""
Pre-training loop.

Everything random is keyed by the global step: epoch order comes from the
stream ("shuffle", epoch) and mask plans from a root derived from ("step", step).
Resuming from a checkpoint at step s therefore replays exactly the batches and
masks an uninterrupted run would have seen.
"""

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from config.configuration import RunConfig
from masking.plan import MaskPlan, alphas_for, build_mask_plan
from model.network import MultiGranularMAE
from numerics.precision import precision
from numerics.tensor import Tensor
from objective.losses import reconstruction_losses, total_loss
from synthdata.scene import MultiGranularSample
from templates.template import write_run_summary
from tokenizer.patches import patch_targets
from trainer.checkpoint import load_checkpoint, save_checkpoint
from trainer.optim import OptimState, collect_grads, optimizer_step
from trainer.schedule import StepPlan, lr_at
from utils.errors import ContractError, NumericError
from utils.rng import derive_seed, rng_stream

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"
SUMMARY_FILE = "summary.md"


@dataclass
class StepMetrics:
    step: int
    epoch: int
    lr: float
    u: float
    alpha_i: float
    alpha_s: float
    loss_s: float
    loss_i: float
    loss_r: float
    total: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class TrainResult:
    model: MultiGranularMAE
    state: OptimState
    history: list[StepMetrics] = field(default_factory=list)
    checkpoint: Optional[Path] = None
    elapsed: float = 0.0


def epoch_order(seed: int, epoch: int, size: int) -> np.ndarray:
    return rng_stream(seed, "shuffle", epoch).permutation(size)


def step_root(seed: int, step: int) -> int:
    return derive_seed(seed, "step", step)


def _as_float(value) -> float:
    return value.item() if isinstance(value, Tensor) else float(value)


def train_step(
    batch: Sequence[MultiGranularSample],
    model: MultiGranularMAE,
    state: OptimState,
    u: float,
    lr: float,
    cfg: RunConfig,
    rng_root: int,
) -> tuple[float, float, float, float]:
    """
    Mask, forward, and back-propagate one batch, then take one AdamW step.

    Returns the batch means (L_S, L_I, L_R, total).
    """
    if not batch:
        raise ContractError("batch must not be empty")
    train, scene = cfg.train, cfg.scene
    model.params.zero_grad()
    totals, components = [], {"S": 0.0, "I": 0.0, "R": 0.0}
    for sample in batch:
        plan = build_mask_plan(sample, cfg.mask, model.layout, u, rng_root, scene.class_count, train.masking_mode)
        result = model.forward(sample, plan)
        targets = patch_targets(sample, model.cfg.patch_size, scene.k_max)
        losses = reconstruction_losses(
            result.predictions, targets, plan.masks, scene.class_count, scene.k_max, train.loss_on_all_patches
        )
        totals.append(total_loss(losses["S"], losses["I"], losses["R"], train.loss_weights))
        for g in components:
            components[g] += _as_float(losses[g]) / len(batch)

    batch_total = totals[0]
    for value in totals[1:]:
        batch_total = batch_total + value
    batch_total = batch_total * (1.0 / len(batch))
    total_value = _as_float(batch_total)
    if not np.isfinite(total_value):
        logger.error("Non-finite loss at step %d", state.step + 1)
        raise NumericError(f"non-finite total loss at step {state.step + 1}")
    if isinstance(batch_total, Tensor) and batch_total.requires_grad:
        batch_total.backward()
    optimizer_step(model.params, collect_grads(model.params), state, lr, train)
    model.params.zero_grad()
    return components["S"], components["I"], components["R"], total_value


def train_loop(
    dataset: Sequence[MultiGranularSample],
    cfg: RunConfig,
    out_dir: Union[str, Path],
    resume: bool = False,
    stop_at_step: Optional[int] = None,
) -> TrainResult:
    """
    Train on ``dataset`` and write checkpoint, metrics.jsonl and summary.md to ``out_dir``.

    With ``resume``, parameters, optimizer state and step come from the checkpoint
    already in ``out_dir``. ``stop_at_step`` halts early without changing the
    schedule, which is how a run is split for resume checks.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train = cfg.train
    plan = StepPlan.for_run(train, len(dataset))
    last_step = plan.total_steps if stop_at_step is None else min(stop_at_step, plan.total_steps)

    with precision(train.precision.value):
        if resume:
            params, state, manifest = load_checkpoint(out, cfg)
            model = MultiGranularMAE(cfg.model, cfg.scene.image_size, cfg.scene.class_count, cfg.scene.k_max, params)
            logger.info("Resuming from step %d", state.step)
        else:
            model = MultiGranularMAE(
                cfg.model, cfg.scene.image_size, cfg.scene.class_count, cfg.scene.k_max, seed=train.seed
            )
            state = OptimState.zeros_like(model.params)

        metrics_path = out / METRICS_FILE
        mode = "a" if resume else "w"
        history: list[StepMetrics] = []
        started = time.perf_counter()
        with metrics_path.open(mode, encoding="utf-8") as metrics:
            while state.step < last_step:
                step = state.step
                epoch, position = divmod(step, plan.per_epoch)
                order = epoch_order(train.seed, epoch, len(dataset))
                batch_ids = order[position * train.batch_size : (position + 1) * train.batch_size]
                batch = [dataset[int(i)] for i in batch_ids]
                u = plan.fraction(step)
                lr = lr_at(step, train.peak_lr, plan.warmup_steps, plan.total_steps)
                alpha_i, alpha_s = alphas_for(train.masking_mode, u, cfg.mask)
                l_s, l_i, l_r, total = train_step(batch, model, state, u, lr, cfg, step_root(train.seed, step))
                record = StepMetrics(step + 1, epoch, lr, u, alpha_i, alpha_s, l_s, l_i, l_r, total)
                history.append(record)
                metrics.write(record.to_json() + "\n")
                if position == plan.per_epoch - 1 or state.step == last_step:
                    metrics.flush()
                    logger.info(
                        "epoch %d step %d lr %.3e alphas (%.3f, %.3f) total %.5f",
                        epoch,
                        state.step,
                        lr,
                        alpha_i,
                        alpha_s,
                        total,
                    )
        model.params.check_finite()
        checkpoint = save_checkpoint(out, model.params, state, cfg, epoch=state.step // plan.per_epoch)

    elapsed = time.perf_counter() - started
    result = TrainResult(model=model, state=state, history=history, checkpoint=checkpoint, elapsed=elapsed)
    if history:
        _write_summary(out, cfg, plan, result)
    return result


def read_metrics(path: Union[str, Path]) -> list[dict]:
    with Path(path).open(encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]


def _write_summary(out: Path, cfg: RunConfig, plan: StepPlan, result: TrainResult) -> None:
    first, last = result.history[0], result.history[-1]
    write_run_summary(
        out / SUMMARY_FILE,
        checkpoint=str(result.checkpoint),
        steps=result.state.step,
        epochs=cfg.train.epochs,
        per_epoch=plan.per_epoch,
        decoder_mode=cfg.model.decoder_mode.value,
        task_order="".join(cfg.model.task_order),
        cross_attention=cfg.model.cross_attention,
        masking_mode=cfg.train.masking_mode.value,
        rows=[("first", first), ("last", last)],
        breakpoints=cfg.mask.schedule.resolved(),
        effective_config=cfg.effective(),
    )


def plan_for(sample: MultiGranularSample, cfg: RunConfig, model: MultiGranularMAE, u: float, step: int) -> MaskPlan:
    """The mask plan the training loop draws for ``sample`` at ``step``."""
    return build_mask_plan(
        sample, cfg.mask, model.layout, u, step_root(cfg.train.seed, step), cfg.scene.class_count, cfg.train.masking_mode
    )
