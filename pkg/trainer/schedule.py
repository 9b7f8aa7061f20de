import math
from dataclasses import dataclass

from config.configuration import TrainConfig
from utils.errors import ContractError


def steps_per_epoch(dataset_size: int, batch_size: int) -> int:
    if dataset_size < 1:
        raise ContractError("dataset is empty")
    return math.ceil(dataset_size / batch_size)


@dataclass(frozen=True)
class StepPlan:
    """Step counts for one run; ``total_steps`` drives both the lr schedule and u."""

    per_epoch: int
    warmup_steps: int
    total_steps: int

    @classmethod
    def for_run(cls, cfg: TrainConfig, dataset_size: int) -> "StepPlan":
        per_epoch = steps_per_epoch(dataset_size, cfg.batch_size)
        total = cfg.epochs * per_epoch
        warmup = cfg.warmup_epochs * per_epoch
        if cfg.max_steps is not None and cfg.max_steps < total:
            # keep the warmup share when the run is truncated
            warmup = (warmup * cfg.max_steps) // total
            total = cfg.max_steps
        return cls(per_epoch=per_epoch, warmup_steps=warmup, total_steps=total)

    def fraction(self, completed_steps: int) -> float:
        return min(completed_steps / self.total_steps, 1.0)


def lr_at(step: int, peak_lr: float, warmup_steps: int, total_steps: int) -> float:
    """Linear warmup 0 -> peak over ``warmup_steps``, then cosine decay to 0 at ``total_steps``."""
    if step < 0:
        raise ContractError(f"step must be nonnegative, got {step}")
    if step < warmup_steps:
        return peak_lr * step / warmup_steps
    if step >= total_steps:
        return 0.0
    progress = (step - warmup_steps) / (total_steps - warmup_steps)
    return 0.5 * peak_lr * (1.0 + math.cos(math.pi * progress))
