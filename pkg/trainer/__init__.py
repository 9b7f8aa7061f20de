from .checkpoint import CheckpointManifest, load_checkpoint, read_manifest, save_checkpoint
from .loop import StepMetrics, TrainResult, epoch_order, plan_for, read_metrics, step_root, train_loop, train_step
from .optim import OptimState, clip_by_global_norm, collect_grads, global_norm, optimizer_step
from .schedule import StepPlan, lr_at, steps_per_epoch

__all__ = [
    "CheckpointManifest",
    "load_checkpoint",
    "read_manifest",
    "save_checkpoint",
    "StepMetrics",
    "TrainResult",
    "epoch_order",
    "plan_for",
    "read_metrics",
    "step_root",
    "train_loop",
    "train_step",
    "OptimState",
    "clip_by_global_norm",
    "collect_grads",
    "global_norm",
    "optimizer_step",
    "StepPlan",
    "lr_at",
    "steps_per_epoch",
]
