from dotenv import load_dotenv

from .configuration import (
    GRANULARITIES,
    SCHEDULE_PRESETS,
    STUFF_CLASSES,
    DecoderMode,
    LossWeights,
    MaskConfig,
    MaskingMode,
    ModelConfig,
    Precision,
    RunConfig,
    SceneConfig,
    ScheduleConfig,
    TrainConfig,
)
from .loader import build_run_config, load_run_config, load_yaml_config, merge_overrides

load_dotenv()

__all__ = [
    "load_yaml_config",
    "load_run_config",
    "build_run_config",
    "merge_overrides",
    "GRANULARITIES",
    "SCHEDULE_PRESETS",
    "STUFF_CLASSES",
    "DecoderMode",
    "LossWeights",
    "MaskConfig",
    "MaskingMode",
    "ModelConfig",
    "Precision",
    "RunConfig",
    "SceneConfig",
    "ScheduleConfig",
    "TrainConfig",
]
