import enum
import json
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from utils.errors import ContractError

STUFF_CLASSES = ("ground", "sky")
GRANULARITIES = ("S", "I", "R")


class DecoderMode(str, enum.Enum):
    CASCADED = "cascaded"
    PARALLEL = "parallel"


class MaskingMode(str, enum.Enum):
    PROGRESSIVE = "progressive"
    RANDOM = "random"
    SEMANTIC = "semantic"
    INSTANCE = "instance"


class Precision(str, enum.Enum):
    FLOAT32 = "float32"
    FLOAT64 = "float64"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SceneConfig(_Section):
    """Procedural scene settings. Class ids: stuff first (ground=0, sky=1), then things."""

    image_size: int = Field(default=64, ge=1)
    shape_count_range: tuple[int, int] = (1, 4)
    thing_classes: list[str] = Field(default_factory=lambda: ["circle", "square", "triangle"])
    min_visible_pixels: int = Field(default=16, ge=1)
    noise_amplitude: float = Field(default=0.05, ge=0.0, le=1.0)
    k_max: int = Field(default=8, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("thing_classes")
    @classmethod
    def _known_shapes(cls, value: list[str]) -> list[str]:
        unknown = sorted(set(value) - {"circle", "square", "triangle"})
        if unknown:
            raise ValueError(f"unknown shape kinds {unknown}")
        if len(set(value)) != len(value):
            raise ValueError("thing classes must be distinct")
        return value

    @model_validator(mode="after")
    def _check_range(self) -> "SceneConfig":
        low, high = self.shape_count_range
        if low < 0 or high < low:
            raise ValueError(f"shape_count_range must satisfy 0 <= min <= max, got {list(self.shape_count_range)}")
        if high > self.k_max:
            raise ValueError(f"shape_count_range max {high} exceeds k_max {self.k_max}")
        return self

    @property
    def class_count(self) -> int:
        return len(STUFF_CLASSES) + len(self.thing_classes)

    def class_id(self, name: str) -> int:
        if name in STUFF_CLASSES:
            return STUFF_CLASSES.index(name)
        return len(STUFF_CLASSES) + self.thing_classes.index(name)


# (training fraction u, alpha_I, alpha_S)
Breakpoint = tuple[float, float, float]

SCHEDULE_PRESETS: dict[str, list[Breakpoint]] = {
    # semantic -> instance -> random
    "SG-IG-RD": [(0.0, 0.0, 1.0), (0.15, 0.0, 1.0), (0.45, 1.0, 0.0), (0.60, 1.0, 0.0), (0.90, 0.0, 0.0), (1.0, 0.0, 0.0)],
    "IG-SG-RD": [(0.0, 1.0, 0.0), (0.15, 1.0, 0.0), (0.45, 0.0, 1.0), (0.60, 0.0, 1.0), (0.90, 0.0, 0.0), (1.0, 0.0, 0.0)],
    "RD-IG-SG": [(0.0, 0.0, 0.0), (0.15, 0.0, 0.0), (0.45, 1.0, 0.0), (0.60, 1.0, 0.0), (0.90, 0.0, 1.0), (1.0, 0.0, 1.0)],
}


class ScheduleConfig(_Section):
    preset: Optional[str] = None
    breakpoints: Optional[list[Breakpoint]] = None

    @field_validator("preset")
    @classmethod
    def _known_preset(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in SCHEDULE_PRESETS:
            raise ValueError(f"unknown schedule preset {value!r}; expected one of {sorted(SCHEDULE_PRESETS)}")
        return value

    @field_validator("breakpoints")
    @classmethod
    def _check_breakpoints(cls, value: Optional[list[Breakpoint]]) -> Optional[list[Breakpoint]]:
        if value is None:
            return value
        if not value:
            raise ValueError("breakpoints must not be empty")
        previous = 0.0
        for u, alpha_i, alpha_s in value:
            if not 0.0 <= u <= 1.0 or u < previous:
                raise ValueError("breakpoint fractions must be nondecreasing within [0, 1]")
            if alpha_i < 0 or alpha_s < 0 or alpha_i + alpha_s > 1.0 + 1e-12:
                raise ValueError(f"breakpoint ({u}, {alpha_i}, {alpha_s}) violates 0 <= alphas, sum <= 1")
            previous = u
        return value

    def resolved(self) -> list[Breakpoint]:
        if self.breakpoints is not None:
            return [tuple(map(float, bp)) for bp in self.breakpoints]
        return list(SCHEDULE_PRESETS[self.preset or "SG-IG-RD"])


class MaskConfig(_Section):
    """Visible budget and guidance settings. ``visible_tokens`` wins over ``visible_fraction``."""

    visible_tokens: Optional[int] = Field(default=None, ge=0)
    # 1/6 of all 3N tokens: 32 at N=64, 98 at N=196
    visible_fraction: float = Field(default=1.0 / 6.0, ge=0.0, le=1.0)
    alpha: float = 0.75
    class_weights: Optional[list[float]] = None
    dirichlet_concentration: float = Field(default=1.0, gt=0.0)
    object_patch_threshold: float = Field(default=0.25, ge=0.0, le=1.0)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)

    @field_validator("alpha")
    @classmethod
    def _alpha_range(cls, value: float) -> float:
        if not 0.5 < value <= 1.0:
            raise ValueError("alpha must lie in (0.5, 1]")
        return value

    @field_validator("class_weights")
    @classmethod
    def _positive_weights(cls, value: Optional[list[float]]) -> Optional[list[float]]:
        if value is not None and any(w < 0 for w in value):
            raise ValueError("class weights must be nonnegative")
        return value

    def budget(self, patches_per_granularity: int) -> int:
        total = 3 * patches_per_granularity
        v = self.visible_tokens if self.visible_tokens is not None else round(self.visible_fraction * total)
        if v > total:
            raise ContractError(f"visible budget {v} exceeds 3N={total}")
        return int(v)


class ModelConfig(_Section):
    # full scale is d_dec=256 with 8 heads
    patch_size: int = Field(default=8, ge=1)
    d_enc: int = Field(default=64, ge=1)
    enc_depth: int = Field(default=4, ge=0)
    enc_heads: int = Field(default=4, ge=1)
    d_dec: int = Field(default=32, ge=1)
    dec_heads: int = Field(default=4, ge=1)
    dec_subblocks_per_stage: int = Field(default=1, ge=1)
    task_order: tuple[str, str, str] = ("S", "I", "R")
    decoder_mode: DecoderMode = DecoderMode.CASCADED
    cross_attention: bool = True
    ffn_ratio: int = Field(default=4, ge=1)
    init_std: float = Field(default=0.02, gt=0.0)

    @field_validator("task_order", mode="before")
    @classmethod
    def _parse_order(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(value.upper())
        return value

    @model_validator(mode="after")
    def _check_widths(self) -> "ModelConfig":
        if sorted(self.task_order) != sorted(GRANULARITIES):
            raise ValueError(f"task_order must be a permutation of S, I, R, got {list(self.task_order)}")
        if self.d_enc % self.enc_heads:
            raise ValueError(f"d_enc {self.d_enc} not divisible by enc_heads {self.enc_heads}")
        if self.d_dec % self.dec_heads:
            raise ValueError(f"d_dec {self.d_dec} not divisible by dec_heads {self.dec_heads}")
        return self


class LossWeights(_Section):
    lambda_s: float = Field(default=1.0, ge=0.0)
    lambda_i: float = Field(default=1.0, ge=0.0)
    lambda_r: float = Field(default=1.0, ge=0.0)

    @model_validator(mode="after")
    def _one_positive(self) -> "LossWeights":
        if max(self.lambda_s, self.lambda_i, self.lambda_r) <= 0.0:
            raise ValueError("at least one loss weight must be positive")
        return self


class TrainConfig(_Section):
    # full scale is warmup_epochs=40, batch 4096
    epochs: int = Field(default=50, ge=1)
    warmup_epochs: int = Field(default=5, ge=0)
    batch_size: int = Field(default=32, ge=1)
    base_lr: float = Field(default=1e-4, ge=0.0)
    betas: tuple[float, float] = (0.9, 0.95)
    eps: float = Field(default=1e-8, gt=0.0)
    weight_decay: float = Field(default=0.05, ge=0.0)
    grad_clip: Optional[float] = Field(default=None, gt=0.0)
    seed: int = Field(default=0, ge=0)
    masking_mode: MaskingMode = MaskingMode.PROGRESSIVE
    loss_weights: LossWeights = Field(default_factory=LossWeights)
    loss_on_all_patches: bool = False
    precision: Precision = Precision.FLOAT32
    max_steps: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_warmup(self) -> "TrainConfig":
        if self.warmup_epochs > self.epochs:
            raise ValueError(f"warmup_epochs {self.warmup_epochs} exceeds epochs {self.epochs}")
        return self

    @property
    def peak_lr(self) -> float:
        return self.base_lr * self.batch_size / 256.0


class RunConfig(_Section):
    """The whole experiment: one section per pipeline stage."""

    scene: SceneConfig = Field(default_factory=SceneConfig)
    mask: MaskConfig = Field(default_factory=MaskConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)

    @model_validator(mode="after")
    def _check_geometry(self) -> "RunConfig":
        if self.scene.image_size % self.model.patch_size:
            raise ValueError(
                f"scene.image_size {self.scene.image_size} not divisible by model.patch_size {self.model.patch_size}"
            )
        weights = self.mask.class_weights
        if weights is not None and len(weights) != self.scene.class_count:
            raise ValueError(f"mask.class_weights has {len(weights)} entries, expected {self.scene.class_count}")
        return self

    @property
    def patches_per_granularity(self) -> int:
        return (self.scene.image_size // self.model.patch_size) ** 2

    def effective(self) -> str:
        """The fully-resolved configuration as stable JSON."""
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)


__all__ = [
    "STUFF_CLASSES",
    "GRANULARITIES",
    "SCHEDULE_PRESETS",
    "DecoderMode",
    "MaskingMode",
    "Precision",
    "SceneConfig",
    "ScheduleConfig",
    "MaskConfig",
    "ModelConfig",
    "LossWeights",
    "TrainConfig",
    "RunConfig",
]
