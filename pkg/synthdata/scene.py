"""
Procedural tri-granular scenes: a sky/ground split with a few flat shapes on top.

A sample is a pure function of (scene seed, index). RGB values are quantized to
multiples of 1/255 at generation time so the 8-bit PPM round trip is exact.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from config.configuration import STUFF_CLASSES, SceneConfig
from utils.errors import ContractError
from utils.rng import derive_seed

logger = logging.getLogger(__name__)

MAX_PLACEMENT_RETRIES = 20

_STUFF_COLORS = {"ground": (0.36, 0.55, 0.24), "sky": (0.47, 0.66, 0.94)}
_THING_COLORS = {"circle": (0.86, 0.22, 0.20), "square": (0.20, 0.30, 0.85), "triangle": (0.92, 0.80, 0.18)}
_COLOR_JITTER = 0.08


@dataclass
class MultiGranularSample:
    """One aligned scene. ``instance`` uses 0 for background, ``semantic`` holds class ids."""

    rgb: np.ndarray
    instance: np.ndarray
    semantic: np.ndarray
    index: int = 0
    seed: int = 0
    shapes: list[dict[str, Any]] = field(default_factory=list)

    @property
    def image_size(self) -> int:
        return int(self.rgb.shape[0])

    def same_pixels(self, other: "MultiGranularSample") -> bool:
        return (
            np.array_equal(self.rgb, other.rgb)
            and np.array_equal(self.instance, other.instance)
            and np.array_equal(self.semantic, other.semantic)
        )


def _shape_mask(kind: str, cx: float, cy: float, r: float, size: int) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size]
    xs = xs + 0.5
    ys = ys + 0.5
    if kind == "circle":
        return (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    if kind == "square":
        return (np.abs(xs - cx) <= r) & (np.abs(ys - cy) <= r)
    if kind == "triangle":
        # upright isosceles: apex above, base below
        top, bottom = cy - r, cy + r
        inside_rows = (ys >= top) & (ys <= bottom)
        half_width = (ys - top) / 2.0
        return inside_rows & (np.abs(xs - cx) <= half_width)
    raise ContractError(f"unknown shape kind {kind!r}")


def _stuff_layer(rng: np.random.Generator, size: int) -> np.ndarray:
    base = size / 2.0 + rng.uniform(-size / 8.0, size / 8.0)
    amplitude = rng.uniform(0.0, size / 16.0)
    frequency = rng.integers(1, 3)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    columns = np.arange(size) + 0.5
    horizon = base + amplitude * np.sin(2.0 * math.pi * frequency * columns / size + phase)
    rows = np.arange(size)[:, None] + 0.5
    sky = rows < horizon[None, :]
    return np.where(sky, STUFF_CLASSES.index("sky"), STUFF_CLASSES.index("ground")).astype(np.uint8)


def _jittered(rng: np.random.Generator, color: tuple[float, float, float]) -> np.ndarray:
    return np.clip(np.asarray(color) + rng.uniform(-_COLOR_JITTER, _COLOR_JITTER, size=3), 0.0, 1.0)


def generate_sample(cfg: SceneConfig, index: int) -> MultiGranularSample:
    """Build scene ``index`` for ``cfg``; independent of every other index."""
    if index < 0:
        raise ContractError(f"sample index must be nonnegative, got {index}")
    seed = derive_seed(cfg.seed, "scene", index)
    rng = np.random.default_rng(seed)
    size = cfg.image_size

    semantic = _stuff_layer(rng, size)
    rgb = np.zeros((size, size, 3))
    for name in STUFF_CLASSES:
        rgb[semantic == STUFF_CLASSES.index(name)] = _jittered(rng, _STUFF_COLORS[name])

    low, high = cfg.shape_count_range
    wanted = int(rng.integers(low, high + 1))
    owner = np.zeros((size, size), dtype=np.int32)  # placement slot + 1, front-most wins
    placed: list[dict[str, Any]] = []

    for _ in range(wanted):
        for attempt in range(MAX_PLACEMENT_RETRIES + 1):
            kind = cfg.thing_classes[int(rng.integers(len(cfg.thing_classes)))]
            r = rng.uniform(size / 10.0, size / 4.0)
            cx, cy = rng.uniform(0.0, size, size=2)
            mask = _shape_mask(kind, cx, cy, r, size)
            if mask.sum() < cfg.min_visible_pixels:
                continue
            trial = np.where(mask, len(placed) + 1, owner)
            if all((trial == slot + 1).sum() >= cfg.min_visible_pixels for slot in range(len(placed))):
                owner = trial
                placed.append(
                    {"kind": kind, "center": [float(cx), float(cy)], "radius": float(r),
                     "color": _jittered(rng, _THING_COLORS[kind])}
                )
                break
        else:
            logger.debug("Scene %d: dropped a shape after %d retries", index, MAX_PLACEMENT_RETRIES)

    instance = np.zeros((size, size), dtype=np.uint16)
    shapes: list[dict[str, Any]] = []
    for slot, shape in enumerate(placed):
        region = owner == slot + 1
        instance_id = len(shapes) + 1
        instance[region] = instance_id
        class_id = cfg.class_id(shape["kind"])
        semantic[region] = class_id
        rgb[region] = shape["color"]
        shapes.append(
            {"id": instance_id, "kind": shape["kind"], "class_id": class_id,
             "center": shape["center"], "radius": shape["radius"], "visible_pixels": int(region.sum())}
        )

    if cfg.noise_amplitude > 0:
        rgb = rgb + cfg.noise_amplitude * rng.uniform(-1.0, 1.0, size=rgb.shape)
    rgb = np.round(np.clip(rgb, 0.0, 1.0) * 255.0) / 255.0

    return MultiGranularSample(rgb=rgb, instance=instance, semantic=semantic, index=index, seed=seed, shapes=shapes)


def check_alignment(sample: MultiGranularSample, class_count: int) -> list[str]:
    """Return human-readable violations of the tri-granular alignment rules (empty when aligned)."""
    problems = []
    stuff_count = len(STUFF_CLASSES)
    if not (sample.rgb.shape[:2] == sample.instance.shape == sample.semantic.shape):
        problems.append("granularity shapes differ")
        return problems
    things = sample.instance > 0
    if np.any(sample.semantic[things] < stuff_count):
        problems.append("instance pixel carries a stuff class")
    if np.any(sample.semantic[~things] >= stuff_count):
        problems.append("background pixel carries a thing class")
    if np.any(sample.semantic >= class_count):
        problems.append("semantic id out of range")
    ids = np.unique(sample.instance[things])
    if ids.size and not np.array_equal(ids, np.arange(1, ids.size + 1)):
        problems.append(f"instance ids not contiguous: {ids.tolist()}")
    return problems
