"""Attention and reconstruction exports: JSON arrays plus PPM/PGM renderings."""

import logging
from pathlib import Path
from typing import Any, Union

import numpy as np

from config.configuration import GRANULARITIES
from masking.plan import MaskPlan
from model.network import ForwardResult
from objective.canonical import canonicalize_instances
from synthdata.codec import write_pgm, write_ppm
from synthdata.scene import MultiGranularSample
from tokenizer.layout import TokenLayout
from tokenizer.patches import from_patches
from utils.errors import FormatError
from utils.images import shade_masked, to_gray8, upscale
from utils.json_utils import dump_json, read_json

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# instance/semantic PGMs mark hidden pixels with this value
MASKED_PIXEL = 255


def save_attention(path: PathLike, weights: np.ndarray, source_positions: np.ndarray, layer: int, head: int) -> None:
    dump_json(
        path,
        {
            "layer": int(layer),
            "head": int(head),
            "source_positions": [int(p) for p in source_positions],
            "weights": np.asarray(weights, dtype=np.float64).tolist(),
        },
    )


def load_attention(path: PathLike) -> tuple[np.ndarray, dict[str, Any]]:
    payload = read_json(path)
    try:
        weights = np.asarray(payload["weights"], dtype=np.float64)
        meta = {k: payload[k] for k in ("layer", "head", "source_positions")}
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed attention export: {exc}", str(path)) from exc
    if weights.ndim != 2 or weights.shape[0] != weights.shape[1] or weights.shape[0] != len(meta["source_positions"]):
        raise FormatError(f"attention matrix shape {weights.shape} does not match its positions", str(path))
    return weights, meta


def render_attention(path: PathLike, weights: np.ndarray, scale: int = 4) -> None:
    write_pgm(path, upscale(to_gray8(weights), scale))


def pixel_mask(mask: np.ndarray, layout: TokenLayout) -> np.ndarray:
    """Length-N patch mask -> H×W boolean pixel mask."""
    return upscale(np.asarray(mask, dtype=bool).reshape(layout.grid, layout.grid), layout.patch_size)


def prediction_maps(result: ForwardResult, layout: TokenLayout, class_count: int, k_max: int) -> dict[str, np.ndarray]:
    """Per-pixel argmax for S and I, clamped RGB for R."""
    size, pixels = layout.image_size, layout.patch_size**2
    maps = {}
    for g, classes in (("S", class_count), ("I", k_max + 1)):
        logits = result.predictions[g].data.reshape(layout.n, pixels, classes)
        maps[g] = from_patches(logits.argmax(axis=-1), layout.patch_size, size, 1)[..., 0]
    rgb = result.predictions["R"].data.astype(np.float64)
    maps["R"] = np.clip(from_patches(rgb, layout.patch_size, size, 3), 0.0, 1.0)
    return maps


def write_reconstruction(
    out_dir: PathLike,
    sample: MultiGranularSample,
    plan: MaskPlan,
    result: ForwardResult,
    layout: TokenLayout,
    class_count: int,
    k_max: int,
) -> list[Path]:
    """Write masked-input / prediction / target triplets for every granularity."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    predicted = prediction_maps(result, layout, class_count, k_max)
    targets = {
        "S": sample.semantic.astype(np.int64),
        "I": canonicalize_instances(sample.instance, k_max),
        "R": sample.rgb,
    }
    written = []
    for g in GRANULARITIES:
        hidden = pixel_mask(plan.masks[g], layout)
        if g == "R":
            files = {
                "masked": (write_ppm, shade_masked(targets[g], hidden)),
                "pred": (write_ppm, predicted[g]),
                "target": (write_ppm, targets[g]),
            }
            suffix = "ppm"
        else:
            masked = np.where(hidden, MASKED_PIXEL, targets[g])
            files = {"masked": (write_pgm, masked), "pred": (write_pgm, predicted[g]), "target": (write_pgm, targets[g])}
            suffix = "pgm"
        for role, (writer, image) in files.items():
            path = out / f"{g}_{role}.{suffix}"
            writer(path, image)
            written.append(path)
    logger.info("Wrote %d reconstruction images to %s", len(written), out)
    return written
