import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from config.configuration import SceneConfig
from synthdata.codec import read_pgm, read_ppm, write_pgm, write_ppm
from synthdata.scene import MultiGranularSample, generate_sample
from utils.errors import ContractError, FormatError
from utils.json_utils import dump_json

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
PathLike = Union[str, Path]


class SampleMeta(BaseModel):
    seed: int
    index: int
    image_size: int
    class_count: int
    shape_descriptors: list[dict[str, Any]] = Field(default_factory=list)


class ManifestEntry(BaseModel):
    path: str
    index: int
    seed: int


class DatasetManifest(BaseModel):
    format_version: int = FORMAT_VERSION
    scene: SceneConfig
    samples: list[ManifestEntry] = Field(default_factory=list)


def save_sample(sample: MultiGranularSample, directory: PathLike, class_count: int) -> Path:
    """Write rgb.ppm, instance.pgm (16-bit), semantic.pgm (8-bit) and meta.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_ppm(directory / "rgb.ppm", sample.rgb)
    write_pgm(directory / "instance.pgm", sample.instance, maxval=65535)
    write_pgm(directory / "semantic.pgm", sample.semantic, maxval=255)
    meta = SampleMeta(
        seed=sample.seed,
        index=sample.index,
        image_size=sample.image_size,
        class_count=class_count,
        shape_descriptors=sample.shapes,
    )
    dump_json(directory / "meta.json", meta.model_dump())
    return directory


def load_sample(directory: PathLike) -> MultiGranularSample:
    directory = Path(directory)
    meta_path = directory / "meta.json"
    try:
        meta = SampleMeta.model_validate(json.loads(meta_path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise FormatError(f"invalid sample metadata: {exc}", str(meta_path)) from exc

    rgb = read_ppm(directory / "rgb.ppm")
    instance = read_pgm(directory / "instance.pgm")
    semantic = read_pgm(directory / "semantic.pgm")
    if not (rgb.shape[:2] == instance.shape == semantic.shape):
        raise FormatError(
            f"dimension mismatch: rgb {rgb.shape[:2]}, instance {instance.shape}, semantic {semantic.shape}",
            str(directory),
        )
    if semantic.size and semantic.max() >= meta.class_count:
        raise FormatError(f"class id {int(semantic.max())} >= class count {meta.class_count}", str(directory / "semantic.pgm"))
    return MultiGranularSample(
        rgb=rgb,
        instance=instance.astype(np.uint16),
        semantic=semantic.astype(np.uint8),
        index=meta.index,
        seed=meta.seed,
        shapes=meta.shape_descriptors,
    )


def _sample_dir(index: int) -> str:
    return f"sample_{index:06d}"


def generate_dataset(cfg: SceneConfig, count: int, out_dir: PathLike, workers: int = 1) -> DatasetManifest:
    """Write samples 0..count-1 plus manifest.json; samples never share state, so workers may fan out."""
    if count < 1:
        raise ContractError(f"dataset count must be >= 1, got {count}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def _one(index: int) -> ManifestEntry:
        sample = generate_sample(cfg, index)
        save_sample(sample, out_dir / _sample_dir(index), cfg.class_count)
        if (index + 1) % 10 == 0:
            logger.info("Generated %d/%d samples", index + 1, count)
        return ManifestEntry(path=_sample_dir(index), index=index, seed=sample.seed)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_one, range(count)))
    else:
        entries = [_one(i) for i in range(count)]

    manifest = DatasetManifest(scene=cfg, samples=entries)
    dump_json(out_dir / "manifest.json", manifest.model_dump(mode="json"))
    logger.info("Dataset of %d samples written to %s", count, out_dir)
    return manifest


class Dataset:
    """A generated dataset on disk; samples load lazily and stay cached."""

    def __init__(self, root: PathLike):
        self.root = Path(root)
        manifest_path = self.root / "manifest.json"
        try:
            self.manifest = DatasetManifest.model_validate(json.loads(manifest_path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, ValidationError) as exc:
            raise FormatError(f"invalid dataset manifest: {exc}", str(manifest_path)) from exc
        if self.manifest.format_version != FORMAT_VERSION:
            raise FormatError(f"unsupported format_version {self.manifest.format_version}", str(manifest_path))
        self._cache: dict[int, MultiGranularSample] = {}

    @property
    def scene(self) -> SceneConfig:
        return self.manifest.scene

    def __len__(self) -> int:
        return len(self.manifest.samples)

    def __getitem__(self, position: int) -> MultiGranularSample:
        if not 0 <= position < len(self):
            raise IndexError(f"sample {position} out of range for dataset of {len(self)}")
        if position not in self._cache:
            self._cache[position] = load_sample(self.root / self.manifest.samples[position].path)
        return self._cache[position]
