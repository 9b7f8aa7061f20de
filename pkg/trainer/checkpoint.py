"""
Checkpoint directory layout:

    manifest.json   names, shapes, dtype, byte offsets, step, config echo
    params.bin      parameter elements, little-endian, manifest order
    optim.bin       first then second moment of every parameter, same order
"""

import json
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from config.configuration import RunConfig
from model.params import ModelParams, parameter_shapes
from numerics.tensor import Tensor
from trainer.optim import OptimState
from utils.errors import CheckpointError
from utils.json_utils import dump_json

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST = "manifest.json"
PARAMS_BLOB = "params.bin"
OPTIM_BLOB = "optim.bin"
_DTYPES = {"float32": "<f4", "float64": "<f8"}

PathLike = Union[str, Path]


class TensorEntry(BaseModel):
    name: str
    shape: list[int]
    offset: int
    m_offset: int
    v_offset: int


class CheckpointManifest(BaseModel):
    format_version: int = FORMAT_VERSION
    dtype: str
    step: int
    epoch: int = 0
    config: dict[str, Any] = Field(default_factory=dict)
    tensors: list[TensorEntry] = Field(default_factory=list)
    params_bytes: int
    optim_bytes: int


def save_checkpoint(
    directory: PathLike,
    params: ModelParams,
    state: OptimState,
    config: RunConfig,
    epoch: int = 0,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dtype_name = np.dtype(params.tensors()[0].data.dtype).name
    little = _DTYPES[dtype_name]
    itemsize = np.dtype(little).itemsize

    entries, param_chunks, optim_chunks = [], [], []
    offset = optim_offset = 0
    for name, tensor in params.items():
        size = tensor.data.size * itemsize
        entries.append(
            TensorEntry(
                name=name,
                shape=list(tensor.shape),
                offset=offset,
                m_offset=optim_offset,
                v_offset=optim_offset + size,
            )
        )
        param_chunks.append(np.ascontiguousarray(tensor.data, dtype=little).tobytes())
        optim_chunks.append(np.ascontiguousarray(state.m[name], dtype=little).tobytes())
        optim_chunks.append(np.ascontiguousarray(state.v[name], dtype=little).tobytes())
        offset += size
        optim_offset += 2 * size

    manifest = CheckpointManifest(
        dtype=dtype_name,
        step=state.step,
        epoch=epoch,
        config=config.model_dump(mode="json"),
        tensors=entries,
        params_bytes=offset,
        optim_bytes=optim_offset,
    )
    (directory / PARAMS_BLOB).write_bytes(b"".join(param_chunks))
    (directory / OPTIM_BLOB).write_bytes(b"".join(optim_chunks))
    dump_json(directory / MANIFEST, manifest.model_dump())
    logger.info("Saved checkpoint at step %d to %s", state.step, directory)
    return directory


def read_manifest(directory: PathLike) -> CheckpointManifest:
    path = Path(directory) / MANIFEST
    try:
        return CheckpointManifest.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise CheckpointError(f"invalid checkpoint manifest: {exc}", str(path)) from exc


def _expected_diff(manifest: CheckpointManifest, config: RunConfig) -> list[str]:
    expected = parameter_shapes(config.model, config.scene.class_count, config.scene.k_max)
    found = [(e.name, tuple(e.shape)) for e in manifest.tensors]
    diff = []
    for name, shape in expected:
        match = [s for n, s in found if n == name]
        if not match:
            diff.append(f"missing {name} {list(shape)}")
        elif match[0] != shape:
            diff.append(f"{name}: expected shape {list(shape)}, found {list(match[0])}")
    known = {name for name, _ in expected}
    diff += [f"unexpected {n} {list(s)}" for n, s in found if n not in known]
    return diff


def load_checkpoint(directory: PathLike, config: Optional[RunConfig] = None) -> tuple[ModelParams, OptimState, CheckpointManifest]:
    """
    Restore parameters and optimizer state bit-for-bit.

    Blob sizes and offsets are checked against the manifest, and against the
    parameter layout of ``config`` (or of the echoed config when omitted).
    """
    directory = Path(directory)
    manifest = read_manifest(directory)
    if manifest.format_version != FORMAT_VERSION:
        raise CheckpointError(
            "unsupported checkpoint", str(directory), [f"format_version: expected {FORMAT_VERSION}, found {manifest.format_version}"]
        )
    if manifest.dtype not in _DTYPES:
        raise CheckpointError("unsupported checkpoint", str(directory), [f"dtype: expected one of {sorted(_DTYPES)}, found {manifest.dtype}"])
    if config is None:
        try:
            config = RunConfig.model_validate(manifest.config)
        except ValidationError as exc:
            raise CheckpointError(f"manifest config echo is invalid: {exc}", str(directory)) from exc

    diff = _expected_diff(manifest, config)
    blobs = {}
    for blob_name, declared in ((PARAMS_BLOB, manifest.params_bytes), (OPTIM_BLOB, manifest.optim_bytes)):
        blob_path = directory / blob_name
        blob = blob_path.read_bytes()
        if len(blob) != declared:
            diff.append(f"{blob_name}: expected {declared} bytes, found {len(blob)}")
        blobs[blob_name] = blob
    little = _DTYPES[manifest.dtype]
    itemsize = np.dtype(little).itemsize
    if not diff:
        for entry in manifest.tensors:
            size = int(np.prod(entry.shape)) * itemsize
            if entry.offset + size > manifest.params_bytes or entry.v_offset + size > manifest.optim_bytes:
                diff.append(f"{entry.name}: offsets run past the end of the blobs")
    if diff:
        raise CheckpointError("checkpoint does not match its manifest", str(directory), diff)

    def _slice(blob: bytes, start: int, shape: list[int]) -> np.ndarray:
        count = int(np.prod(shape))
        array = np.frombuffer(blob, dtype=little, count=count, offset=start).reshape(shape)
        return array.astype(manifest.dtype)

    tensors: "OrderedDict[str, Tensor]" = OrderedDict()
    state = OptimState(step=manifest.step)
    for entry in manifest.tensors:
        tensor = Tensor(np.zeros(0), requires_grad=True)
        tensor.data = _slice(blobs[PARAMS_BLOB], entry.offset, entry.shape)
        tensors[entry.name] = tensor
        state.m[entry.name] = _slice(blobs[OPTIM_BLOB], entry.m_offset, entry.shape)
        state.v[entry.name] = _slice(blobs[OPTIM_BLOB], entry.v_offset, entry.shape)
    logger.info("Loaded checkpoint at step %d from %s", manifest.step, directory)
    return ModelParams(tensors), state, manifest
