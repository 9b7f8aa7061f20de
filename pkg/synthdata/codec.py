"""
Binary Netpbm codecs: P6 (8-bit RGB) and P5 (8- or 16-bit grey, big-endian words).

Readers raise FormatError naming the file and never return partial images.
"""

from pathlib import Path
from typing import Union

import numpy as np

from utils.errors import FormatError

PathLike = Union[str, Path]


def _header(magic: bytes, width: int, height: int, maxval: int) -> bytes:
    return magic + b"\n" + f"{width} {height}\n{maxval}\n".encode("ascii")


def write_ppm(path: PathLike, rgb: np.ndarray) -> None:
    """Write an H×W×3 image with values in [0, 1] as 8-bit P6."""
    height, width, _ = rgb.shape
    pixels = np.round(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8)
    Path(path).write_bytes(_header(b"P6", width, height, 255) + pixels.tobytes())


def write_pgm(path: PathLike, values: np.ndarray, maxval: int = 255) -> None:
    """Write an H×W integer map as P5; maxval > 255 selects 16-bit big-endian samples."""
    if values.size and (values.min() < 0 or values.max() > maxval):
        raise FormatError(f"values outside [0, {maxval}]", str(path))
    height, width = values.shape
    dtype = ">u2" if maxval > 255 else np.uint8
    Path(path).write_bytes(_header(b"P5", width, height, maxval) + values.astype(dtype).tobytes())


def _read_tokens(blob: bytes, count: int, path: PathLike) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated header", str(path))
        tokens.append(blob[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def _read_netpbm(path: PathLike, magic: bytes, channels: int) -> tuple[np.ndarray, int]:
    path = Path(path)
    blob = path.read_bytes()
    tokens, offset = _read_tokens(blob, 4, path)
    if tokens[0] != magic:
        raise FormatError(f"expected magic {magic.decode()}, found {tokens[0][:8]!r}", str(path))
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"malformed header: {exc}", str(path)) from exc
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise FormatError(f"invalid header values {width}x{height} maxval {maxval}", str(path))
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    expected = width * height * channels * dtype.itemsize
    raster = blob[offset:]
    if len(raster) != expected:
        raise FormatError(f"raster has {len(raster)} bytes, expected {expected}", str(path))
    values = np.frombuffer(raster, dtype=dtype)
    if values.size and values.max() > maxval:
        raise FormatError(f"sample exceeds maxval {maxval}", str(path))
    shape = (height, width, channels) if channels > 1 else (height, width)
    return values.reshape(shape), maxval


def read_ppm(path: PathLike) -> np.ndarray:
    pixels, maxval = _read_netpbm(path, b"P6", 3)
    return pixels.astype(np.float64) / float(maxval)


def read_pgm(path: PathLike) -> np.ndarray:
    values, _ = _read_netpbm(path, b"P5", 1)
    return values.astype(np.int64)
