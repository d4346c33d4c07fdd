"""The SIMD1 binary tensor container.

Layout (all integers little-endian)::

    b"SIMD1"            magic
    u32                 format version (1)
    u32                 number of tensors
    per tensor:
        u32             name length in bytes
        bytes           UTF-8 name
        u32             rank
        u64 * rank      extents
        f64 * product   values, row-major

The same container stores model checkpoints and dataset episode tensors.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from simdet.errors import CheckpointError

if TYPE_CHECKING:
    from collections.abc import Mapping

    from simdet.tensorcore.optim import ParamStore

MAGIC = b"SIMD1"
VERSION = 1
BUFFER_PREFIX = "buffer/"
META_PREFIX = "meta/"


def encode_tensors(tensors: Mapping[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, value in tensors.items():
        value = np.ascontiguousarray(value, dtype="<f8")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack(f"<I{value.ndim}Q", value.ndim, *value.shape))
        chunks.append(value.tobytes(order="C"))
    return b"".join(chunks)


def decode_tensors(blob: bytes, source: Path | str | None = None) -> dict[str, np.ndarray]:
    view = memoryview(blob)
    if bytes(view[:len(MAGIC)]) != MAGIC:
        raise CheckpointError("not a SIMD1 file (bad magic bytes)", source)
    pos = len(MAGIC)

    def read(fmt: str) -> tuple:
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(view):
            raise CheckpointError("file is truncated", source)
        values = struct.unpack_from(fmt, view, pos)
        pos += size
        return values

    version, count = read("<II")
    if version != VERSION:
        raise CheckpointError(f"unsupported format version {version}", source)
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = read("<I")
        (name,) = read(f"<{name_len}s")
        (rank,) = read("<I")
        extents = read(f"<{rank}Q")
        (values,) = read(f"<{8 * int(np.prod(extents, dtype=np.int64))}s")
        name = name.decode("utf-8")
        if name in tensors:
            raise CheckpointError(f"duplicate tensor name {name!r}", source)
        tensors[name] = np.frombuffer(values, dtype="<f8").reshape(extents).astype(np.float64)
    if pos != len(view):
        raise CheckpointError(f"{len(view) - pos} trailing bytes after the last tensor", source)
    return tensors


def write_tensors(path: Path, tensors: Mapping[str, np.ndarray]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_tensors(tensors))


def read_tensors(path: Path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise CheckpointError("checkpoint file does not exist", path) from None
    return decode_tensors(blob, path)


def save_checkpoint(path: Path, params: ParamStore, meta: Mapping[str, float] | None = None) -> None:
    tensors = {name: tensor.data for name, tensor in params.items()}
    tensors.update((BUFFER_PREFIX + name, value) for name, value in params.buffers.items())
    tensors.update((META_PREFIX + key, np.array([value], dtype=np.float64)) for key, value in (meta or {}).items())
    write_tensors(path, tensors)


def load_checkpoint(path: Path, params: ParamStore) -> dict[str, float]:
    """Load values into ``params`` and return the stored bookkeeping scalars."""
    tensors = read_tensors(path)
    values, meta = {}, {}
    for name, value in tensors.items():
        if name.startswith(META_PREFIX):
            meta[name.removeprefix(META_PREFIX)] = float(value.reshape(-1)[0])
        else:
            values[name.removeprefix(BUFFER_PREFIX)] = value
    try:
        params.load(values)
    except ValueError as err:
        raise CheckpointError(str(err), path) from None
    return meta
