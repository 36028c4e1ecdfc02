"""
Binary checkpoint format::

    magic   8 bytes  b"RADCKPT\\0"
    version u32
    count   u32
    count × { name_len u16, name utf-8, ndim u8, dims u32 × ndim, payload float32 × prod(dims) }

All integers and floats are little-endian; payloads are row-major.
"""
import logging
import struct
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

import conf
from tensor_substrate.exceptions import CheckpointError

logger = logging.getLogger(__name__)

_FLOAT = np.dtype("<f4")


def save_checkpoint(path: Union[str, Path], tensors: Mapping[str, np.ndarray]):
    chunks = [conf.CHECKPOINT_MAGIC, struct.pack("<II", conf.CHECKPOINT_VERSION, len(tensors))]
    for name, array in tensors.items():
        encoded = name.encode("utf-8")
        array = np.ascontiguousarray(array, dtype=_FLOAT)
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack(f"<B{array.ndim}I", array.ndim, *array.shape))
        chunks.append(array.tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))
    logger.debug(f"saved {len(tensors)} tensors to {path}")


def load_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """
    Read a checkpoint written by :func:`save_checkpoint`.

    :raises CheckpointError: if the file is missing, has a bad magic or version, or is truncated.
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    magic = conf.CHECKPOINT_MAGIC
    if not blob.startswith(magic):
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
    offset = len(magic)

    def take(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(blob):
            raise CheckpointError(f"{path} is truncated")
        values = struct.unpack_from(fmt, blob, offset)
        offset += size
        return values

    version, count = take("<II")
    if version != conf.CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    tensors = {}
    for _ in range(count):
        (name_len,) = take("<H")
        if offset + name_len > len(blob):
            raise CheckpointError(f"{path} is truncated")
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = take("<B")
        shape = take(f"<{ndim}I") if ndim else ()
        size = int(np.prod(shape)) * _FLOAT.itemsize
        if offset + size > len(blob):
            raise CheckpointError(f"{path} is truncated")
        tensors[name] = np.frombuffer(blob, dtype=_FLOAT, count=size // _FLOAT.itemsize,
                                      offset=offset).reshape(shape).astype(np.float32)
        offset += size
    if offset != len(blob):
        raise CheckpointError(f"{path} has {len(blob) - offset} trailing bytes")
    return tensors
