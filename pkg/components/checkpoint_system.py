import logging
import struct
import zlib
from pathlib import Path

import numpy as np

from utils.exceptions import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"RVSNTCKP"
FORMAT_VERSION = 1

# little-endian throughout
_U8 = struct.Struct('<B')
_U16 = struct.Struct('<H')
_U32 = struct.Struct('<I')


def _write_text(handle, text):
    encoded = text.encode('utf-8')
    handle.write(_U16.pack(len(encoded)))
    handle.write(encoded)


def save_checkpoint(path, architecture, params):
    """
    Write named float64 parameter blocks: magic, format version, architecture tag, then per block its name,
    shape, row-major little-endian bytes and a CRC32 of those bytes.
    :param path: destination file
    :param architecture: architecture tag, e.g. 'cnn'
    :param params: dict name -> array, written in insertion order
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('wb') as handle:
        handle.write(MAGIC)
        handle.write(_U16.pack(FORMAT_VERSION))
        _write_text(handle, architecture)
        handle.write(_U32.pack(len(params)))
        for name, array in params.items():
            data = np.ascontiguousarray(array, dtype='<f8').tobytes()
            _write_text(handle, name)
            handle.write(_U8.pack(array.ndim))
            for dim in array.shape:
                handle.write(_U32.pack(dim))
            handle.write(data)
            handle.write(_U32.pack(zlib.crc32(data)))
    logger.info(f"Saved {architecture} checkpoint with {len(params)} blocks to {path}")


class _Reader:
    def __init__(self, payload, path):
        self.payload = payload
        self.offset = 0
        self.path = path

    def take(self, size):
        if self.offset + size > len(self.payload):
            raise CheckpointError(f"{self.path}: truncated checkpoint")
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt):
        return fmt.unpack(self.take(fmt.size))[0]

    def text(self):
        return self.take(self.unpack(_U16)).decode('utf-8')


def load_checkpoint(path):
    """
    Read a checkpoint written by save_checkpoint.
    :return: (architecture, dict name -> array)
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Checkpoint not found: {path}")

    reader = _Reader(path.read_bytes(), path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version = reader.unpack(_U16)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")

    architecture = reader.text()
    params = {}
    for _ in range(reader.unpack(_U32)):
        name = reader.text()
        shape = tuple(reader.unpack(_U32) for _ in range(reader.unpack(_U8)))
        size = int(np.prod(shape, dtype=np.int64)) * 8
        data = reader.take(size)
        if zlib.crc32(data) != reader.unpack(_U32):
            raise CheckpointError(f"{path}: checksum mismatch in block '{name}'")
        params[name] = np.frombuffer(data, dtype='<f8').reshape(shape).astype(np.float64)

    if reader.offset != len(reader.payload):
        raise CheckpointError(f"{path}: trailing bytes after the last block")
    return architecture, params
