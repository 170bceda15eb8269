"""Bitmap compression for 2-D tiles/kernels and FC weight columns.

A compressed block stores a presence bit per element (1 = nonzero) plus the
dense list of nonzero values in row-major scan order, and the explicit
nonzero count so schedulers can query N_NZE without touching the bitmap.

On-disk layout per block: u16 data_length, bitmap packed MSB-first and padded
to a byte boundary, then the values as little-endian int16. A container file
holds a block count, an index table (rows, cols, payload offset per block),
then the payloads. Compressed byte size is therefore
2 + ceil(rows*cols/8) + 2*data_length, monotone nonincreasing in sparsity.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ColumnMismatch, CorruptBlock, ShapeMismatch

HEADER_BYTES = 2  # u16 data_length


@dataclass
class CompressedBlock:
    """Bitmap + nonzero values of one 2-D block."""

    bitmap: np.ndarray  # uint8 0/1, flat, length rows*cols, row-major
    values: np.ndarray  # int16 nonzeros in scan order
    block_dims: tuple[int, int]

    def __post_init__(self):
        self.bitmap = np.asarray(self.bitmap, dtype=np.uint8).ravel()
        self.values = np.asarray(self.values, dtype=np.int16).ravel()
        self.block_dims = (int(self.block_dims[0]), int(self.block_dims[1]))

    @property
    def data_length(self) -> int:
        return int(self.values.size)

    def validate(self) -> None:
        rows, cols = self.block_dims
        if rows < 1 or cols < 1:
            raise ShapeMismatch(f"block dims must be >= 1x1, got {self.block_dims}")
        if self.bitmap.size != rows * cols:
            raise CorruptBlock(
                f"bitmap has {self.bitmap.size} bits, block is {rows}x{cols}"
            )
        pop = int(self.bitmap.sum())
        if pop != self.data_length:
            raise CorruptBlock(
                f"bitmap popcount {pop} != data_length {self.data_length}"
            )
        if self.data_length and not self.values.all():
            raise CorruptBlock("stored values must be nonzero")


def compress(block: np.ndarray) -> CompressedBlock:
    """Compress a dense 2-D block. Round-trips exactly with decompress."""
    a = np.asarray(block)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeMismatch(f"expected a 2-D block of extent >= 1x1, got {a.shape}")
    flat = np.ascontiguousarray(a, dtype=np.int16).ravel()
    mask = flat != 0
    return CompressedBlock(mask.astype(np.uint8), flat[mask], a.shape)


def decompress(cb: CompressedBlock) -> np.ndarray:
    cb.validate()
    out = np.zeros(cb.bitmap.size, dtype=np.int16)
    out[cb.bitmap != 0] = cb.values
    return out.reshape(cb.block_dims)


def decompress_coords(cb: CompressedBlock) -> np.ndarray:
    """(row, col) positions of the nonzeros, row-major order, shape (n, 2).

    The i-th coordinate pairs with the i-th stored value.
    """
    cb.validate()
    idx = np.flatnonzero(cb.bitmap)
    cols = cb.block_dims[1]
    return np.stack([idx // cols, idx % cols], axis=1).astype(np.int64)


def compress_fc_column(column: np.ndarray) -> CompressedBlock:
    """Compress one FC weight column; block dims are (C_o, 1)."""
    col = np.asarray(column)
    if col.ndim == 2:
        if col.shape[1] != 1:
            raise ColumnMismatch(f"expected a single column, got shape {col.shape}")
        col = col[:, 0]
    if col.ndim != 1:
        raise ColumnMismatch(f"expected a 1-D column, got shape {col.shape}")
    return compress(col.reshape(-1, 1))


def decompress_fc_column(cb: CompressedBlock) -> tuple[np.ndarray, np.ndarray]:
    """Return (row indices, values) of a compressed column."""
    if cb.block_dims[1] != 1:
        raise ColumnMismatch(f"block dims {cb.block_dims} are not a column")
    coords = decompress_coords(cb)
    return coords[:, 0], cb.values.copy()


def block_bytes(rows: int, cols: int, data_length: int) -> int:
    """On-disk byte size of a block: header + padded bitmap + values."""
    return HEADER_BYTES + (rows * cols + 7) // 8 + 2 * data_length


def compressed_size_bytes(cb: CompressedBlock) -> int:
    return block_bytes(*cb.block_dims, cb.data_length)


_MAGIC = b"SBMC"
_VERSION = 1


def write_blocks(path, blocks: list[CompressedBlock]) -> int:
    """Write a container file of compressed blocks; returns bytes written."""
    payloads = []
    index = []
    offset = 0
    for cb in blocks:
        cb.validate()
        packed = np.packbits(cb.bitmap).tobytes()
        payload = (
            struct.pack("<H", cb.data_length)
            + packed
            + cb.values.astype("<i2").tobytes()
        )
        index.append(struct.pack("<HHI", cb.block_dims[0], cb.block_dims[1], offset))
        payloads.append(payload)
        offset += len(payload)
    blob = (
        _MAGIC
        + struct.pack("<HI", _VERSION, len(blocks))
        + b"".join(index)
        + b"".join(payloads)
    )
    Path(path).write_bytes(blob)
    return len(blob)


def read_blocks(path) -> list[CompressedBlock]:
    blob = Path(path).read_bytes()
    if blob[:4] != _MAGIC:
        raise CorruptBlock(f"{path} is not a block container")
    version, count = struct.unpack_from("<HI", blob, 4)
    if version != _VERSION:
        raise CorruptBlock(f"unsupported container version {version}")
    idx_at = 4 + 6
    data_at = idx_at + 8 * count
    blocks = []
    for k in range(count):
        rows, cols, offset = struct.unpack_from("<HHI", blob, idx_at + 8 * k)
        at = data_at + offset
        (n,) = struct.unpack_from("<H", blob, at)
        at += 2
        nbits = rows * cols
        nbytes = (nbits + 7) // 8
        bits = np.unpackbits(np.frombuffer(blob, np.uint8, nbytes, at))[:nbits]
        at += nbytes
        values = np.frombuffer(blob, "<i2", n, at).astype(np.int16)
        cb = CompressedBlock(bits, values, (rows, cols))
        cb.validate()
        blocks.append(cb)
    return blocks
